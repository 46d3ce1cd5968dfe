#pragma once

// Random generators and small oracles shared by the unit and acceptance tests.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "lep/linalg.hpp"

namespace lep::test {

using linalg::Complex;
using linalg::ComplexMatrix;
using linalg::ComplexVector;

class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(eng_); }
    double normal() { return std::normal_distribution<double>(0.0, 1.0)(eng_); }
    int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(eng_); }
    Complex complex_normal() { return {normal(), normal()}; }

    ComplexMatrix matrix(std::size_t n) {
        ComplexMatrix m(n);
        for (std::size_t r = 0; r < n; ++r)
            for (std::size_t c = 0; c < n; ++c) m(r, c) = complex_normal();
        return m;
    }

    ComplexMatrix hermitian(std::size_t n) {
        const auto a = matrix(n);
        return Complex(0.5) * (a + linalg::adjoint(a));
    }

    ComplexVector vector(std::size_t n) {
        ComplexVector v(n);
        for (auto& x : v) x = complex_normal();
        return v;
    }

    /// Random density matrix: A A^dag / tr.
    ComplexMatrix density(std::size_t n) {
        const auto a = matrix(n);
        auto rho = a * linalg::adjoint(a);
        rho *= 1.0 / linalg::trace(rho).real();
        return rho;
    }

private:
    std::mt19937_64 eng_;
};

inline double max_abs(const ComplexMatrix& a) {
    double m = 0.0;
    for (const auto& z : a.entries()) m = std::max(m, std::abs(z));
    return m;
}

inline double max_abs(const ComplexVector& a) {
    double m = 0.0;
    for (const auto& z : a) m = std::max(m, std::abs(z));
    return m;
}

/// Leibniz expansion over permutations (dim <= 5).
inline Complex det_leibniz(const ComplexMatrix& m) {
    const std::size_t n = m.dim();
    std::vector<std::size_t> p(n);
    for (std::size_t i = 0; i < n; ++i) p[i] = i;
    Complex sum = 0.0;
    do {
        int inv = 0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j)
                if (p[i] > p[j]) ++inv;
        Complex term = inv % 2 ? -1.0 : 1.0;
        for (std::size_t i = 0; i < n; ++i) term *= m(i, p[i]);
        sum += term;
    } while (std::next_permutation(p.begin(), p.end()));
    return sum;
}

/// Sum of all k x k principal minors.
inline Complex principal_minor_sum(const ComplexMatrix& m, std::size_t k) {
    const std::size_t n = m.dim();
    Complex sum = 0.0;
    for (unsigned mask = 0; mask < (1u << n); ++mask) {
        if (static_cast<std::size_t>(__builtin_popcount(mask)) != k) continue;
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < n; ++i)
            if (mask & (1u << i)) idx.push_back(i);
        ComplexMatrix sub(k);
        for (std::size_t r = 0; r < k; ++r)
            for (std::size_t c = 0; c < k; ++c) sub(r, c) = m(idx[r], idx[c]);
        sum += k == 0 ? Complex(1.0) : det_leibniz(sub);
    }
    return sum;
}

}  // namespace lep::test
