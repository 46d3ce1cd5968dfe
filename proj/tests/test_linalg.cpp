#include <doctest.h>

#include <cmath>
#include <limits>

#include "lep/error.hpp"
#include "lep/linalg.hpp"
#include "lep/models.hpp"
#include "support.hpp"

using namespace lep;
using namespace lep::linalg;
using lep::test::max_abs;
using lep::test::Rng;

TEST_SUITE("linalg") {

TEST_CASE("kron of identities is the identity") {
    CHECK(kron(ComplexMatrix::identity(2), ComplexMatrix::identity(2)) == ComplexMatrix::identity(4));
}

TEST_CASE("vec_row(AXB) == (A kron B^T) vec_row(X) on 50 random triples") {
    Rng rng(11);
    for (int trial = 0; trial < 50; ++trial) {
        const auto a = rng.matrix(2), x = rng.matrix(2), b = rng.matrix(2);
        const auto lhs = vec_row(a * x * b);
        const auto rhs = kron(a, transpose(b)) * vec_row(x);
        CHECK(max_abs(lhs - rhs) <= 1e-12);
    }
}

TEST_CASE("kron is bilinear") {
    Rng rng(12);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = static_cast<std::size_t>(rng.integer(1, 3));
        const auto a1 = rng.matrix(n), a2 = rng.matrix(n), b = rng.matrix(n);
        const Complex s = rng.complex_normal();
        CHECK(max_abs(kron(a1 + s * a2, b) - (kron(a1, b) + s * kron(a2, b))) <= 1e-12);
        CHECK(max_abs(kron(b, a1 + s * a2) - (kron(b, a1) + s * kron(b, a2))) <= 1e-12);
    }
}

TEST_CASE("unvec_row inverts vec_row") {
    Rng rng(13);
    const auto x = rng.matrix(3);
    CHECK(unvec_row(vec_row(x)) == x);
    CHECK_THROWS_AS(unvec_row(ComplexVector(5)), DimensionMismatch);
}

TEST_CASE("diagonal matrix") {
    const ComplexMatrix m{{1.0, 0.0}, {0.0, Complex(0.0, 2.0)}};
    const auto d = eig(m);
    REQUIRE(d.dim() == 2);
    CHECK(std::abs(d.eigenvalues[0] - Complex(1.0, 0.0)) <= 1e-14);
    CHECK(std::abs(d.eigenvalues[1] - Complex(0.0, 2.0)) <= 1e-14);
    CHECK(std::abs(d.right[0][0] - 1.0) <= 1e-12);
    CHECK(std::abs(d.right[0][1]) <= 1e-12);
    CHECK(std::abs(d.right[1][0]) <= 1e-12);
    CHECK(std::abs(d.right[1][1] - 1.0) <= 1e-12);
}

TEST_CASE("PT Hamiltonian at J = 1, Gamma = 1") {
    const auto d = eig(models::pt_hamiltonian({1.0, 1.0}));
    CHECK(std::abs(d.eigenvalues[0] - std::sqrt(3.0) / 2.0) <= 1e-12);
    CHECK(std::abs(d.eigenvalues[1] + std::sqrt(3.0) / 2.0) <= 1e-12);
    CHECK(std::abs(coalescence_measure(d, 0, 1) - 0.5) <= 1e-10);
}

TEST_CASE("basic Liouvillian at Gamma = 8J has a defective pair") {
    const auto d = eig(models::basic_liouvillian(1.0 / 8.0, 1.0));
    CHECK(std::abs(d.eigenvalues[0]) <= 1e-10);
    CHECK(std::abs(d.eigenvalues[1] + 0.5) <= 1e-10);
    CHECK(std::abs(d.eigenvalues[2] + 0.75) <= 1e-6);
    CHECK(std::abs(d.eigenvalues[3] + 0.75) <= 1e-6);
    CHECK(d.defective[2]);
    CHECK(d.defective[3]);
    CHECK_FALSE(d.defective[0]);
    CHECK_FALSE(d.defective[1]);
    CHECK(d.cluster[2] == d.cluster[3]);
}

TEST_CASE("char_poly of the identity is (lambda - 1)^2") {
    const auto c = char_poly(ComplexMatrix::identity(2));
    REQUIRE(c.size() == 3);
    CHECK(std::abs(c[0] - 1.0) <= 1e-14);
    CHECK(std::abs(c[1] + 2.0) <= 1e-14);
    CHECK(std::abs(c[2] - 1.0) <= 1e-14);
}

TEST_CASE("char_poly of the PT Hamiltonian") {
    for (double J : {0.2, 0.5, 1.3}) {
        for (double G : {0.0, 1.0, 2.5}) {
            const auto c = char_poly(models::pt_hamiltonian({J, G}));
            CHECK(std::abs(c[0] + (J * J - G * G / 4.0)) <= 1e-13);
            CHECK(std::abs(c[1]) <= 1e-13);
            CHECK(std::abs(c[2] - 1.0) <= 1e-15);
        }
    }
}

TEST_CASE("char_poly matches principal-minor sums") {
    Rng rng(21);
    for (int trial = 0; trial < 50; ++trial) {
        const auto m = rng.matrix(4);
        const auto c = char_poly(m);
        for (std::size_t k = 0; k <= 4; ++k) {
            const Complex expect = (k % 2 ? -1.0 : 1.0) * test::principal_minor_sum(m, k);
            CHECK(std::abs(c[4 - k] - expect) <= 1e-10 * (1.0 + std::abs(expect)));
        }
    }
}

TEST_CASE("polynomial_roots recovers known roots") {
    // (z - 1)(z + 2)(z - 3i)
    const Complex i(0.0, 1.0);
    const std::vector<Complex> c{6.0 * i, -2.0 - 3.0 * i, 1.0 - 3.0 * i, 1.0};
    auto r = polynomial_roots(c);
    REQUIRE(r.size() == 3);
    for (Complex z : {Complex(1.0), Complex(-2.0), 3.0 * i}) {
        double best = 1e9;
        for (auto x : r) best = std::min(best, std::abs(x - z));
        CHECK(best <= 1e-12);
    }
    CHECK_THROWS_AS(polynomial_roots(std::vector<Complex>{1.0, 0.0}), InvalidInput);
}

TEST_CASE("coalescence measure") {
    SUBCASE("Hermitian matrices have orthogonal eigenvectors") {
        Rng rng(31);
        for (int trial = 0; trial < 20; ++trial) {
            const auto d = eig(rng.hermitian(3));
            for (std::size_t i = 0; i < 3; ++i)
                for (std::size_t j = i + 1; j < 3; ++j) CHECK(coalescence_measure(d, i, j) <= 1e-10);
        }
    }
    SUBCASE("PT Hamiltonian near its EP") {
        for (double s : {1.0 - 1e-9, 1.0 + 1e-9}) {
            const auto d = eig(models::pt_hamiltonian({0.5 * s, 1.0}));
            CHECK(coalescence_measure(d, 0, 1) >= 1.0 - 1e-6);
        }
    }
    CHECK_THROWS_AS(coalescence_measure(eig(ComplexMatrix::identity(2)), 0, 2), InvalidInput);
}

TEST_CASE("boundary checks") {
    ComplexMatrix bad(2);
    bad(0, 0) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(eig(bad), InvalidInput);
    CHECK_THROWS_AS(eig(ComplexMatrix(17)), DimensionTooLarge);
    CHECK_THROWS_AS(ComplexMatrix(2) * ComplexMatrix(3), DimensionMismatch);
    CHECK_THROWS_AS(solve(ComplexMatrix(2), ComplexVector{1.0, 1.0}), SingularMatrix);
}

TEST_CASE("solve, determinant and eigvalsh") {
    Rng rng(41);
    for (int trial = 0; trial < 20; ++trial) {
        const auto a = rng.matrix(4);
        const auto x = rng.vector(4);
        CHECK(max_abs(solve(a, a * x) - x) <= 1e-9 * (1.0 + max_abs(x)));
        const Complex d = test::det_leibniz(a);
        CHECK(std::abs(determinant(a) - d) <= 1e-11 * (1.0 + std::abs(d)));
    }
    const ComplexMatrix h{{2.0, Complex(0.0, 1.0)}, {Complex(0.0, -1.0), 2.0}};
    const auto w = eigvalsh(h);
    CHECK(std::abs(w[0] - 1.0) <= 1e-12);
    CHECK(std::abs(w[1] - 3.0) <= 1e-12);
}

TEST_CASE("eig invariants on 1000 random matrices") {
    Rng rng(2024);
    const std::size_t dims[] = {2, 3, 4, 8};
    int biorth_checked = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = dims[trial % 4];
        const auto m = rng.matrix(n);
        const auto d = eig(m);
        const double fn = frobenius_norm(m);
        REQUIRE(d.dim() == n);

        Complex sum = 0.0, prod = 1.0;
        for (std::size_t i = 0; i < n; ++i) {
            sum += d.eigenvalues[i];
            prod *= d.eigenvalues[i];
            CHECK(std::abs(norm(d.right[i]) - 1.0) <= 1e-12);
            CHECK(std::abs(norm(d.left[i]) - 1.0) <= 1e-12);
            if (d.defective[i]) continue;
            const auto rr = m * d.right[i] - d.eigenvalues[i] * d.right[i];
            const auto rl = adjoint(m) * d.left[i] - std::conj(d.eigenvalues[i]) * d.left[i];
            CHECK(norm(rr) <= 1e-9 * (1.0 + fn));
            CHECK(norm(rl) <= 1e-9 * (1.0 + fn));
            const auto p = char_poly(m);
            CHECK(std::abs(poly_eval(p, d.eigenvalues[i])) <= 1e-8 * std::pow(1.0 + fn, static_cast<double>(n)));
        }
        CHECK(std::abs(sum - trace(m)) <= 1e-9 * (1.0 + fn));
        if (n <= 4) {
            const Complex det = test::det_leibniz(m);
            CHECK(std::abs(prod - det) <= 1e-8 * std::max(1.0, std::abs(det)));
        }

        if (d.ep_condition < 1e6 && !d.any_defective()) {
            ++biorth_checked;
            for (std::size_t i = 0; i < n; ++i) {
                const Complex nii = dot(d.left[i], d.right[i]);
                for (std::size_t j = 0; j < n; ++j) {
                    const Complex v = dot(d.left[i], d.right[j]) / nii;
                    CHECK(std::abs(v - (i == j ? 1.0 : 0.0)) <= 1e-8);
                }
            }
        }
    }
    CHECK(biorth_checked > 900);
}

TEST_CASE("normalization puts the first component on the positive real axis") {
    Rng rng(51);
    for (int trial = 0; trial < 20; ++trial) {
        const auto d = eig(rng.matrix(3));
        for (const auto& v : d.right) {
            for (const auto& z : v) {
                if (std::abs(z) > 1e-12) {
                    CHECK(std::abs(z.imag()) <= 1e-12);
                    CHECK(z.real() > 0.0);
                    break;
                }
            }
        }
    }
}

TEST_CASE("eig is deterministic") {
    Rng rng(61);
    const auto m = rng.matrix(4);
    const auto a = eig(m), b = eig(m);
    CHECK(a.eigenvalues == b.eigenvalues);
    CHECK(a.right == b.right);
    CHECK(a.left == b.left);
}

TEST_CASE("closest pair and canonical order") {
    const std::vector<Complex> l{Complex(0.0, 1.0), Complex(1.0, 0.0), Complex(0.0, -1.0), Complex(1.0, 0.001)};
    const auto cp = closest_pair(l);
    CHECK(cp.gap == doctest::Approx(0.001));
    CHECK(((cp.i == 1 && cp.j == 3) || (cp.i == 3 && cp.j == 1)));
    const auto order = canonical_order(l, 1.0);
    REQUIRE(order.size() == 4);
    CHECK(order[0] == 3);
    CHECK(order[1] == 1);
    CHECK(order[2] == 0);
    CHECK(order[3] == 2);
}

}  // TEST_SUITE
