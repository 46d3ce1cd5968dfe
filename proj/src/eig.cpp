#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "lep/linalg.hpp"

namespace lep::linalg {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

void check_eig_input(const ComplexMatrix& m) {
    if (m.dim() == 0) throw InvalidInput("empty matrix");
    if (m.dim() > kMaxEigDim) {
        throw DimensionTooLarge("dimension " + std::to_string(m.dim()) + " exceeds " + std::to_string(kMaxEigDim));
    }
    if (!all_finite(m)) throw InvalidInput("matrix has non-finite entries");
}

using LComplex = std::complex<long double>;

/// Characteristic polynomial (ascending, monic) of m / s in extended precision.
std::vector<LComplex> scaled_char_poly(const ComplexMatrix& m, long double s) {
    const std::size_t n = m.dim();
    std::vector<LComplex> a(n * n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) a[i * n + j] = LComplex(m(i, j)) / s;
    std::vector<LComplex> c(n + 1);
    c[n] = 1.0L;
    std::vector<LComplex> b(n * n), ab(n * n);
    for (std::size_t i = 0; i < n; ++i) b[i * n + i] = 1.0L;
    for (std::size_t k = 1; k <= n; ++k) {
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                LComplex acc = 0.0L;
                for (std::size_t l = 0; l < n; ++l) acc += a[i * n + l] * b[l * n + j];
                ab[i * n + j] = acc;
            }
        LComplex tr = 0.0L;
        for (std::size_t i = 0; i < n; ++i) tr += ab[i * n + i];
        const LComplex ck = -tr / static_cast<long double>(k);
        c[n - k] = ck;
        for (std::size_t i = 0; i < n; ++i) ab[i * n + i] += ck;
        std::swap(b, ab);
    }
    return c;
}

/// p(z), p'(z), and a running rounding-error bound for p(z).
template <class C>
struct HornerResult {
    C p;
    C dp;
    typename C::value_type bound;
};

template <class C>
HornerResult<C> horner(std::span<const C> c, C z) {
    const std::size_t n = c.size() - 1;
    C p = c[n];
    C dp = 0;
    auto bound = std::abs(c[n]);
    const auto az = std::abs(z);
    for (std::size_t k = n; k-- > 0;) {
        dp = dp * z + p;
        p = p * z + c[k];
        bound = bound * az + std::abs(c[k]);
    }
    return {p, dp, bound};
}

/// Taylor shift: coefficients of q(w) = p(w + s).
template <class C>
std::vector<C> taylor_shift(std::span<const C> c, C s) {
    std::vector<C> q(c.begin(), c.end());
    const std::size_t n = q.size() - 1;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = n; k-- > i;) q[k] += s * q[k + 1];
    return q;
}

/// Aberth-Ehrlich iteration on a monic polynomial. A root is accepted once its
/// correction drops below `tolerance` (relative) or |p| reaches the rounding floor.
template <class C>
std::vector<C> aberth(std::span<const C> c, const RootOptions& opts) {
    using R = typename C::value_type;
    const R eps = std::numeric_limits<R>::epsilon();
    const std::size_t n = c.size() - 1;
    if (n == 1) return {-c[0]};

    // Start on a circle around the root centroid with radius from the shifted coefficients.
    const C center = -c[n - 1] / static_cast<R>(n);
    const auto shifted = taylor_shift<C>(c, center);
    R radius = 0;
    for (std::size_t k = 0; k < n; ++k)
        radius = std::max(radius, std::pow(std::abs(shifted[k]), R(1) / static_cast<R>(n - k)));
    if (radius == 0) return std::vector<C>(n, center);

    std::vector<C> z(n);
    for (std::size_t k = 0; k < n; ++k) {
        const R angle = R(2) * std::numbers::pi_v<R> * static_cast<R>(k) / static_cast<R>(n) + R(0.4);
        z[k] = center + std::polar(radius, angle);
    }

    std::vector<bool> done(n, false);
    for (int iter = 0; iter < opts.max_iterations; ++iter) {
        bool all_done = true;
        for (std::size_t i = 0; i < n; ++i) {
            if (done[i]) continue;
            const auto h = horner<C>(c, z[i]);
            if (std::abs(h.p) <= R(4) * eps * h.bound) {
                done[i] = true;
                continue;
            }
            all_done = false;
            const C ratio = h.p / h.dp;
            C sum = 0;
            for (std::size_t j = 0; j < n; ++j)
                if (j != i) sum += R(1) / (z[i] - z[j]);
            const C w = ratio / (R(1) - ratio * sum);
            if (!std::isfinite(w.real()) || !std::isfinite(w.imag())) continue;
            z[i] -= w;
            if (std::abs(w) <= static_cast<R>(opts.tolerance) * std::max(R(1), std::abs(z[i]))) done[i] = true;
        }
        if (all_done) return z;
    }
    if (std::all_of(done.begin(), done.end(), [](bool d) { return d; })) return z;
    throw NonConvergence("Aberth iteration did not converge in " + std::to_string(opts.max_iterations) +
                         " iterations");
}

/// Pivot-floored LU solve used by inverse iteration: zero pivots are replaced
/// by `floor` so nearly singular shifted systems still produce the growth we need.
class ShiftedLu {
public:
    ShiftedLu(const ComplexMatrix& a, Complex shift, double floor) : lu_(a), perm_(a.dim()) {
        const std::size_t n = a.dim();
        for (std::size_t i = 0; i < n; ++i) lu_(i, i) -= shift;
        std::iota(perm_.begin(), perm_.end(), 0);
        for (std::size_t k = 0; k < n; ++k) {
            std::size_t piv = k;
            double best = std::abs(lu_(k, k));
            for (std::size_t i = k + 1; i < n; ++i)
                if (std::abs(lu_(i, k)) > best) {
                    best = std::abs(lu_(i, k));
                    piv = i;
                }
            if (piv != k) {
                for (std::size_t j = 0; j < n; ++j) std::swap(lu_(k, j), lu_(piv, j));
                std::swap(perm_[k], perm_[piv]);
            }
            if (std::abs(lu_(k, k)) < floor) {
                lu_(k, k) = lu_(k, k) == 0.0 ? Complex(floor) : floor * lu_(k, k) / std::abs(lu_(k, k));
            }
            for (std::size_t i = k + 1; i < n; ++i) {
                const Complex f = lu_(i, k) / lu_(k, k);
                lu_(i, k) = f;
                for (std::size_t j = k + 1; j < n; ++j) lu_(i, j) -= f * lu_(k, j);
            }
        }
    }

    ComplexVector solve(const ComplexVector& b) const {
        const std::size_t n = b.dim();
        ComplexVector y(n);
        for (std::size_t i = 0; i < n; ++i) {
            Complex s = b[perm_[i]];
            for (std::size_t j = 0; j < i; ++j) s -= lu_(i, j) * y[j];
            y[i] = s;
        }
        for (std::size_t i = n; i-- > 0;) {
            Complex s = y[i];
            for (std::size_t j = i + 1; j < n; ++j) s -= lu_(i, j) * y[j];
            y[i] = s / lu_(i, i);
        }
        return y;
    }

private:
    ComplexMatrix lu_;
    std::vector<std::size_t> perm_;
};

void orthogonalize(ComplexVector& x, std::span<const ComplexVector> against) {
    for (int pass = 0; pass < 2; ++pass)
        for (const auto& q : against) x -= dot(q, x) * q;
}

double residual(const ComplexMatrix& a, Complex lambda, const ComplexVector& x) {
    ComplexVector r = a * x;
    for (std::size_t i = 0; i < x.dim(); ++i) r[i] -= lambda * x[i];
    return norm(r);
}

ComplexVector start_vector(std::size_t n, int variant) {
    ComplexVector x(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double phase = 0.7 * static_cast<double>((k + 1) * (variant + 1)) + 0.3 * variant;
        x[k] = std::polar(1.0 + 0.25 * static_cast<double>((k + variant) % 3), phase);
    }
    return x;
}

ComplexVector inverse_iteration(const ComplexMatrix& a, Complex shift, std::span<const ComplexVector> against,
                                double scale) {
    const std::size_t n = a.dim();
    const ShiftedLu lu(a, shift, kEps * scale);
    ComplexVector best;
    double best_res = std::numeric_limits<double>::infinity();
    for (int variant = 0; variant < 3; ++variant) {
        ComplexVector x = start_vector(n, variant);
        orthogonalize(x, against);
        double nx = norm(x);
        if (nx == 0.0) continue;
        x *= 1.0 / nx;
        for (int it = 0; it < 3; ++it) {
            ComplexVector y = lu.solve(x);
            orthogonalize(y, against);
            const double ny = norm(y);
            if (ny == 0.0 || !std::isfinite(ny)) break;
            x = (1.0 / ny) * y;
        }
        const double res = residual(a, shift, x);
        if (res < best_res) {
            best_res = res;
            best = x;
        }
        if (res <= 1e-13 * scale) break;
    }
    if (best.dim() == 0) throw NonConvergence("inverse iteration produced no vector");
    return normalized(best);
}

/// Union-find on index pairs.
std::vector<int> cluster_by_distance(std::span<const Complex> lambdas, double tol) {
    const std::size_t n = lambdas.size();
    std::vector<int> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](int i) {
        while (parent[i] != i) i = parent[i] = parent[parent[i]];
        return i;
    };
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (std::abs(lambdas[i] - lambdas[j]) < tol) {
                const int a = find(static_cast<int>(i));
                const int b = find(static_cast<int>(j));
                if (a != b) parent[std::max(a, b)] = std::min(a, b);
            }
    std::vector<int> ids(n);
    for (std::size_t i = 0; i < n; ++i) ids[i] = find(static_cast<int>(i));
    return ids;
}

/// Eigenvectors of `a` for the given eigenvalues (already sorted), cluster-aware.
std::vector<ComplexVector> eigenvectors(const ComplexMatrix& a, std::span<const Complex> lambdas,
                                        std::span<const int> cluster, double scale) {
    const std::size_t n = lambdas.size();
    std::vector<ComplexVector> vecs(n);
    const double accept = 1e-10 * scale;
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<ComplexVector> earlier;
        for (std::size_t j = 0; j < i; ++j)
            if (cluster[j] == cluster[i]) earlier.push_back(vecs[j]);
        ComplexVector v = inverse_iteration(a, lambdas[i], {}, scale);
        if (!earlier.empty()) {
            // Semi-simple clusters get an independent basis; defective ones keep the coalesced vector.
            ComplexVector w = inverse_iteration(a, lambdas[i], earlier, scale);
            if (residual(a, lambdas[i], w) <= accept) v = w;
        }
        vecs[i] = std::move(v);
    }
    return vecs;
}

}  // namespace

// ---------------------------------------------------------------------------

std::vector<Complex> char_poly(const ComplexMatrix& m) {
    check_eig_input(m);
    const std::size_t n = m.dim();
    const long double s = frobenius_norm(m);
    std::vector<Complex> c(n + 1);
    c[n] = 1.0;
    if (s == 0.0L) return c;
    const auto lc = scaled_char_poly(m, s);
    long double sk = 1.0L;
    for (std::size_t k = 1; k <= n; ++k) {
        sk *= s;
        c[n - k] = Complex(lc[n - k] * sk);
    }
    return c;
}

Complex poly_eval(std::span<const Complex> ascending, Complex z) {
    Complex p = 0.0;
    for (std::size_t k = ascending.size(); k-- > 0;) p = p * z + ascending[k];
    return p;
}

std::vector<Complex> polynomial_roots(std::span<const Complex> ascending, const RootOptions& opts) {
    if (ascending.size() < 2) return {};
    const std::size_t n = ascending.size() - 1;
    if (ascending[n] == 0.0) throw InvalidInput("polynomial_roots: leading coefficient is zero");
    std::vector<Complex> c(ascending.begin(), ascending.end());
    for (auto& x : c) x /= ascending[n];
    return aberth<Complex>(c, opts);
}

std::vector<std::size_t> canonical_order(std::span<const Complex> eigenvalues, double scale) {
    const double quantum = 1e-11 * (1.0 + scale);
    std::vector<std::size_t> idx(eigenvalues.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        const auto qa = std::llround(eigenvalues[a].real() / quantum);
        const auto qb = std::llround(eigenvalues[b].real() / quantum);
        if (qa != qb) return qa > qb;
        return eigenvalues[a].imag() > eigenvalues[b].imag();
    });
    return idx;
}

std::vector<Complex> eigenvalues(const ComplexMatrix& m) {
    check_eig_input(m);
    const double s = frobenius_norm(m);
    const std::size_t n = m.dim();
    std::vector<Complex> roots(n);
    if (s != 0.0) {
        // Extended precision: a double root then splits by ~sqrt(1e-19) rather than ~sqrt(1e-16).
        const auto c = scaled_char_poly(m, s);
        const auto lroots = aberth<LComplex>(c, RootOptions{});
        for (std::size_t i = 0; i < n; ++i) roots[i] = Complex(lroots[i] * static_cast<long double>(s));
    }
    const auto order = canonical_order(roots, s);
    std::vector<Complex> sorted(n);
    for (std::size_t i = 0; i < n; ++i) sorted[i] = roots[order[i]];
    return sorted;
}

SpectralDecomposition eig(const ComplexMatrix& m) {
    SpectralDecomposition d;
    d.eigenvalues = eigenvalues(m);
    d.matrix_norm = frobenius_norm(m);
    const std::size_t n = m.dim();
    const double scale = 1.0 + d.matrix_norm;

    d.cluster = cluster_by_distance(d.eigenvalues, kCoalescenceGap * scale);
    d.right = eigenvectors(m, d.eigenvalues, d.cluster, scale);

    std::vector<Complex> conj_lambdas(n);
    for (std::size_t i = 0; i < n; ++i) conj_lambdas[i] = std::conj(d.eigenvalues[i]);
    d.left = eigenvectors(adjoint(m), conj_lambdas, d.cluster, scale);

    d.defective.assign(n, false);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (d.cluster[i] == d.cluster[j] && coalescence_measure(d, i, j) > kCoalescenceOverlap) {
                d.defective[i] = true;
                d.defective[j] = true;
            }

    // Semi-simple clusters: rotate the left basis to the dual of the right basis.
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<std::size_t> members;
        for (std::size_t j = 0; j < n; ++j)
            if (d.cluster[j] == static_cast<int>(i)) members.push_back(j);
        if (members.size() < 2) continue;
        if (std::any_of(members.begin(), members.end(), [&](std::size_t j) { return d.defective[j]; })) continue;
        const std::size_t k = members.size();
        ComplexMatrix g(k);
        for (std::size_t a = 0; a < k; ++a)
            for (std::size_t b = 0; b < k; ++b) g(a, b) = dot(d.left[members[a]], d.right[members[b]]);
        // New left vectors: L' = L (G^-1)^dagger, i.e. column b of L' = sum_a L_a conj(Ginv(b, a)).
        try {
            std::vector<ComplexVector> ginv_cols;
            for (std::size_t b = 0; b < k; ++b) {
                ComplexVector e(k);
                e[b] = 1.0;
                ginv_cols.push_back(solve(g, e));
            }
            std::vector<ComplexVector> fresh;
            for (std::size_t b = 0; b < k; ++b) {
                ComplexVector v(n);
                for (std::size_t a = 0; a < k; ++a) v += std::conj(ginv_cols[a][b]) * d.left[members[a]];
                fresh.push_back(normalized(v));
            }
            for (std::size_t b = 0; b < k; ++b) d.left[members[b]] = std::move(fresh[b]);
        } catch (const SingularMatrix&) {
        }
    }

    ComplexMatrix r(n);
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t i = 0; i < n; ++i) r(i, j) = d.right[j][i];
    const double smin = min_singular_value(r);
    d.ep_condition = smin > 1.0 / kEpConditionCap ? std::min(1.0 / smin, kEpConditionCap) : kEpConditionCap;
    return d;
}

bool SpectralDecomposition::any_defective() const {
    return std::any_of(defective.begin(), defective.end(), [](bool b) { return b; });
}

double coalescence_measure(const SpectralDecomposition& d, std::size_t i, std::size_t j) {
    if (i >= d.dim() || j >= d.dim()) throw InvalidInput("coalescence_measure: index out of range");
    const double ni = norm(d.right[i]);
    const double nj = norm(d.right[j]);
    if (ni == 0.0 || nj == 0.0) return 0.0;
    return std::min(1.0, std::abs(dot(d.right[i], d.right[j])) / (ni * nj));
}

ClosestPair closest_pair(std::span<const Complex> eigenvalues) {
    ClosestPair best{std::numeric_limits<double>::infinity(), 0, 0};
    for (std::size_t i = 0; i < eigenvalues.size(); ++i)
        for (std::size_t j = i + 1; j < eigenvalues.size(); ++j) {
            const double g = std::abs(eigenvalues[i] - eigenvalues[j]);
            if (g < best.gap) best = {g, i, j};
        }
    return best;
}

}  // namespace lep::linalg
