#include "lep/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace lep::linalg {

namespace {

void require_same_dim(std::size_t a, std::size_t b, const char* what) {
    if (a != b) {
        throw DimensionMismatch(std::string(what) + ": " + std::to_string(a) + " vs " + std::to_string(b));
    }
}

}  // namespace

// ---------------------------------------------------------------------------
// ComplexVector

ComplexVector& ComplexVector::operator+=(const ComplexVector& o) {
    require_same_dim(dim(), o.dim(), "vector +");
    for (std::size_t i = 0; i < v_.size(); ++i) v_[i] += o.v_[i];
    return *this;
}

ComplexVector& ComplexVector::operator-=(const ComplexVector& o) {
    require_same_dim(dim(), o.dim(), "vector -");
    for (std::size_t i = 0; i < v_.size(); ++i) v_[i] -= o.v_[i];
    return *this;
}

ComplexVector& ComplexVector::operator*=(Complex s) {
    for (auto& x : v_) x *= s;
    return *this;
}

ComplexVector operator+(ComplexVector a, const ComplexVector& b) { return a += b; }
ComplexVector operator-(ComplexVector a, const ComplexVector& b) { return a -= b; }
ComplexVector operator*(Complex s, ComplexVector a) { return a *= s; }

Complex dot(const ComplexVector& a, const ComplexVector& b) {
    require_same_dim(a.dim(), b.dim(), "dot");
    Complex s = 0.0;
    for (std::size_t i = 0; i < a.dim(); ++i) s += std::conj(a[i]) * b[i];
    return s;
}

double norm(const ComplexVector& a) {
    double s = 0.0;
    for (const auto& x : a) s += std::norm(x);
    return std::sqrt(s);
}

ComplexVector normalized(const ComplexVector& a) {
    const double n = norm(a);
    if (n == 0.0 || !std::isfinite(n)) return a;
    ComplexVector out = (1.0 / n) * a;
    for (const auto& x : out) {
        if (std::abs(x) > 1e-10) {
            const Complex phase = std::conj(x) / std::abs(x);
            out *= phase;
            break;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// ComplexMatrix

ComplexMatrix::ComplexMatrix(std::size_t dim) : dim_(dim), a_(dim * dim) {}

ComplexMatrix::ComplexMatrix(std::size_t dim, std::vector<Complex> row_major)
    : dim_(dim), a_(std::move(row_major)) {
    if (a_.size() != dim_ * dim_) {
        throw DimensionMismatch("matrix entries: expected " + std::to_string(dim_ * dim_) + ", got " +
                                std::to_string(a_.size()));
    }
}

ComplexMatrix::ComplexMatrix(std::initializer_list<std::initializer_list<Complex>> rows) : dim_(rows.size()) {
    a_.reserve(dim_ * dim_);
    for (const auto& r : rows) {
        require_same_dim(r.size(), dim_, "matrix literal row");
        a_.insert(a_.end(), r.begin(), r.end());
    }
}

ComplexMatrix ComplexMatrix::identity(std::size_t dim) {
    ComplexMatrix m(dim);
    for (std::size_t i = 0; i < dim; ++i) m(i, i) = 1.0;
    return m;
}

ComplexMatrix ComplexMatrix::diagonal(std::span<const Complex> d) {
    ComplexMatrix m(d.size());
    for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
    return m;
}

ComplexMatrix& ComplexMatrix::operator+=(const ComplexMatrix& o) {
    require_same_dim(dim_, o.dim_, "matrix +");
    for (std::size_t i = 0; i < a_.size(); ++i) a_[i] += o.a_[i];
    return *this;
}

ComplexMatrix& ComplexMatrix::operator-=(const ComplexMatrix& o) {
    require_same_dim(dim_, o.dim_, "matrix -");
    for (std::size_t i = 0; i < a_.size(); ++i) a_[i] -= o.a_[i];
    return *this;
}

ComplexMatrix& ComplexMatrix::operator*=(Complex s) {
    for (auto& x : a_) x *= s;
    return *this;
}

ComplexMatrix operator+(ComplexMatrix a, const ComplexMatrix& b) { return a += b; }
ComplexMatrix operator-(ComplexMatrix a, const ComplexMatrix& b) { return a -= b; }
ComplexMatrix operator*(Complex s, ComplexMatrix a) { return a *= s; }

ComplexMatrix operator*(const ComplexMatrix& a, const ComplexMatrix& b) {
    require_same_dim(a.dim(), b.dim(), "matrix *");
    const std::size_t n = a.dim();
    ComplexMatrix c(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < n; ++k) {
            const Complex aik = a(i, k);
            if (aik == 0.0) continue;
            for (std::size_t j = 0; j < n; ++j) c(i, j) += aik * b(k, j);
        }
    }
    return c;
}

ComplexVector operator*(const ComplexMatrix& a, const ComplexVector& x) {
    require_same_dim(a.dim(), x.dim(), "matvec");
    const std::size_t n = a.dim();
    ComplexVector y(n);
    for (std::size_t i = 0; i < n; ++i) {
        Complex s = 0.0;
        for (std::size_t j = 0; j < n; ++j) s += a(i, j) * x[j];
        y[i] = s;
    }
    return y;
}

ComplexMatrix adjoint(const ComplexMatrix& a) {
    const std::size_t n = a.dim();
    ComplexMatrix t(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) t(j, i) = std::conj(a(i, j));
    return t;
}

ComplexMatrix transpose(const ComplexMatrix& a) {
    const std::size_t n = a.dim();
    ComplexMatrix t(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) t(j, i) = a(i, j);
    return t;
}

ComplexMatrix conjugate(const ComplexMatrix& a) {
    const std::size_t n = a.dim();
    ComplexMatrix t(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) t(i, j) = std::conj(a(i, j));
    return t;
}

Complex trace(const ComplexMatrix& a) {
    Complex s = 0.0;
    for (std::size_t i = 0; i < a.dim(); ++i) s += a(i, i);
    return s;
}

double frobenius_norm(const ComplexMatrix& a) {
    double s = 0.0;
    for (const auto& x : a.entries()) s += std::norm(x);
    return std::sqrt(s);
}

bool all_finite(const ComplexMatrix& a) {
    return std::all_of(a.entries().begin(), a.entries().end(),
                       [](Complex z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); });
}

bool all_finite(const ComplexVector& x) {
    return std::all_of(x.begin(), x.end(),
                       [](Complex z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); });
}

ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b) {
    const std::size_t na = a.dim();
    const std::size_t nb = b.dim();
    ComplexMatrix k(na * nb);
    for (std::size_t i = 0; i < na; ++i)
        for (std::size_t j = 0; j < na; ++j) {
            const Complex aij = a(i, j);
            for (std::size_t p = 0; p < nb; ++p)
                for (std::size_t q = 0; q < nb; ++q) k(i * nb + p, j * nb + q) = aij * b(p, q);
        }
    return k;
}

ComplexVector vec_row(const ComplexMatrix& x) {
    return ComplexVector(std::vector<Complex>(x.entries().begin(), x.entries().end()));
}

ComplexMatrix unvec_row(const ComplexVector& v) {
    const auto n = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(v.dim()))));
    if (n * n != v.dim()) throw DimensionMismatch("unvec_row: length " + std::to_string(v.dim()) + " is not square");
    return ComplexMatrix(n, std::vector<Complex>(v.begin(), v.end()));
}

// ---------------------------------------------------------------------------
// LU-based helpers

namespace {

struct Lu {
    ComplexMatrix lu;
    std::vector<std::size_t> perm;
    int sign = 1;
    bool singular = false;
};

Lu lu_decompose(ComplexMatrix a) {
    const std::size_t n = a.dim();
    Lu out{std::move(a), std::vector<std::size_t>(n), 1, false};
    std::iota(out.perm.begin(), out.perm.end(), 0);
    auto& m = out.lu;
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t piv = k;
        double best = std::abs(m(k, k));
        for (std::size_t i = k + 1; i < n; ++i) {
            if (std::abs(m(i, k)) > best) {
                best = std::abs(m(i, k));
                piv = i;
            }
        }
        if (piv != k) {
            for (std::size_t j = 0; j < n; ++j) std::swap(m(k, j), m(piv, j));
            std::swap(out.perm[k], out.perm[piv]);
            out.sign = -out.sign;
        }
        if (m(k, k) == 0.0) {
            out.singular = true;
            continue;
        }
        for (std::size_t i = k + 1; i < n; ++i) {
            const Complex f = m(i, k) / m(k, k);
            m(i, k) = f;
            for (std::size_t j = k + 1; j < n; ++j) m(i, j) -= f * m(k, j);
        }
    }
    return out;
}

}  // namespace

ComplexVector solve(const ComplexMatrix& a, const ComplexVector& b) {
    require_same_dim(a.dim(), b.dim(), "solve");
    const Lu f = lu_decompose(a);
    if (f.singular) throw SingularMatrix("solve: matrix is singular");
    const std::size_t n = a.dim();
    ComplexVector y(n);
    for (std::size_t i = 0; i < n; ++i) {
        Complex s = b[f.perm[i]];
        for (std::size_t j = 0; j < i; ++j) s -= f.lu(i, j) * y[j];
        y[i] = s;
    }
    for (std::size_t i = n; i-- > 0;) {
        Complex s = y[i];
        for (std::size_t j = i + 1; j < n; ++j) s -= f.lu(i, j) * y[j];
        y[i] = s / f.lu(i, i);
    }
    return y;
}

Complex determinant(const ComplexMatrix& a) {
    const Lu f = lu_decompose(a);
    if (f.singular) return 0.0;
    Complex d = static_cast<double>(f.sign);
    for (std::size_t i = 0; i < a.dim(); ++i) d *= f.lu(i, i);
    return d;
}

// ---------------------------------------------------------------------------
// Hermitian eigenvalues via the real symmetric embedding [[Re, -Im], [Im, Re]].

std::vector<double> eigvalsh(const ComplexMatrix& h) {
    const std::size_t n = h.dim();
    const std::size_t m = 2 * n;
    std::vector<double> a(m * m);
    auto at = [&](std::size_t i, std::size_t j) -> double& { return a[i * m + j]; };
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            // Symmetrize so slightly non-Hermitian input is handled consistently.
            const Complex z = 0.5 * (h(i, j) + std::conj(h(j, i)));
            at(i, j) = z.real();
            at(i + n, j + n) = z.real();
            at(i, j + n) = -z.imag();
            at(i + n, j) = z.imag();
        }

    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        double total = 0.0;
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < m; ++j) {
                total += at(i, j) * at(i, j);
                if (i != j) off += at(i, j) * at(i, j);
            }
        if (off <= 1e-30 * total || off == 0.0) break;
        for (std::size_t p = 0; p < m; ++p) {
            for (std::size_t q = p + 1; q < m; ++q) {
                const double apq = at(p, q);
                if (apq == 0.0) continue;
                const double theta = (at(q, q) - at(p, p)) / (2.0 * apq);
                const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t k = 0; k < m; ++k) {
                    const double akp = at(k, p);
                    const double akq = at(k, q);
                    at(k, p) = c * akp - s * akq;
                    at(k, q) = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < m; ++k) {
                    const double apk = at(p, k);
                    const double aqk = at(q, k);
                    at(p, k) = c * apk - s * aqk;
                    at(q, k) = s * apk + c * aqk;
                }
            }
        }
    }
    std::vector<double> ev(m);
    for (std::size_t i = 0; i < m; ++i) ev[i] = at(i, i);
    std::sort(ev.begin(), ev.end());
    // Each eigenvalue appears twice in the embedding.
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = 0.5 * (ev[2 * i] + ev[2 * i + 1]);
    return out;
}

double min_singular_value(const ComplexMatrix& a) {
    const auto ev = eigvalsh(adjoint(a) * a);
    return std::sqrt(std::max(ev.front(), 0.0));
}

}  // namespace lep::linalg
