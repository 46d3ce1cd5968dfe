#pragma once

// Dense complex linear algebra for small square matrices (dim <= 16).
//
// Everything here is a pure function on values. Matrices are row-major.

#include <complex>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

#include "lep/error.hpp"

namespace lep::linalg {

using Complex = std::complex<double>;

inline constexpr std::size_t kMaxEigDim = 16;

class ComplexVector {
public:
    ComplexVector() = default;
    explicit ComplexVector(std::size_t dim) : v_(dim) {}
    ComplexVector(std::initializer_list<Complex> init) : v_(init) {}
    explicit ComplexVector(std::vector<Complex> values) : v_(std::move(values)) {}

    std::size_t dim() const { return v_.size(); }
    Complex& operator[](std::size_t i) { return v_[i]; }
    const Complex& operator[](std::size_t i) const { return v_[i]; }
    std::span<Complex> data() { return v_; }
    std::span<const Complex> data() const { return v_; }
    auto begin() { return v_.begin(); }
    auto end() { return v_.end(); }
    auto begin() const { return v_.begin(); }
    auto end() const { return v_.end(); }

    ComplexVector& operator+=(const ComplexVector& o);
    ComplexVector& operator-=(const ComplexVector& o);
    ComplexVector& operator*=(Complex s);

    friend bool operator==(const ComplexVector&, const ComplexVector&) = default;

private:
    std::vector<Complex> v_;
};

ComplexVector operator+(ComplexVector a, const ComplexVector& b);
ComplexVector operator-(ComplexVector a, const ComplexVector& b);
ComplexVector operator*(Complex s, ComplexVector a);

/// <a|b> with the first argument conjugated.
Complex dot(const ComplexVector& a, const ComplexVector& b);
double norm(const ComplexVector& a);
/// Unit Euclidean norm, first non-negligible component rotated onto the positive real axis.
ComplexVector normalized(const ComplexVector& a);

class ComplexMatrix {
public:
    ComplexMatrix() = default;
    explicit ComplexMatrix(std::size_t dim);
    ComplexMatrix(std::size_t dim, std::vector<Complex> row_major);
    /// Row-wise literal, e.g. {{0, 1}, {1, 0}}.
    ComplexMatrix(std::initializer_list<std::initializer_list<Complex>> rows);

    static ComplexMatrix identity(std::size_t dim);
    static ComplexMatrix diagonal(std::span<const Complex> d);

    std::size_t dim() const { return dim_; }
    Complex& operator()(std::size_t r, std::size_t c) { return a_[r * dim_ + c]; }
    const Complex& operator()(std::size_t r, std::size_t c) const { return a_[r * dim_ + c]; }
    std::span<const Complex> entries() const { return a_; }

    ComplexMatrix& operator+=(const ComplexMatrix& o);
    ComplexMatrix& operator-=(const ComplexMatrix& o);
    ComplexMatrix& operator*=(Complex s);

    friend bool operator==(const ComplexMatrix&, const ComplexMatrix&) = default;

private:
    std::size_t dim_ = 0;
    std::vector<Complex> a_;
};

ComplexMatrix operator+(ComplexMatrix a, const ComplexMatrix& b);
ComplexMatrix operator-(ComplexMatrix a, const ComplexMatrix& b);
ComplexMatrix operator*(Complex s, ComplexMatrix a);
ComplexMatrix operator*(const ComplexMatrix& a, const ComplexMatrix& b);
ComplexVector operator*(const ComplexMatrix& a, const ComplexVector& x);

ComplexMatrix adjoint(const ComplexMatrix& a);
ComplexMatrix transpose(const ComplexMatrix& a);
ComplexMatrix conjugate(const ComplexMatrix& a);
Complex trace(const ComplexMatrix& a);
double frobenius_norm(const ComplexMatrix& a);
bool all_finite(const ComplexMatrix& a);
bool all_finite(const ComplexVector& x);

/// Kronecker product. With row-major stacking, vec(A X B) = (A (x) B^T) vec(X).
ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b);

/// Row-major vectorization of a square matrix and its inverse.
ComplexVector vec_row(const ComplexMatrix& x);
ComplexMatrix unvec_row(const ComplexVector& v);

/// Solves a x = b by LU with partial pivoting. Throws SingularMatrix on an exact zero pivot.
ComplexVector solve(const ComplexMatrix& a, const ComplexVector& b);

/// Determinant by LU with partial pivoting.
Complex determinant(const ComplexMatrix& a);

/// Eigenvalues of a Hermitian matrix, ascending (cyclic Jacobi on the real embedding).
std::vector<double> eigvalsh(const ComplexMatrix& h);

/// Smallest singular value.
double min_singular_value(const ComplexMatrix& a);

// ---------------------------------------------------------------------------
// Characteristic polynomial and roots

/// Monic characteristic polynomial det(lambda I - m), coefficients in ascending
/// powers: c[0] + c[1] lambda + ... + c[n] lambda^n with c[n] == 1.
/// Faddeev-LeVerrier on the Frobenius-scaled matrix.
std::vector<Complex> char_poly(const ComplexMatrix& m);

Complex poly_eval(std::span<const Complex> ascending, Complex z);

struct RootOptions {
    double tolerance = 1e-13;
    int max_iterations = 200;
};

/// All roots of a polynomial (ascending coefficients, nonzero leading term)
/// by Aberth-Ehrlich simultaneous iteration. Throws NonConvergence.
std::vector<Complex> polynomial_roots(std::span<const Complex> ascending, const RootOptions& opts = {});

// ---------------------------------------------------------------------------
// Eigendecomposition

struct SpectralDecomposition {
    std::vector<Complex> eigenvalues;
    std::vector<ComplexVector> right;
    std::vector<ComplexVector> left;
    /// True for every eigenvalue that belongs to a defective (coalesced) cluster.
    std::vector<bool> defective;
    /// Cluster id per eigenvalue; eigenvalues sharing an id are numerically degenerate.
    std::vector<int> cluster;
    /// 1 / sigma_min of the unit-column right eigenvector matrix, capped at kEpConditionCap.
    double ep_condition = 1.0;
    double matrix_norm = 0.0;

    std::size_t dim() const { return eigenvalues.size(); }
    bool any_defective() const;
};

inline constexpr double kEpConditionCap = 1e16;

/// Relative distance below which two eigenvalues are candidates for coalescence.
inline constexpr double kCoalescenceGap = 1e-7;
/// Eigenvector overlap above which a close pair is flagged defective.
inline constexpr double kCoalescenceOverlap = 1.0 - 1e-6;

/// Full right/left eigendecomposition. Eigenvalues are sorted by descending
/// real part (quantized at 1e-11 (1+||m||_F)), then by descending imaginary part.
SpectralDecomposition eig(const ComplexMatrix& m);

/// Eigenvalues only (characteristic polynomial roots, sorted as in eig).
std::vector<Complex> eigenvalues(const ComplexMatrix& m);

/// |<right_i|right_j>| for unit vectors; 1 means full coalescence.
double coalescence_measure(const SpectralDecomposition& d, std::size_t i, std::size_t j);

/// Smallest pairwise eigenvalue distance and the pair attaining it.
struct ClosestPair {
    double gap = 0.0;
    std::size_t i = 0;
    std::size_t j = 0;
};
ClosestPair closest_pair(std::span<const Complex> eigenvalues);

/// Sorts eigenvalues into the canonical order used by eig. Returns the permutation applied.
std::vector<std::size_t> canonical_order(std::span<const Complex> eigenvalues, double scale);

}  // namespace lep::linalg
