#pragma once

// Time evolution along parametric loops: non-Hermitian Schrodinger and
// Lindblad dynamics, spectral projection, sheet tracking, chirality.

#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lep/linalg.hpp"
#include "lep/models.hpp"

namespace lep::dynamics {

using linalg::Complex;
using linalg::ComplexMatrix;
using linalg::ComplexVector;

/// Time-dependent generator: H(t) for Schrodinger runs, L(t) for master-equation runs.
using Generator = std::function<ComplexMatrix(double)>;

/// A catalog model driven around a loop in one of its parameter planes.
struct PathModel {
    std::string model;
    models::ParamMap fixed;
    models::EncirclePath path;

    ComplexMatrix at(double t) const;
    bool liouvillian() const;
    Generator generator() const;
    /// Same loop run the other way round.
    PathModel reversed() const;
};

struct IntegrateOptions {
    double T = 1.0;
    int steps = 10000;
    /// Number of recorded intervals (samples = records + 1, capped by steps).
    int records = 2000;
    /// Re-run at twice the steps and compare recorded observables.
    bool check_steps = false;
};

inline constexpr double kStepDoublingTol = 1e-6;

struct TrajectoryRecord {
    bool liouvillian = false;
    std::vector<double> times;
    /// State scaled to unit Euclidean norm; the magnitude lives in log_norm.
    std::vector<ComplexVector> states;
    /// ||psi|| for Schrodinger runs, tr(rho) for master-equation runs.
    std::vector<double> norm;
    std::vector<double> log_norm;
    /// Filled by project_trajectory.
    std::vector<Complex> projected_energy;
    std::vector<int> sheet_index;
    /// Expansion coefficients psi = sum_n c_n psi_n (unit right eigenvectors), tracked-branch order.
    std::vector<std::vector<Complex>> coefficients;
    /// Biorthogonal weights |<chi_n|psi>|^2 / sum, in tracked-branch order.
    std::vector<std::vector<double>> weights;

    std::size_t size() const { return times.size(); }
};

/// Fixed-step RK4 for i d/dt psi = H(t) psi (hbar = 1). Throws StepTooCoarse.
TrajectoryRecord integrate_schrodinger(const Generator& h, const ComplexVector& psi0, const IntegrateOptions& opts);

/// Fixed-step RK4 for d/dt vec(rho) = L(t) vec(rho). Throws StepTooCoarse.
TrajectoryRecord integrate_liouvillian(const Generator& l, const ComplexMatrix& rho0, const IntegrateOptions& opts);

/// Continuous branch labels along sampled times.
struct SheetTracking {
    std::vector<double> times;
    /// labels[k][i]: branch of the i-th (canonically ordered) eigenvalue at times[k].
    std::vector<std::vector<int>> labels;
    /// branch_values[k][b]: eigenvalue of branch b at times[k].
    std::vector<std::vector<Complex>> branch_values;
    /// Samples where two eigenvalues were numerically coalesced.
    std::vector<bool> defective;
    /// permutation[b]: canonical index at the last sample of the eigenvalue that branch b
    /// occupied at the first sample, when the generator returns to its start.
    std::vector<int> permutation;

    bool is_identity() const;
};

/// Matches eigenvalues between consecutive samples by minimal total |d lambda|
/// (eigenvector overlap on near-ties). Throws SampleTooCoarse.
SheetTracking track_sheets(const Generator& g, double T, int samples);
SheetTracking track_sheets(const Generator& g, std::span<const double> times);

/// Fills projected_energy, weights, coefficients and sheet_index (band index, i.e.
/// canonical position, of the dominant eigencomponent; it flips across branch cuts).
/// Throws ProjectionUndefined.
void project_trajectory(TrajectoryRecord& traj, const Generator& g);

/// Biorthogonal weights of `state` on the eigenvectors of `m`, canonical order.
std::vector<double> branch_weights(const linalg::SpectralDecomposition& d, const ComplexVector& state);

/// <chi_n | d/dt psi_m> at time t by central differences in a phase-aligned gauge.
/// Rows/columns in the canonical order of eig(g(t)). Throws GaugeDiscontinuity.
ComplexMatrix nonadiabatic_couplings(const Generator& g, double t, double dt);

/// Density matrix of a Liouvillian eigenvector: phase fixed by the trace, Hermitized,
/// unit trace. Throws ProjectionUndefined for traceless eigenvectors.
ComplexMatrix eigen_density(const ComplexVector& v);

/// Uhlmann fidelity of two 2x2 density matrices, clamped to [0, 1].
double uhlmann_fidelity(const ComplexMatrix& rho, const ComplexMatrix& sigma);

enum class Verdict { Chiral, NonChiral, Ambiguous };
std::string_view to_string(Verdict v);

/// Chiral iff one direction keeps > 0.9 of the initial branch and the other < 0.5.
Verdict verdict_from(double ccw_initial, double cw_initial);

struct AdiabaticityEstimate {
    double min_gap = 0.0;
    /// T * min gap, i.e. (2 pi / omega) min |E_+ - E_-|.
    double dimensionless_ratio = 0.0;
};

AdiabaticityEstimate adiabaticity(const Generator& g, double T, int samples = 2000);

struct DirectionResult {
    models::Direction direction;
    double fidelity_initial = 0.0;
    double fidelity_other = 0.0;
    int final_sheet = 0;
    TrajectoryRecord trajectory;
};

struct ChiralityReport {
    DirectionResult ccw;
    DirectionResult cw;
    Verdict verdict = Verdict::Ambiguous;
    AdiabaticityEstimate adiabaticity;
    /// Eigenvalue of the initial branch at t = 0.
    Complex initial_eigenvalue;
    int initial_index = 0;
};

enum class InitialBranch {
    /// Schrodinger runs: the branch with the larger Im E just after a CCW departure.
    Gain,
    /// Master-equation runs: the quasi-steady eigenstate.
    QuasiSteady,
    /// Canonical index given explicitly.
    Index,
};

struct ChiralityOptions {
    InitialBranch initial = InitialBranch::Gain;
    int initial_index = 0;
    int steps = 0;  // 0: ceil(T / 0.01)
    int records = 2000;
    bool check_steps = false;
};

/// Canonical index of the gain branch at t = 0 for a CCW run of `pm`.
int gain_branch(const PathModel& pm);

/// Canonical index at t = 0 of the branch selected by opts.initial.
int initial_branch_index(const PathModel& pm, const ChiralityOptions& opts);

/// One loop in direction `dir` from eigenstate `idx` of the generator at t = 0.
DirectionResult run_direction(const PathModel& pm, models::Direction dir, int idx, const ChiralityOptions& opts);

/// Runs both directions from the same initial eigenstate and compares the final
/// state with the instantaneous eigenstates of the returning generator.
ChiralityReport classify_chirality(const PathModel& pm, const ChiralityOptions& opts);

/// Default step count: dt <= 0.01.
int default_steps(double T);

}  // namespace lep::dynamics
