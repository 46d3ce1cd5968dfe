#pragma once

// Mean-field driven-dissipative Rydberg gas: optical Bloch equations with a
// density-dependent detuning, steady states, stability, fold lines and cusp,
// and slow steady-state encircling.

#include <array>
#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "lep/linalg.hpp"
#include "lep/models.hpp"
#include "lep/spectra.hpp"

namespace lep::rydberg {

using linalg::Complex;

struct RydbergParams {
    double Omega = 0.0;
    double Delta = 0.0;
    double gamma = 1.0;
    /// Combined mean-field coupling (N - 1) V.
    double NV = 0.0;

    /// Throws InvalidInput.
    void validate() const;
};

struct BlochState {
    double rho22 = 0.0;
    Complex rho21;
};

/// (rho22, Re rho21, Im rho21).
using RealState = std::array<double, 3>;
using Jacobian = std::array<std::array<double, 3>, 3>;

RealState to_real(const BlochState& s);
BlochState from_real(const RealState& r);

/// d/dt rho22 = -Omega Im rho21 - gamma rho22,
/// d/dt rho21 = i (Delta - NV rho22) rho21 - (gamma/2) rho21 + i Omega (rho22 - 1/2).
BlochState bloch_rhs(const BlochState& s, const RydbergParams& p);
RealState bloch_rhs_real(const RealState& s, const RydbergParams& p);
Jacobian jacobian(const RealState& s, const RydbergParams& p);

/// Ascending coefficients of NV^2 n^3 - 2 Delta NV n^2 + (Delta^2 + gamma^2/4 + Omega^2/2) n - Omega^2/4.
std::array<double, 4> steady_cubic(const RydbergParams& p);

/// rho21 at a steady state with population n.
Complex steady_coherence(double n, const RydbergParams& p);

/// Discriminant of the monic steady-state cubic; positive iff three distinct real roots.
/// Returns -1 when NV == 0 (linear equation).
double discriminant(const RydbergParams& p);

enum class Stability { Stable, Unstable, Marginal };
std::string_view to_string(Stability s);

inline constexpr double kMarginalTol = 1e-9;
inline constexpr double kRootImagTol = 1e-10;
inline constexpr double kSteadyResidualTol = 1e-10;

struct StabilityResult {
    Stability label = Stability::Stable;
    std::array<Complex, 3> eigenvalues;
};

struct SteadyRoot {
    double n = 0.0;
    Complex rho21;
    /// Max-norm of the real right-hand side at the root.
    double residual = 0.0;
    Stability stability = Stability::Stable;
    std::array<Complex, 3> jacobian_eigenvalues;
};

struct SteadyStateSet {
    /// Ascending in n.
    std::vector<SteadyRoot> roots;

    std::size_t size() const { return roots.size(); }
    std::vector<std::size_t> stable_indices() const;
};

SteadyStateSet steady_states(const RydbergParams& p);
StabilityResult stability(const RydbergParams& p, const SteadyRoot& root);

struct CuspPoint {
    double Omega = 0.0;
    double Delta = 0.0;
    double n = 0.0;
};

/// Triple roots of the steady-state cubic: n0 solves 2 NV^2 n^3 - (3/4) NV^2 n^2 + gamma^2/4 = 0,
/// Delta = 3 NV n0 / 2, Omega = 2 |NV| n0^{3/2}. Two cusps for |NV| > 4 gamma, none otherwise.
/// Ascending in Omega.
std::vector<CuspPoint> cusps_closed_form(double gamma, double NV);

// ---------------------------------------------------------------------------
// Plane scans

/// A plane with x = Omega, y = Delta and fixed gamma, NV.
struct RydbergPlane {
    spectra::Axis omega{"Omega", 0.0, 1.0, 2};
    spectra::Axis delta{"Delta", 0.0, 1.0, 2};
    double gamma = 1.0;
    double NV = 0.0;

    std::size_t cells() const;
    void validate() const;
    RydbergParams at(int ix, int iy) const;
};

RydbergPlane plane_from_spec(const spectra::PlaneSpec& spec);

struct ScanCell {
    double discriminant = 0.0;
    SteadyStateSet states;
};

struct SteadyScan {
    RydbergPlane plane;
    /// index = iy * nx + ix.
    std::vector<ScanCell> cells;

    int nx() const { return plane.omega.resolution; }
    int ny() const { return plane.delta.resolution; }
    const ScanCell& at(int ix, int iy) const { return cells[static_cast<std::size_t>(iy) * nx() + ix]; }
};

SteadyScan scan_steady_serial(const RydbergPlane& plane);
/// OpenMP version; identical to the serial scan for any thread count.
SteadyScan scan_steady(const RydbergPlane& plane, int threads);

struct FoldPoint {
    double Omega = 0.0;
    double Delta = 0.0;
};

struct FoldLine {
    std::vector<FoldPoint> points;
    bool closed = false;
};

struct BistabilityMap {
    SteadyScan scan;
    /// Marching-squares contour of the discriminant sign (edge-bisected); it breaks up
    /// where the three-root wedge is thinner than a cell.
    std::vector<FoldLine> contours;
    /// Fold curves traced through their double-root parametrization, clipped to the plane.
    std::vector<FoldLine> folds;
    /// Ascending in Omega.
    std::vector<CuspPoint> cusps;
};

/// Grid scan, discriminant contours, cusps by Newton on f = f' = f'' = 0 seeded from
/// the contour vertices, and fold curves.
BistabilityMap bistability_map(const RydbergPlane& plane, int threads);

/// Fold curves: for a double root n, Omega^2 = 8 NV n^2 (Delta - NV n) and Delta solves
/// Delta^2 + 4 NV n (n - 1) Delta + 3 NV^2 n^2 - 4 NV^2 n^3 + gamma^2/4 = 0. The given
/// cusps are inserted as exact vertices.
std::vector<FoldLine> fold_lines(const RydbergPlane& plane, std::span<const CuspPoint> cusps);

/// Newton on the triple-root system in (n, Delta, Omega).
std::optional<CuspPoint> refine_cusp(double gamma, double NV, CuspPoint seed);

// ---------------------------------------------------------------------------
// Time evolution

struct RydbergTrajectory {
    std::vector<double> times;
    std::vector<BlochState> states;
    std::vector<double> Omega;
    std::vector<double> Delta;

    std::size_t size() const { return times.size(); }
};

using ParamSchedule = std::function<RydbergParams(double)>;

struct BlochOptions {
    double T = 1.0;
    int steps = 1000;
    int records = 2000;
    bool check_steps = false;
};

inline constexpr double kRydbergDt = 0.01;

/// Fixed-step RK4 on the real three-component system. Throws StepTooCoarse.
RydbergTrajectory integrate_bloch(const ParamSchedule& schedule, const BlochState& s0, const BlochOptions& opts);

/// Smallest step count with dt <= kRydbergDt / gamma.
int default_bloch_steps(double T, double gamma);

enum class InitialRoot { Lower, Upper };
std::string_view to_string(InitialRoot r);
InitialRoot parse_initial_root(std::string_view s);

struct SteadyDirection {
    models::Direction direction;
    RydbergTrajectory trajectory;
    double initial_n = 0.0;
    double final_n = 0.0;
    /// Final population is closest to the other stable root at the returning point.
    bool switched = false;
};

struct SteadyEncircle {
    SteadyDirection ccw;
    SteadyDirection cw;
    bool chiral = false;
};

/// Path in the Omega-Delta plane; gamma and NV fixed. steps = 0 uses the default.
SteadyEncircle encircle_steady(const models::EncirclePath& path, double gamma, double NV, InitialRoot initial,
                               int steps = 0, int records = 2000, bool check_steps = false);
SteadyDirection encircle_steady_direction(const models::EncirclePath& path, double gamma, double NV,
                                          InitialRoot initial, int steps = 0, int records = 2000,
                                          bool check_steps = false);

struct PathCrossing {
    /// Fraction of the loop from the start, measured in the CCW sense.
    double u = 0.0;
    double Omega = 0.0;
    double Delta = 0.0;
    /// Signed arc length along the fold curve, origin at the cusp.
    double arc = 0.0;
    /// Fold line index, -1 if the crossing is on a line that does not carry the cusp.
    int line = -1;
};

struct TransferConditions {
    bool initial_in_bistable = false;
    bool nearest_crossings_straddle_cusp = false;
    std::vector<PathCrossing> crossings;
};

/// Condition (i): start in the three-root region with a stable initial root.
/// Condition (ii): the first fold crossings met going forward and backward from the
/// start lie on opposite sides of the cusp closest to the loop center, measured
/// along the fold curve. Throws NoIntersections.
TransferConditions check_conditions(const models::EncirclePath& path, const BistabilityMap& map,
                                    InitialRoot initial);

}  // namespace lep::rydberg
