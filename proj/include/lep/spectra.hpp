#pragma once

// Parameter-plane sweeps of spectral decompositions, exceptional-point
// detection, and exceptional-line tracing.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "lep/linalg.hpp"
#include "lep/models.hpp"

namespace lep::spectra {

using linalg::Complex;
using linalg::ComplexMatrix;

inline constexpr std::size_t kMaxCells = 10'000'000;
/// Order-2 refinement contract: min gap < kLineGapTol (1 + ||L||_F).
inline constexpr double kLineGapTol = 1e-8;
/// Refined candidates must have eigenvector overlap above this.
inline constexpr double kCandidateOverlap = 1.0 - 1e-5;
/// Cluster radius (relative) used to count the order of a candidate.
inline constexpr double kClusterTol = 1e-4;

struct Axis {
    std::string name;
    double min = 0.0;
    double max = 1.0;
    int resolution = 2;

    double at(int i) const;
    double step() const { return (max - min) / (resolution - 1); }

    friend bool operator==(const Axis&, const Axis&) = default;
};

struct PlaneSpec {
    Axis x;
    Axis y;
    models::ParamMap fixed;

    std::size_t cells() const;
    /// Throws InvalidInput / ResolutionTooLarge.
    void validate() const;
};

/// A model bound to a plane: builds the operator at any (x, y).
class PlaneModel {
public:
    PlaneModel(std::string_view model, const PlaneSpec& plane);
    ComplexMatrix at(double x, double y) const;
    const models::ModelInfo& info() const { return *info_; }

private:
    const models::ModelInfo* info_;
    std::vector<double> values_;
    std::size_t ix_;
    std::size_t iy_;
};

struct CellSummary {
    std::vector<Complex> eigenvalues;
    double min_gap = 0.0;
    double max_overlap = 0.0;
    /// +1 when Re of the discriminant prod_{i<j} (l_i - l_j)^2 is positive, else -1.
    int disc_sign = 1;
    /// Characteristic polynomial has real coefficients (within rounding).
    bool real_poly = true;
    double norm = 0.0;

    /// Signed gap used for contouring.
    double indicator() const { return disc_sign * min_gap; }
};

CellSummary summarize(const ComplexMatrix& m);

struct GridScan {
    PlaneSpec plane;
    std::string model;
    std::size_t dim = 0;
    /// Row-major in y: index = iy * nx + ix.
    std::vector<CellSummary> cells;

    int nx() const { return plane.x.resolution; }
    int ny() const { return plane.y.resolution; }
    const CellSummary& at(int ix, int iy) const { return cells[static_cast<std::size_t>(iy) * nx() + ix]; }
    bool real_poly() const;
};

/// Reference implementation, one cell after another.
GridScan scan_grid_serial(const PlaneSpec& plane, std::string_view model);
/// OpenMP version; bit-identical to the serial scan for any thread count.
GridScan scan_grid(const PlaneSpec& plane, std::string_view model, int threads);

enum class CandidateKind { Point, OnLine };

struct EPCandidate {
    double x = 0.0;
    double y = 0.0;
    int order = 2;
    Complex eigenvalue;
    /// Diameter of the coalescing cluster at the refined location.
    double residual = 0.0;
    double overlap = 0.0;
    CandidateKind kind = CandidateKind::Point;
};

std::string_view to_string(CandidateKind k);

/// Order of the eigenvalue cluster around `center`, counted with radius kClusterTol (1 + norm).
int cluster_order(std::span<const Complex> eigenvalues, Complex center, double norm);

/// Refined coalescence between two plane points that straddle a sign change
/// of the discriminant (real characteristic polynomials only).
std::optional<EPCandidate> refine_edge(const PlaneModel& model, std::pair<double, double> a,
                                       std::pair<double, double> b);

/// Looks for an EP inside the grid square with lower-left corner (ix, iy).
std::optional<EPCandidate> detect_ep(const PlaneModel& model, const GridScan& grid, int ix, int iy);

/// Newton on p = p' = p'' = 0 from a seed; real characteristic polynomials only.
std::optional<EPCandidate> refine_third_order(const PlaneModel& model, double x, double y, Complex lambda);

struct LineVertex {
    double x = 0.0;
    double y = 0.0;
    double gap = 0.0;
    double overlap = 0.0;
};

struct Polyline {
    std::vector<LineVertex> vertices;
    bool closed = false;
};

struct LineSet {
    std::vector<Polyline> lines;
    /// Third-order points found on the lines.
    std::vector<EPCandidate> endpoints;
};

/// Marching squares on the signed-gap field, edge refinement, then a
/// third-order search seeded along each line. Polylines run from their
/// lexicographically smallest (x, then y) end and are sorted the same way.
LineSet trace_lines(const PlaneModel& model, const GridScan& grid);

/// Isolated point EPs: strict local minima of the grid gap refined in 2-D.
std::vector<EPCandidate> find_point_eps(const PlaneModel& model, const GridScan& grid);

struct ExceptionalMap {
    GridScan grid;
    std::vector<Polyline> lines;
    std::vector<EPCandidate> points;
};

ExceptionalMap map_exceptional(const PlaneSpec& plane, std::string_view model, int threads);

/// Eigenvalue with maximal real part; near-ties go to the smaller |Im|.
std::size_t quasi_steady_index(std::span<const Complex> eigenvalues);
std::size_t quasi_steady_index(const linalg::SpectralDecomposition& d);

}  // namespace lep::spectra
