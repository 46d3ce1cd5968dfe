#pragma once

// Operator catalog: two-level non-Hermitian Hamiltonians, jump operators and
// Lindblad superoperators on the row-major vectorized density matrix
// (rho11, rho12, rho21, rho22).

#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "lep/linalg.hpp"

namespace lep::models {

using linalg::Complex;
using linalg::ComplexMatrix;
using linalg::ComplexVector;

ComplexMatrix sigma_x();
ComplexMatrix sigma_y();
ComplexMatrix sigma_z();
/// |1><2|: decay from state 2 into state 1.
ComplexMatrix sigma_minus();

struct PTParams {
    double J = 0.0;
    double Gamma = 0.0;
};

struct ColdAtomParams {
    double delta = 0.0;
    /// Rabi coupling; written Omega in the effective Hamiltonian and J in the Liouvillian.
    double coupling = 0.0;
    double Gamma = 0.0;
    double gamma = 0.0;
};

struct PerturbParams {
    double epsilon = 0.0;
};

struct JumpTerm {
    ComplexMatrix op;
    /// Drop the L rho L^dagger term (no-jump / post-selected evolution).
    bool drop_recycling = false;
};

enum class Direction { CW, CCW };

/// Parameter planes a loop can live in. The first named axis is x.
///   JOmega:     J = cx + r cos(theta), Omega = cy + r sin(theta)
///   DeltaJ:     delta = cx + r sin(theta), J = cy + r cos(theta)
///   OmegaDelta: Omega = cx + r sin(theta), Delta = cy + r cos(theta)
enum class Plane { JOmega, DeltaJ, OmegaDelta };

struct EncirclePath {
    double cx = 0.0;
    double cy = 0.0;
    double radius = 0.0;
    double period = 1.0;
    Direction direction = Direction::CCW;
    double phase0 = 0.0;
    Plane plane = Plane::JOmega;

    /// theta(t) = +-2 pi t / T + phase0; CCW takes the + sign.
    double angle(double t) const;
    /// Plane coordinates (x, y) at time t.
    std::pair<double, double> point(double t) const;
    /// d(x, y)/dt at time t.
    std::pair<double, double> velocity(double t) const;
    void validate() const;

    friend bool operator==(const EncirclePath&, const EncirclePath&) = default;
};

std::string_view to_string(Direction d);
std::string_view to_string(Plane p);
Direction parse_direction(std::string_view s);
Plane parse_plane(std::string_view s);
/// Axis names (x, y) of a plane, matching catalog parameter names.
std::pair<std::string, std::string> plane_axes(Plane p);

ComplexMatrix pt_hamiltonian(const PTParams& p);

/// J(t) sigma_x - [Omega(t) + i Gamma/2] sigma_z with (J, Omega) on a JOmega loop.
ComplexMatrix encircle_hamiltonian(const EncirclePath& path, double Gamma, double t);
/// The same Hamiltonian at a fixed point of the J-Omega plane.
ComplexMatrix encircle_hamiltonian_at(double J, double Omega, double Gamma);

ComplexMatrix coldatom_heff(const ColdAtomParams& p);

/// -i(h (x) I - I (x) h^T) + sum_k [(L (x) L*)(1 - drop) - 1/2 (L^dag L (x) I) - 1/2 (I (x) (L^dag L)^T)].
ComplexMatrix build_liouvillian(const ComplexMatrix& h, std::span<const JumpTerm> jumps);

/// h = J sigma_x, L = sqrt(Gamma) sigma_minus with recycling.
ComplexMatrix basic_liouvillian(double J, double Gamma);
/// h = J sigma_x + (delta/2) sigma_z, L = sqrt(Gamma) sigma_minus with recycling.
ComplexMatrix detuned_liouvillian(double J, double delta, double Gamma);
/// h = J sigma_x + (delta/2) sigma_z; L1 = sqrt(Gamma) sigma_minus without recycling,
/// L2 = sqrt(gamma) |2><2| with recycling.
ComplexMatrix coldatom_liouvillian(const ColdAtomParams& p);

/// Eigenvalues of pt_hamiltonian(p) + epsilon sigma_x (p at its EP), canonical order.
std::pair<Complex, Complex> perturbed_ep_splitting(const PTParams& p, const PerturbParams& q);

// ---------------------------------------------------------------------------
// Named catalog

using ParamMap = std::map<std::string, double, std::less<>>;

enum class ModelKind { Hamiltonian, Liouvillian };

struct ModelInfo {
    std::string name;
    ModelKind kind;
    /// Canonical parameter names in the order build_model_values expects.
    std::vector<std::string> params;
    /// (alias, canonical) pairs.
    std::vector<std::pair<std::string, std::string>> aliases;
    std::string summary;
};

const std::vector<ModelInfo>& catalog();
/// Throws UnknownModel.
const ModelInfo& model_info(std::string_view name);

/// Resolves a user-facing parameter name (possibly an alias) to its canonical
/// name. Throws InvalidInput for names the model does not know.
std::string canonical_param(const ModelInfo& info, std::string_view name);

/// Maps user parameters to values in canonical order. Unknown names, an alias
/// given together with its canonical name, missing or non-finite values are errors.
std::vector<double> resolve_params(const ModelInfo& info, const ParamMap& params);

ComplexMatrix build_model_values(const ModelInfo& info, std::span<const double> values);
ComplexMatrix build_model(std::string_view name, const ParamMap& params);

}  // namespace lep::models
