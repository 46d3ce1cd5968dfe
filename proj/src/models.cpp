#include "lep/models.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

namespace lep::models {

using namespace std::complex_literals;
using linalg::adjoint;
using linalg::conjugate;
using linalg::kron;
using linalg::transpose;

ComplexMatrix sigma_x() { return {{0.0, 1.0}, {1.0, 0.0}}; }
ComplexMatrix sigma_y() { return {{0.0, -1i}, {1i, 0.0}}; }
ComplexMatrix sigma_z() { return {{1.0, 0.0}, {0.0, -1.0}}; }
ComplexMatrix sigma_minus() { return {{0.0, 1.0}, {0.0, 0.0}}; }

// ---------------------------------------------------------------------------

double EncirclePath::angle(double t) const {
    const double sign = direction == Direction::CCW ? 1.0 : -1.0;
    return sign * 2.0 * std::numbers::pi * t / period + phase0;
}

std::pair<double, double> EncirclePath::point(double t) const {
    const double th = angle(t);
    if (plane == Plane::JOmega) return {cx + radius * std::cos(th), cy + radius * std::sin(th)};
    return {cx + radius * std::sin(th), cy + radius * std::cos(th)};
}

std::pair<double, double> EncirclePath::velocity(double t) const {
    const double th = angle(t);
    const double w = (direction == Direction::CCW ? 1.0 : -1.0) * 2.0 * std::numbers::pi / period;
    if (plane == Plane::JOmega) return {-radius * w * std::sin(th), radius * w * std::cos(th)};
    return {radius * w * std::cos(th), -radius * w * std::sin(th)};
}

void EncirclePath::validate() const {
    if (!std::isfinite(cx) || !std::isfinite(cy) || !std::isfinite(phase0)) {
        throw InvalidInput("path: center and phase0 must be finite");
    }
    if (!std::isfinite(radius) || radius < 0.0) throw InvalidInput("path: radius must be finite and >= 0");
    if (!std::isfinite(period) || period <= 0.0) throw InvalidInput("path: period must be positive");
}

std::string_view to_string(Direction d) { return d == Direction::CCW ? "ccw" : "cw"; }

std::string_view to_string(Plane p) {
    switch (p) {
        case Plane::JOmega: return "J-Omega";
        case Plane::DeltaJ: return "delta-J";
        case Plane::OmegaDelta: return "Omega-Delta";
    }
    return "";
}

Direction parse_direction(std::string_view s) {
    if (s == "ccw" || s == "CCW" || s == "+") return Direction::CCW;
    if (s == "cw" || s == "CW" || s == "-") return Direction::CW;
    throw InvalidInput("unknown direction '" + std::string(s) + "' (expected ccw or cw)");
}

Plane parse_plane(std::string_view s) {
    if (s == "J-Omega") return Plane::JOmega;
    if (s == "delta-J") return Plane::DeltaJ;
    if (s == "Omega-Delta") return Plane::OmegaDelta;
    throw InvalidInput("unknown plane '" + std::string(s) + "' (expected J-Omega, delta-J or Omega-Delta)");
}

std::pair<std::string, std::string> plane_axes(Plane p) {
    switch (p) {
        case Plane::JOmega: return {"J", "Omega"};
        case Plane::DeltaJ: return {"delta", "J"};
        case Plane::OmegaDelta: return {"Omega", "Delta"};
    }
    return {};
}

// ---------------------------------------------------------------------------

ComplexMatrix pt_hamiltonian(const PTParams& p) {
    return p.J * sigma_x() - Complex(0.0, p.Gamma / 2.0) * sigma_z();
}

ComplexMatrix encircle_hamiltonian_at(double J, double Omega, double Gamma) {
    return J * sigma_x() - Complex(Omega, Gamma / 2.0) * sigma_z();
}

ComplexMatrix encircle_hamiltonian(const EncirclePath& path, double Gamma, double t) {
    if (path.plane != Plane::JOmega) throw InvalidInput("encircle_hamiltonian needs a J-Omega path");
    const auto [J, Omega] = path.point(t);
    return encircle_hamiltonian_at(J, Omega, Gamma);
}

ComplexMatrix coldatom_heff(const ColdAtomParams& p) {
    const ComplexMatrix id = ComplexMatrix::identity(2);
    return (p.delta / 2.0) * sigma_z() - p.coupling * sigma_x() - Complex(0.0, p.Gamma / 4.0) * (id - sigma_z());
}

ComplexMatrix build_liouvillian(const ComplexMatrix& h, std::span<const JumpTerm> jumps) {
    const std::size_t n = h.dim();
    if (n == 0) throw InvalidInput("build_liouvillian: empty Hamiltonian");
    if (!linalg::all_finite(h)) throw InvalidInput("build_liouvillian: non-finite Hamiltonian");
    const ComplexMatrix id = ComplexMatrix::identity(n);
    ComplexMatrix l = Complex(0.0, -1.0) * (kron(h, id) - kron(id, transpose(h)));
    for (const auto& jump : jumps) {
        if (jump.op.dim() != n) {
            throw DimensionMismatch("jump operator dim " + std::to_string(jump.op.dim()) + " != " + std::to_string(n));
        }
        const ComplexMatrix ldl = adjoint(jump.op) * jump.op;
        if (!jump.drop_recycling) l += kron(jump.op, conjugate(jump.op));
        l -= 0.5 * kron(ldl, id);
        l -= 0.5 * kron(id, transpose(ldl));
    }
    return l;
}

ComplexMatrix basic_liouvillian(double J, double Gamma) { return detuned_liouvillian(J, 0.0, Gamma); }

ComplexMatrix detuned_liouvillian(double J, double delta, double Gamma) {
    const ComplexMatrix h = J * sigma_x() + (delta / 2.0) * sigma_z();
    const JumpTerm jumps[] = {{std::sqrt(Gamma) * sigma_minus(), false}};
    return build_liouvillian(h, jumps);
}

ComplexMatrix coldatom_liouvillian(const ColdAtomParams& p) {
    const ComplexMatrix h = p.coupling * sigma_x() + (p.delta / 2.0) * sigma_z();
    const ComplexMatrix proj2{{0.0, 0.0}, {0.0, 1.0}};
    const JumpTerm jumps[] = {{std::sqrt(p.Gamma) * sigma_minus(), true}, {std::sqrt(p.gamma) * proj2, false}};
    return build_liouvillian(h, jumps);
}

std::pair<Complex, Complex> perturbed_ep_splitting(const PTParams& p, const PerturbParams& q) {
    if (std::abs(p.J - p.Gamma / 2.0) > 1e-12 * (1.0 + p.Gamma)) {
        throw InvalidInput("perturbed_ep_splitting: parameters are not at the EP (J != Gamma/2)");
    }
    // (J + eps) sigma_x - i (Gamma/2) sigma_z has eigenvalues
    // +-sqrt((J - Gamma/2 + eps)(J + Gamma/2 + eps)); the factored form avoids
    // rounding J + eps before the cancellation.
    const Complex prod = ((p.J - p.Gamma / 2.0) + q.epsilon) * ((p.J + p.Gamma / 2.0) + q.epsilon);
    const Complex root = std::sqrt(prod);
    std::vector<Complex> ev{root, -root};
    const auto order = linalg::canonical_order(ev, 2.0 * std::abs(p.J + q.epsilon) + p.Gamma);
    return {ev[order[0]], ev[order[1]]};
}

// ---------------------------------------------------------------------------

namespace {

std::vector<ModelInfo> make_catalog() {
    return {
        {"pt", ModelKind::Hamiltonian, {"J", "Gamma"}, {}, "J sigma_x - i (Gamma/2) sigma_z"},
        {"encircle",
         ModelKind::Hamiltonian,
         {"J", "Omega", "Gamma"},
         {},
         "J sigma_x - (Omega + i Gamma/2) sigma_z"},
        {"coldatom_heff",
         ModelKind::Hamiltonian,
         {"delta", "J", "Gamma"},
         {{"Omega", "J"}},
         "(delta/2) sigma_z - J sigma_x - i (Gamma/4)(1 - sigma_z)"},
        {"coldatom_liouvillian",
         ModelKind::Liouvillian,
         {"delta", "J", "Gamma", "gamma"},
         {{"Omega", "J"}},
         "H = J sigma_x + (delta/2) sigma_z; sqrt(Gamma) |1><2| post-selected, sqrt(gamma) |2><2|"},
        {"basic_liouvillian", ModelKind::Liouvillian, {"J", "Gamma"}, {}, "H = J sigma_x; sqrt(Gamma) |1><2|"},
        {"detuned_liouvillian",
         ModelKind::Liouvillian,
         {"delta", "J", "Gamma"},
         {},
         "H = J sigma_x + (delta/2) sigma_z; sqrt(Gamma) |1><2|"},
    };
}

}  // namespace

const std::vector<ModelInfo>& catalog() {
    static const std::vector<ModelInfo> c = make_catalog();
    return c;
}

const ModelInfo& model_info(std::string_view name) {
    for (const auto& m : catalog())
        if (m.name == name) return m;
    throw UnknownModel("unknown model '" + std::string(name) + "'");
}

std::string canonical_param(const ModelInfo& info, std::string_view name) {
    if (std::find(info.params.begin(), info.params.end(), name) != info.params.end()) return std::string(name);
    for (const auto& [alias, canon] : info.aliases)
        if (alias == name) return canon;
    throw InvalidInput("model '" + info.name + "' has no parameter '" + std::string(name) + "'");
}

std::vector<double> resolve_params(const ModelInfo& info, const ParamMap& params) {
    std::vector<double> values(info.params.size());
    std::vector<bool> seen(info.params.size(), false);
    for (const auto& [name, value] : params) {
        const std::string canon = canonical_param(info, name);
        const auto k = static_cast<std::size_t>(
            std::find(info.params.begin(), info.params.end(), canon) - info.params.begin());
        if (seen[k]) throw InvalidInput("parameter '" + canon + "' given twice (through an alias)");
        if (!std::isfinite(value)) throw InvalidInput("parameter '" + name + "' is not finite");
        seen[k] = true;
        values[k] = value;
    }
    for (std::size_t k = 0; k < seen.size(); ++k)
        if (!seen[k]) throw InvalidInput("model '" + info.name + "' needs parameter '" + info.params[k] + "'");
    return values;
}

ComplexMatrix build_model_values(const ModelInfo& info, std::span<const double> v) {
    if (v.size() != info.params.size()) throw DimensionMismatch("parameter count mismatch for " + info.name);
    const std::string& n = info.name;
    if (n == "pt") return pt_hamiltonian({v[0], v[1]});
    if (n == "encircle") return encircle_hamiltonian_at(v[0], v[1], v[2]);
    if (n == "coldatom_heff") return coldatom_heff({v[0], v[1], v[2], 0.0});
    if (n == "coldatom_liouvillian") return coldatom_liouvillian({v[0], v[1], v[2], v[3]});
    if (n == "basic_liouvillian") return basic_liouvillian(v[0], v[1]);
    if (n == "detuned_liouvillian") return detuned_liouvillian(v[1], v[0], v[2]);
    throw UnknownModel("unknown model '" + n + "'");
}

ComplexMatrix build_model(std::string_view name, const ParamMap& params) {
    const ModelInfo& info = model_info(name);
    return build_model_values(info, resolve_params(info, params));
}

}  // namespace lep::models
