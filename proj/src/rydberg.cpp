#include "lep/rydberg.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <map>
#include <numbers>

namespace lep::rydberg {

void RydbergParams::validate() const {
    if (!std::isfinite(Omega) || !std::isfinite(Delta) || !std::isfinite(gamma) || !std::isfinite(NV)) {
        throw InvalidInput("Rydberg parameters must be finite");
    }
    if (!(gamma > 0.0)) throw InvalidInput("gamma must be positive");
    if (Omega < 0.0) throw InvalidInput("Omega must be >= 0");
}

RealState to_real(const BlochState& s) { return {s.rho22, s.rho21.real(), s.rho21.imag()}; }
BlochState from_real(const RealState& r) { return {r[0], Complex(r[1], r[2])}; }

BlochState bloch_rhs(const BlochState& s, const RydbergParams& p) {
    const Complex i(0.0, 1.0);
    const double detuning = p.Delta - p.NV * s.rho22;
    BlochState d;
    d.rho22 = -p.Omega * s.rho21.imag() - p.gamma * s.rho22;
    d.rho21 = i * detuning * s.rho21 - 0.5 * p.gamma * s.rho21 + i * p.Omega * (s.rho22 - 0.5);
    return d;
}

RealState bloch_rhs_real(const RealState& s, const RydbergParams& p) {
    const double d = p.Delta - p.NV * s[0];
    return {-p.Omega * s[2] - p.gamma * s[0], -d * s[2] - 0.5 * p.gamma * s[1],
            d * s[1] - 0.5 * p.gamma * s[2] + p.Omega * (s[0] - 0.5)};
}

Jacobian jacobian(const RealState& s, const RydbergParams& p) {
    const double d = p.Delta - p.NV * s[0];
    Jacobian j{};
    j[0] = {-p.gamma, 0.0, -p.Omega};
    j[1] = {p.NV * s[2], -0.5 * p.gamma, -d};
    j[2] = {-p.NV * s[1] + p.Omega, d, -0.5 * p.gamma};
    return j;
}

std::array<double, 4> steady_cubic(const RydbergParams& p) {
    const double v = p.NV;
    return {-0.25 * p.Omega * p.Omega, p.Delta * p.Delta + 0.25 * p.gamma * p.gamma + 0.5 * p.Omega * p.Omega,
            -2.0 * p.Delta * v, v * v};
}

Complex steady_coherence(double n, const RydbergParams& p) {
    const double d = p.Delta - p.NV * n;
    return p.Omega * (n - 0.5) * Complex(-d, 0.5 * p.gamma) / (d * d + 0.25 * p.gamma * p.gamma);
}

double discriminant(const RydbergParams& p) {
    if (p.NV == 0.0) return -1.0;
    const auto c = steady_cubic(p);
    const double b = c[2] / c[3], cc = c[1] / c[3], d = c[0] / c[3];
    return 18.0 * b * cc * d - 4.0 * b * b * b * d + b * b * cc * cc - 4.0 * cc * cc * cc - 27.0 * d * d;
}

std::string_view to_string(Stability s) {
    switch (s) {
        case Stability::Stable: return "stable";
        case Stability::Unstable: return "unstable";
        case Stability::Marginal: return "marginal";
    }
    return "";
}

std::vector<std::size_t> SteadyStateSet::stable_indices() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < roots.size(); ++i)
        if (roots[i].stability == Stability::Stable) out.push_back(i);
    return out;
}

StabilityResult stability(const RydbergParams& p, const SteadyRoot& root) {
    const Jacobian j = jacobian(to_real({root.n, root.rho21}), p);
    linalg::ComplexMatrix m(3);
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) m(r, c) = j[r][c];
    const auto ev = linalg::eigenvalues(m);
    StabilityResult out;
    bool unstable = false, marginal = false;
    for (int k = 0; k < 3; ++k) {
        out.eigenvalues[k] = ev[k];
        if (ev[k].real() > kMarginalTol) unstable = true;
        else if (ev[k].real() >= -kMarginalTol) marginal = true;
    }
    out.label = unstable ? Stability::Unstable : marginal ? Stability::Marginal : Stability::Stable;
    return out;
}

namespace {

double cubic_value(const std::array<double, 4>& c, double n) { return ((c[3] * n + c[2]) * n + c[1]) * n + c[0]; }
double cubic_slope(const std::array<double, 4>& c, double n) { return (3.0 * c[3] * n + 2.0 * c[2]) * n + c[1]; }

std::vector<Complex> cubic_roots(const std::array<double, 4>& c) {
    linalg::ComplexMatrix comp(3);
    comp(0, 0) = -c[2] / c[3];
    comp(0, 1) = -c[1] / c[3];
    comp(0, 2) = -c[0] / c[3];
    comp(1, 0) = 1.0;
    comp(2, 1) = 1.0;
    return linalg::eigenvalues(comp);
}

double max_abs(const RealState& r) { return std::max({std::abs(r[0]), std::abs(r[1]), std::abs(r[2])}); }

}  // namespace

SteadyStateSet steady_states(const RydbergParams& p) {
    p.validate();
    const auto c = steady_cubic(p);
    std::vector<double> ns;
    if (p.NV == 0.0) {
        ns.push_back(-c[0] / c[1]);
    } else {
        for (const Complex& z : cubic_roots(c)) {
            if (std::abs(z.imag()) >= kRootImagTol) continue;
            double n = z.real();
            for (int it = 0; it < 6; ++it) {
                const double slope = cubic_slope(c, n);
                if (slope == 0.0) break;
                const double step = cubic_value(c, n) / slope;
                if (!std::isfinite(step) || std::abs(step) > 1e-6 * (1.0 + std::abs(n))) break;
                n -= step;
                if (std::abs(step) <= 1e-17) break;
            }
            ns.push_back(n);
        }
    }
    SteadyStateSet out;
    for (double n : ns) {
        if (n < 0.0 && n > -1e-9) n = 0.0;
        if (n > 1.0 && n < 1.0 + 1e-9) n = 1.0;
        if (n < 0.0 || n > 1.0) continue;
        SteadyRoot r;
        r.n = n;
        r.rho21 = steady_coherence(n, p);
        r.residual = max_abs(bloch_rhs_real(to_real({r.n, r.rho21}), p));
        const auto st = stability(p, r);
        r.stability = st.label;
        r.jacobian_eigenvalues = st.eigenvalues;
        out.roots.push_back(r);
    }
    std::sort(out.roots.begin(), out.roots.end(), [](const SteadyRoot& a, const SteadyRoot& b) { return a.n < b.n; });
    return out;
}

std::vector<CuspPoint> cusps_closed_form(double gamma, double NV) {
    if (NV == 0.0 || !(gamma > 0.0)) return {};
    const double v2 = NV * NV;
    const std::vector<Complex> poly{0.25 * gamma * gamma, 0.0, -0.75 * v2, 2.0 * v2};
    std::vector<CuspPoint> out;
    for (const Complex& z : linalg::polynomial_roots(poly)) {
        if (std::abs(z.imag()) > 1e-12 || z.real() <= 0.0) continue;
        const double n0 = z.real();
        out.push_back({2.0 * std::abs(NV) * std::pow(n0, 1.5), 1.5 * NV * n0, n0});
    }
    std::sort(out.begin(), out.end(), [](const CuspPoint& a, const CuspPoint& b) { return a.Omega < b.Omega; });
    return out;
}

std::optional<CuspPoint> refine_cusp(double gamma, double NV, CuspPoint seed) {
    if (NV == 0.0) return std::nullopt;
    const double v = NV, g2 = 0.25 * gamma * gamma;
    double n = seed.n, dl = seed.Delta, om = seed.Omega;
    auto residual = [&](double n_, double d_, double o_) {
        const double c1 = d_ * d_ + g2 + 0.5 * o_ * o_;
        return std::array<double, 3>{v * v * n_ * n_ * n_ - 2.0 * d_ * v * n_ * n_ + c1 * n_ - 0.25 * o_ * o_,
                                     3.0 * v * v * n_ * n_ - 4.0 * d_ * v * n_ + c1, 6.0 * v * v * n_ - 4.0 * d_ * v};
    };
    for (int it = 0; it < 60; ++it) {
        const auto r = residual(n, dl, om);
        linalg::ComplexMatrix j(3);
        j(0, 0) = r[1];
        j(0, 1) = -2.0 * v * n * n + 2.0 * dl * n;
        j(0, 2) = om * n - 0.5 * om;
        j(1, 0) = r[2];
        j(1, 1) = -4.0 * v * n + 2.0 * dl;
        j(1, 2) = om;
        j(2, 0) = 6.0 * v * v;
        j(2, 1) = -4.0 * v;
        j(2, 2) = 0.0;
        linalg::ComplexVector step;
        try {
            step = linalg::solve(j, linalg::ComplexVector{-r[0], -r[1], -r[2]});
        } catch (const SingularMatrix&) {
            return std::nullopt;
        }
        n += step[0].real();
        dl += step[1].real();
        om += step[2].real();
        if (!std::isfinite(n + dl + om)) return std::nullopt;
        if (std::abs(step[0].real()) + std::abs(step[1].real()) / (1.0 + std::abs(dl)) +
                std::abs(step[2].real()) / (1.0 + std::abs(om)) <
            1e-15) {
            break;
        }
    }
    const auto r = residual(n, dl, om);
    const double scale = v * v + dl * dl + om * om + gamma * gamma;
    if (std::max({std::abs(r[0]), std::abs(r[1]), std::abs(r[2])}) > 1e-10 * scale) return std::nullopt;
    if (!(n > 0.0 && n < 1.0)) return std::nullopt;
    // Omega enters squared; report the physical branch.
    return CuspPoint{std::abs(om), dl, n};
}

// ---------------------------------------------------------------------------

std::size_t RydbergPlane::cells() const {
    return static_cast<std::size_t>(std::max(omega.resolution, 0)) * static_cast<std::size_t>(std::max(delta.resolution, 0));
}

void RydbergPlane::validate() const {
    spectra::PlaneSpec spec{omega, delta, {}};
    spec.validate();
    if (omega.min < 0.0) throw InvalidInput("Omega axis must be non-negative");
    RydbergParams{0.0, 0.0, gamma, NV}.validate();
}

RydbergParams RydbergPlane::at(int ix, int iy) const { return {omega.at(ix), delta.at(iy), gamma, NV}; }

RydbergPlane plane_from_spec(const spectra::PlaneSpec& spec) {
    if (spec.x.name != "Omega" || spec.y.name != "Delta") {
        throw InvalidInput("Rydberg planes need x = Omega and y = Delta");
    }
    RydbergPlane plane;
    plane.omega = spec.x;
    plane.delta = spec.y;
    bool have_gamma = false, have_nv = false;
    for (const auto& [k, v] : spec.fixed) {
        if (k == "gamma") {
            plane.gamma = v;
            have_gamma = true;
        } else if (k == "NV") {
            plane.NV = v;
            have_nv = true;
        } else {
            throw InvalidInput("Rydberg model has no fixed parameter '" + k + "'");
        }
    }
    if (!have_gamma || !have_nv) throw InvalidInput("Rydberg planes need fixed gamma and NV");
    plane.validate();
    return plane;
}

namespace {

ScanCell scan_cell(const RydbergParams& p) { return {discriminant(p), steady_states(p)}; }

}  // namespace

SteadyScan scan_steady_serial(const RydbergPlane& plane) {
    plane.validate();
    SteadyScan s{plane, {}};
    s.cells.reserve(plane.cells());
    for (int iy = 0; iy < plane.delta.resolution; ++iy)
        for (int ix = 0; ix < plane.omega.resolution; ++ix) s.cells.push_back(scan_cell(plane.at(ix, iy)));
    return s;
}

SteadyScan scan_steady(const RydbergPlane& plane, int threads) {
    if (threads < 1) throw InvalidInput("threads must be >= 1");
    plane.validate();
    SteadyScan s{plane, {}};
    const auto total = static_cast<std::ptrdiff_t>(plane.cells());
    const int nx = plane.omega.resolution;
    s.cells.resize(static_cast<std::size_t>(total));
    std::exception_ptr failure;
#pragma omp parallel for num_threads(threads) schedule(dynamic, 64)
    for (std::ptrdiff_t k = 0; k < total; ++k) {
        try {
            s.cells[static_cast<std::size_t>(k)] = scan_cell(plane.at(static_cast<int>(k % nx), static_cast<int>(k / nx)));
        } catch (...) {
#pragma omp critical
            if (!failure) failure = std::current_exception();
        }
    }
    if (failure) std::rethrow_exception(failure);
    return s;
}

// ---------------------------------------------------------------------------

namespace {

FoldPoint bisect_edge(const RydbergPlane& plane, FoldPoint a, FoldPoint b) {
    auto sign = [&](const FoldPoint& q) { return discriminant({q.Omega, q.Delta, plane.gamma, plane.NV}) > 0.0; };
    const bool sa = sign(a);
    for (int it = 0; it < 60; ++it) {
        const FoldPoint m{0.5 * (a.Omega + b.Omega), 0.5 * (a.Delta + b.Delta)};
        if (sign(m) == sa) a = m;
        else b = m;
    }
    return {0.5 * (a.Omega + b.Omega), 0.5 * (a.Delta + b.Delta)};
}

std::vector<FoldLine> march(const SteadyScan& scan) {
    const RydbergPlane& pl = scan.plane;
    const int nx = scan.nx(), ny = scan.ny();
    const int nh = (nx - 1) * ny;
    auto horizontal = [&](int ix, int iy) { return iy * (nx - 1) + ix; };
    auto vertical = [&](int ix, int iy) { return nh + iy * nx + ix; };
    std::map<int, std::vector<int>> adj;
    auto link = [&](int a, int b) {
        adj[a].push_back(b);
        adj[b].push_back(a);
    };
    auto pos = [&](int ix, int iy) { return scan.at(ix, iy).discriminant > 0.0; };
    for (int iy = 0; iy + 1 < ny; ++iy)
        for (int ix = 0; ix + 1 < nx; ++ix) {
            const bool s0 = pos(ix, iy), s1 = pos(ix + 1, iy), s2 = pos(ix + 1, iy + 1), s3 = pos(ix, iy + 1);
            const int e[4] = {horizontal(ix, iy), vertical(ix + 1, iy), horizontal(ix, iy + 1), vertical(ix, iy)};
            const bool cut[4] = {s0 != s1, s1 != s2, s3 != s2, s0 != s3};
            const int ncut = cut[0] + cut[1] + cut[2] + cut[3];
            if (ncut == 2) {
                int a = -1;
                for (int k = 0; k < 4; ++k)
                    if (cut[k]) {
                        if (a < 0) a = e[k];
                        else link(a, e[k]);
                    }
            } else if (ncut == 4) {
                const RydbergParams c{0.5 * (pl.omega.at(ix) + pl.omega.at(ix + 1)),
                                      0.5 * (pl.delta.at(iy) + pl.delta.at(iy + 1)), pl.gamma, pl.NV};
                if ((discriminant(c) > 0.0) == s0) {
                    link(e[0], e[1]);
                    link(e[2], e[3]);
                } else {
                    link(e[3], e[0]);
                    link(e[1], e[2]);
                }
            }
        }

    auto vertex = [&](int id) {
        if (id < nh) {
            const int ix = id % (nx - 1), iy = id / (nx - 1);
            return bisect_edge(pl, {pl.omega.at(ix), pl.delta.at(iy)}, {pl.omega.at(ix + 1), pl.delta.at(iy)});
        }
        const int k = id - nh, ix = k % nx, iy = k / nx;
        return bisect_edge(pl, {pl.omega.at(ix), pl.delta.at(iy)}, {pl.omega.at(ix), pl.delta.at(iy + 1)});
    };

    std::vector<FoldLine> lines;
    std::map<int, bool> seen;
    auto walk = [&](int start, bool closed) {
        FoldLine line;
        line.closed = closed;
        int prev = -1, cur = start;
        while (true) {
            seen[cur] = true;
            line.points.push_back(vertex(cur));
            int next = -1;
            for (int nb : adj[cur])
                if (nb != prev && !seen[nb]) {
                    next = nb;
                    break;
                }
            if (next < 0) break;
            prev = cur;
            cur = next;
        }
        lines.push_back(std::move(line));
    };
    for (const auto& [id, nbs] : adj)
        if (nbs.size() == 1 && !seen[id]) walk(id, false);
    for (const auto& [id, nbs] : adj)
        if (!seen[id]) walk(id, true);
    return lines;
}

double seed_population(const RydbergParams& p) {
    const auto roots = cubic_roots(steady_cubic(p));
    const auto cp = linalg::closest_pair(roots);
    return 0.5 * (roots[cp.i].real() + roots[cp.j].real());
}

}  // namespace

BistabilityMap bistability_map(const RydbergPlane& plane, int threads) {
    BistabilityMap map;
    map.scan = scan_steady(plane, threads);
    if (plane.NV == 0.0) return map;
    map.contours = march(map.scan);
    const double tol_o = plane.omega.step(), tol_d = plane.delta.step();
    for (const auto& line : map.contours) {
        const std::size_t stride = std::max<std::size_t>(1, line.points.size() / 64);
        for (std::size_t k = 0; k < line.points.size(); k += stride) {
            const FoldPoint& q = line.points[k];
            const double n0 = seed_population({q.Omega, q.Delta, plane.gamma, plane.NV});
            const auto c = refine_cusp(plane.gamma, plane.NV, {q.Omega, q.Delta, n0});
            if (!c) continue;
            if (c->Omega < plane.omega.min - tol_o || c->Omega > plane.omega.max + tol_o ||
                c->Delta < plane.delta.min - tol_d || c->Delta > plane.delta.max + tol_d) {
                continue;
            }
            const bool dup = std::any_of(map.cusps.begin(), map.cusps.end(), [&](const CuspPoint& o) {
                return std::abs(o.Omega - c->Omega) + std::abs(o.Delta - c->Delta) < 1e-6;
            });
            if (!dup) map.cusps.push_back(*c);
        }
    }
    std::sort(map.cusps.begin(), map.cusps.end(), [](const CuspPoint& a, const CuspPoint& b) { return a.Omega < b.Omega; });
    map.folds = fold_lines(plane, map.cusps);
    return map;
}

namespace {

struct FoldBranch {
    double gamma, NV;

    double q(double n) const {
        const double b = 4.0 * NV * n * (n - 1.0);
        const double c = 3.0 * NV * NV * n * n - 4.0 * NV * NV * n * n * n + 0.25 * gamma * gamma;
        return b * b - 4.0 * c;
    }
    /// Fold point on branch sign s = +-1; nullopt where Omega^2 < 0.
    std::optional<FoldPoint> at(double n, int s) const {
        const double b = 4.0 * NV * n * (n - 1.0);
        const double dl = 0.5 * (-b + s * std::sqrt(std::max(0.0, q(n))));
        const double om2 = 8.0 * NV * n * n * (dl - NV * n);
        if (om2 < 0.0) return std::nullopt;
        return FoldPoint{std::sqrt(om2), dl};
    }
};

double bisect_q(const FoldBranch& fb, double a, double b) {
    const bool sa = fb.q(a) >= 0.0;
    for (int it = 0; it < 80; ++it) {
        const double m = 0.5 * (a + b);
        if ((fb.q(m) >= 0.0) == sa) a = m;
        else b = m;
    }
    return sa ? a : b;
}

}  // namespace

std::vector<FoldLine> fold_lines(const RydbergPlane& plane, std::span<const CuspPoint> cusps) {
    plane.validate();
    if (plane.NV == 0.0) return {};
    const FoldBranch fb{plane.gamma, plane.NV};

    // n-intervals where the quadratic in Delta has real roots.
    constexpr int kScan = 20000;
    std::vector<std::pair<double, double>> intervals;
    double start = -1.0;
    for (int k = 0; k <= kScan; ++k) {
        const double n = static_cast<double>(k) / kScan;
        const bool ok = fb.q(n) >= 0.0;
        if (ok && start < 0.0) start = k == 0 ? 0.0 : bisect_q(fb, static_cast<double>(k - 1) / kScan, n);
        if (!ok && start >= 0.0) {
            intervals.emplace_back(start, bisect_q(fb, static_cast<double>(k - 1) / kScan, n));
            start = -1.0;
        }
    }
    if (start >= 0.0) intervals.emplace_back(start, 1.0);

    auto inside = [&](const FoldPoint& p) {
        return p.Omega >= plane.omega.min && p.Omega <= plane.omega.max && p.Delta >= plane.delta.min &&
               p.Delta <= plane.delta.max;
    };
    std::vector<FoldLine> out;
    constexpr int kSamples = 2000;
    for (const auto& [a, b] : intervals) {
        // Chebyshev-spaced n (dense where the two branches meet), cusp populations added exactly.
        std::vector<double> ns;
        for (int k = 0; k <= kSamples; ++k)
            ns.push_back(a + (b - a) * 0.5 * (1.0 - std::cos(std::numbers::pi * k / kSamples)));
        for (const auto& c : cusps)
            if (c.n > a && c.n < b) ns.push_back(c.n);
        std::sort(ns.begin(), ns.end());
        ns.erase(std::unique(ns.begin(), ns.end()), ns.end());

        // Walk the + branch up in n and the - branch back down: one curve.
        std::vector<std::optional<FoldPoint>> walk;
        for (double n : ns) walk.push_back(fb.at(n, +1));
        for (std::size_t k = ns.size(); k-- > 0;) walk.push_back(fb.at(ns[k], -1));
        const bool closed_curve = a > 0.0 && b < 1.0;

        std::vector<FoldLine> pieces;
        FoldLine cur;
        bool all_inside = true;
        for (const auto& p : walk) {
            if (!(p && inside(*p))) all_inside = false;
            if (p && inside(*p)) {
                if (!cur.points.empty() && std::hypot(cur.points.back().Omega - p->Omega, cur.points.back().Delta - p->Delta) == 0.0) {
                    continue;
                }
                cur.points.push_back(*p);
            } else if (!cur.points.empty()) {
                pieces.push_back(std::move(cur));
                cur = {};
            }
        }
        if (!cur.points.empty()) pieces.push_back(std::move(cur));
        if (closed_curve && all_inside && pieces.size() == 1) {
            pieces.front().closed = true;
            auto& pts = pieces.front().points;
            if (pts.size() > 2 && std::hypot(pts.back().Omega - pts.front().Omega, pts.back().Delta - pts.front().Delta) < 1e-6) {
                pts.pop_back();
            }
        } else if (closed_curve && pieces.size() >= 2 && walk.front() && inside(*walk.front()) && walk.back() &&
                   inside(*walk.back())) {
            // The walk wraps around: join the last piece onto the first.
            auto& last = pieces.back().points;
            last.insert(last.end(), pieces.front().points.begin(), pieces.front().points.end());
            pieces.front() = std::move(pieces.back());
            pieces.pop_back();
        }
        for (auto& pc : pieces)
            if (pc.points.size() >= 2) out.push_back(std::move(pc));
    }
    return out;
}

// ---------------------------------------------------------------------------

int default_bloch_steps(double T, double gamma) {
    if (!std::isfinite(T) || T <= 0.0) throw InvalidInput("T must be positive and finite");
    if (!(gamma > 0.0)) throw InvalidInput("gamma must be positive");
    return std::max(100, static_cast<int>(std::ceil(T * gamma / kRydbergDt - 1e-9)));
}

namespace {

struct BlochRun {
    std::vector<double> times;
    std::vector<RealState> states;
};

BlochRun rk4_bloch(const ParamSchedule& schedule, RealState x, double T, int steps, int stride) {
    BlochRun run;
    run.times.push_back(0.0);
    run.states.push_back(x);
    const double h = T / steps;
    RydbergParams p_now = schedule(0.0);
    for (int i = 0; i < steps; ++i) {
        const double t0 = T * i / steps;
        const double t1 = T * (i + 1) / steps;
        const RydbergParams p_mid = schedule(0.5 * (t0 + t1));
        const RydbergParams p_next = schedule(t1);
        const RealState k1 = bloch_rhs_real(x, p_now);
        RealState tmp;
        for (int j = 0; j < 3; ++j) tmp[j] = x[j] + 0.5 * h * k1[j];
        const RealState k2 = bloch_rhs_real(tmp, p_mid);
        for (int j = 0; j < 3; ++j) tmp[j] = x[j] + 0.5 * h * k2[j];
        const RealState k3 = bloch_rhs_real(tmp, p_mid);
        for (int j = 0; j < 3; ++j) tmp[j] = x[j] + h * k3[j];
        const RealState k4 = bloch_rhs_real(tmp, p_next);
        for (int j = 0; j < 3; ++j) x[j] += (h / 6.0) * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
        if (!std::isfinite(x[0] + x[1] + x[2])) throw NonConvergence("Bloch integration diverged at t = " + std::to_string(t1));
        p_now = p_next;
        if ((i + 1) % stride == 0 || i + 1 == steps) {
            run.times.push_back(t1);
            run.states.push_back(x);
        }
    }
    return run;
}

}  // namespace

RydbergTrajectory integrate_bloch(const ParamSchedule& schedule, const BlochState& s0, const BlochOptions& opts) {
    if (!std::isfinite(opts.T) || opts.T <= 0.0) throw InvalidInput("T must be positive and finite");
    if (opts.steps < 100) throw InvalidInput("steps must be >= 100");
    if (opts.records < 1) throw InvalidInput("records must be >= 1");
    if (!std::isfinite(s0.rho22) || !std::isfinite(s0.rho21.real()) || !std::isfinite(s0.rho21.imag())) {
        throw InvalidInput("initial Bloch state must be finite");
    }
    const int stride = std::max(1, opts.steps / opts.records);
    const BlochRun run = rk4_bloch(schedule, to_real(s0), opts.T, opts.steps, stride);
    if (opts.check_steps) {
        const BlochRun fine = rk4_bloch(schedule, to_real(s0), opts.T, 2 * opts.steps, 2 * stride);
        for (std::size_t k = 0; k < run.times.size(); ++k) {
            const double diff = std::abs(run.states[k][0] - fine.states[k][0]);
            if (diff >= 1e-6) {
                throw StepTooCoarse("n_R changes by " + std::to_string(diff) + " under step halving at t = " +
                                    std::to_string(run.times[k]));
            }
        }
    }
    RydbergTrajectory tr;
    tr.times = run.times;
    for (std::size_t k = 0; k < run.times.size(); ++k) {
        tr.states.push_back(from_real(run.states[k]));
        const RydbergParams p = schedule(run.times[k]);
        tr.Omega.push_back(p.Omega);
        tr.Delta.push_back(p.Delta);
    }
    return tr;
}

std::string_view to_string(InitialRoot r) { return r == InitialRoot::Lower ? "lower" : "upper"; }

InitialRoot parse_initial_root(std::string_view s) {
    if (s == "lower") return InitialRoot::Lower;
    if (s == "upper") return InitialRoot::Upper;
    throw InvalidInput("unknown initial root '" + std::string(s) + "' (expected lower or upper)");
}

namespace {

ParamSchedule path_schedule(const models::EncirclePath& path, double gamma, double NV) {
    return [path, gamma, NV](double t) {
        const auto [om, dl] = path.point(t);
        return RydbergParams{om, dl, gamma, NV};
    };
}

void check_path(const models::EncirclePath& path) {
    path.validate();
    if (path.plane != models::Plane::OmegaDelta) throw InvalidInput("Rydberg encircling needs an Omega-Delta path");
}

}  // namespace

SteadyDirection encircle_steady_direction(const models::EncirclePath& path, double gamma, double NV,
                                          InitialRoot initial, int steps, int records, bool check_steps) {
    check_path(path);
    const ParamSchedule schedule = path_schedule(path, gamma, NV);
    const RydbergParams p0 = schedule(0.0);
    const SteadyStateSet start = steady_states(p0);
    const auto stable0 = start.stable_indices();
    if (stable0.empty()) throw InvalidInput("no stable steady state at the start of the path");
    const SteadyRoot& root = start.roots[initial == InitialRoot::Lower ? stable0.front() : stable0.back()];

    SteadyDirection out;
    out.direction = path.direction;
    const BlochOptions opts{path.period, steps > 0 ? steps : default_bloch_steps(path.period, gamma), records, check_steps};
    out.trajectory = integrate_bloch(schedule, {root.n, root.rho21}, opts);
    out.initial_n = root.n;
    out.final_n = out.trajectory.states.back().rho22;

    const SteadyStateSet end = steady_states(schedule(path.period));
    const auto stable1 = end.stable_indices();
    if (stable1.size() >= 2) {
        std::size_t nearest = 0;
        for (std::size_t k = 1; k < stable1.size(); ++k)
            if (std::abs(end.roots[stable1[k]].n - out.final_n) < std::abs(end.roots[stable1[nearest]].n - out.final_n)) {
                nearest = k;
            }
        const std::size_t expected = initial == InitialRoot::Lower ? 0 : stable1.size() - 1;
        out.switched = nearest != expected;
    }
    return out;
}

SteadyEncircle encircle_steady(const models::EncirclePath& path, double gamma, double NV, InitialRoot initial, int steps,
                               int records, bool check_steps) {
    models::EncirclePath ccw = path, cw = path;
    ccw.direction = models::Direction::CCW;
    cw.direction = models::Direction::CW;
    SteadyEncircle out;
    out.ccw = encircle_steady_direction(ccw, gamma, NV, initial, steps, records, check_steps);
    out.cw = encircle_steady_direction(cw, gamma, NV, initial, steps, records, check_steps);
    out.chiral = out.ccw.switched != out.cw.switched;
    return out;
}

// ---------------------------------------------------------------------------

namespace {

struct Arc {
    std::vector<double> s;  // cumulative length at each vertex (closing segment appended for closed lines)
    double length = 0.0;
};

std::vector<FoldPoint> segment_points(const FoldLine& line) {
    std::vector<FoldPoint> pts = line.points;
    if (line.closed && pts.size() > 2) pts.push_back(pts.front());
    return pts;
}

Arc arc_of(const std::vector<FoldPoint>& pts) {
    Arc a;
    a.s.push_back(0.0);
    for (std::size_t k = 1; k < pts.size(); ++k)
        a.s.push_back(a.s.back() + std::hypot(pts[k].Omega - pts[k - 1].Omega, pts[k].Delta - pts[k - 1].Delta));
    a.length = a.s.back();
    return a;
}

/// Nearest point of a polyline: distance and arc position.
std::pair<double, double> project(const std::vector<FoldPoint>& pts, const Arc& arc, double om, double dl) {
    double best = std::numeric_limits<double>::infinity(), where = 0.0;
    for (std::size_t k = 0; k + 1 < pts.size(); ++k) {
        const double ax = pts[k].Omega, ay = pts[k].Delta;
        const double bx = pts[k + 1].Omega - ax, by = pts[k + 1].Delta - ay;
        const double len2 = bx * bx + by * by;
        const double t = len2 > 0.0 ? std::clamp(((om - ax) * bx + (dl - ay) * by) / len2, 0.0, 1.0) : 0.0;
        const double d = std::hypot(ax + t * bx - om, ay + t * by - dl);
        if (d < best) {
            best = d;
            where = arc.s[k] + t * (arc.s[k + 1] - arc.s[k]);
        }
    }
    return {best, where};
}

bool intersect(double px, double py, double qx, double qy, double ax, double ay, double bx, double by, double& t,
               double& u) {
    const double rx = qx - px, ry = qy - py, sx = bx - ax, sy = by - ay;
    const double den = rx * sy - ry * sx;
    if (den == 0.0) return false;
    t = ((ax - px) * sy - (ay - py) * sx) / den;
    u = ((ax - px) * ry - (ay - py) * rx) / den;
    return t >= 0.0 && t < 1.0 && u >= 0.0 && u <= 1.0;
}

}  // namespace

TransferConditions check_conditions(const models::EncirclePath& path, const BistabilityMap& map, InitialRoot initial) {
    check_path(path);
    const RydbergPlane& pl = map.scan.plane;
    TransferConditions tc;

    const auto [om0, dl0] = path.point(0.0);
    const RydbergParams p0{om0, dl0, pl.gamma, pl.NV};
    if (discriminant(p0) > 0.0) {
        const SteadyStateSet s = steady_states(p0);
        const auto stable = s.stable_indices();
        tc.initial_in_bistable = s.size() == 3 && stable.size() == 2 &&
                                 s.roots[initial == InitialRoot::Lower ? stable.front() : stable.back()].stability ==
                                     Stability::Stable;
    }

    // Cusp nearest to the loop center and the fold line carrying it.
    const CuspPoint* cusp = nullptr;
    for (const auto& c : map.cusps)
        if (!cusp || std::hypot(c.Omega - path.cx, c.Delta - path.cy) < std::hypot(cusp->Omega - path.cx, cusp->Delta - path.cy)) {
            cusp = &c;
        }
    const double carry_tol = 2.0 * std::max(pl.omega.step(), pl.delta.step());
    int cusp_line = -1;
    double cusp_arc = 0.0;
    std::vector<std::vector<FoldPoint>> pts;
    std::vector<Arc> arcs;
    for (const auto& line : map.folds) {
        pts.push_back(segment_points(line));
        arcs.push_back(arc_of(pts.back()));
    }
    if (cusp) {
        double best = carry_tol;
        for (std::size_t l = 0; l < pts.size(); ++l) {
            const auto [d, s] = project(pts[l], arcs[l], cusp->Omega, cusp->Delta);
            if (d < best) {
                best = d;
                cusp_line = static_cast<int>(l);
                cusp_arc = s;
            }
        }
    }
    // Second split point of a closed curve: the other cusp on it, else the antipode.
    double split = 0.0;
    if (cusp_line >= 0 && map.folds[cusp_line].closed) {
        const double len = arcs[cusp_line].length;
        split = 0.5 * len;
        for (const auto& c : map.cusps) {
            if (&c == cusp) continue;
            const auto [d, s] = project(pts[cusp_line], arcs[cusp_line], c.Omega, c.Delta);
            if (d < carry_tol) split = std::fmod(s - cusp_arc + len, len);
        }
    }

    models::EncirclePath ccw = path;
    ccw.direction = models::Direction::CCW;
    constexpr int kPathSegments = 8192;
    for (int k = 0; k < kPathSegments; ++k) {
        const auto [px, py] = ccw.point(path.period * k / kPathSegments);
        const auto [qx, qy] = ccw.point(path.period * (k + 1) / kPathSegments);
        for (std::size_t l = 0; l < pts.size(); ++l)
            for (std::size_t j = 0; j + 1 < pts[l].size(); ++j) {
                double t = 0.0, u = 0.0;
                if (!intersect(px, py, qx, qy, pts[l][j].Omega, pts[l][j].Delta, pts[l][j + 1].Omega,
                               pts[l][j + 1].Delta, t, u)) {
                    continue;
                }
                PathCrossing c;
                c.u = (k + t) / kPathSegments;
                c.Omega = px + t * (qx - px);
                c.Delta = py + t * (qy - py);
                if (static_cast<int>(l) == cusp_line) {
                    c.line = cusp_line;
                    const double s = arcs[l].s[j] + u * (arcs[l].s[j + 1] - arcs[l].s[j]);
                    if (map.folds[l].closed) {
                        const double len = arcs[l].length;
                        const double rel = std::fmod(s - cusp_arc + len, len);
                        c.arc = rel < split ? rel : rel - len;
                    } else {
                        c.arc = s - cusp_arc;
                    }
                }
                tc.crossings.push_back(c);
            }
    }
    if (tc.crossings.empty()) throw NoIntersections("the path never crosses a fold line");
    std::sort(tc.crossings.begin(), tc.crossings.end(), [](const PathCrossing& a, const PathCrossing& b) { return a.u < b.u; });
    const PathCrossing& first = tc.crossings.front();
    const PathCrossing& last = tc.crossings.back();
    tc.nearest_crossings_straddle_cusp = tc.crossings.size() >= 2 && first.line >= 0 && last.line >= 0 &&
                                         first.arc * last.arc < 0.0;
    return tc;
}

}  // namespace lep::rydberg
