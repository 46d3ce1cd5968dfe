#include "lep/spectra.hpp"

#include <algorithm>
#include <cmath>
#include <exception>

namespace lep::spectra {

double Axis::at(int i) const {
    if (i == resolution - 1) return max;
    return min + (max - min) * static_cast<double>(i) / static_cast<double>(resolution - 1);
}

std::size_t PlaneSpec::cells() const {
    return static_cast<std::size_t>(std::max(x.resolution, 0)) * static_cast<std::size_t>(std::max(y.resolution, 0));
}

void PlaneSpec::validate() const {
    for (const Axis* a : {&x, &y}) {
        if (a->name.empty()) throw InvalidInput("plane axis needs a parameter name");
        if (!std::isfinite(a->min) || !std::isfinite(a->max) || !(a->min < a->max)) {
            throw InvalidInput("plane axis '" + a->name + "' needs finite min < max");
        }
        if (a->resolution < 2) throw InvalidInput("plane axis '" + a->name + "' needs resolution >= 2");
    }
    if (x.name == y.name) throw InvalidInput("plane axes must name different parameters");
    if (cells() > kMaxCells) {
        throw ResolutionTooLarge(std::to_string(cells()) + " cells exceeds the limit of " + std::to_string(kMaxCells));
    }
}

PlaneModel::PlaneModel(std::string_view model, const PlaneSpec& plane) : info_(&models::model_info(model)) {
    plane.validate();
    const std::string cx = models::canonical_param(*info_, plane.x.name);
    const std::string cy = models::canonical_param(*info_, plane.y.name);
    if (cx == cy) throw InvalidInput("plane axes resolve to the same parameter '" + cx + "'");
    models::ParamMap all;
    for (const auto& [k, v] : plane.fixed) {
        const std::string c = models::canonical_param(*info_, k);
        if (c == cx || c == cy) throw InvalidInput("parameter '" + k + "' is both fixed and a plane axis");
        all[k] = v;
    }
    all[plane.x.name] = 0.0;
    all[plane.y.name] = 0.0;
    values_ = models::resolve_params(*info_, all);
    const auto& p = info_->params;
    ix_ = static_cast<std::size_t>(std::find(p.begin(), p.end(), cx) - p.begin());
    iy_ = static_cast<std::size_t>(std::find(p.begin(), p.end(), cy) - p.begin());
}

ComplexMatrix PlaneModel::at(double x, double y) const {
    std::vector<double> v = values_;
    v[ix_] = x;
    v[iy_] = y;
    return models::build_model_values(*info_, v);
}

// ---------------------------------------------------------------------------

namespace {

int discriminant_sign(std::span<const Complex> ev) {
    Complex prod = 1.0;
    for (std::size_t i = 0; i < ev.size(); ++i)
        for (std::size_t j = i + 1; j < ev.size(); ++j) {
            const Complex d = ev[i] - ev[j];
            prod *= d * d;
        }
    return prod.real() > 0.0 ? 1 : -1;
}

bool poly_is_real(const ComplexMatrix& m, double norm) {
    const auto c = linalg::char_poly(m);
    const std::size_t n = m.dim();
    double scale = 1.0;
    for (std::size_t k = n + 1; k-- > 0;) {
        if (std::abs(c[k].imag()) > 1e-10 * scale) return false;
        scale *= 1.0 + norm;
    }
    return true;
}

double max_overlap(const linalg::SpectralDecomposition& d) {
    double best = 0.0;
    for (std::size_t i = 0; i < d.dim(); ++i)
        for (std::size_t j = i + 1; j < d.dim(); ++j) best = std::max(best, linalg::coalescence_measure(d, i, j));
    return best;
}

/// Squared difference of the closest eigenvalue pair, smooth near a second-order EP.
Complex pair_discriminant(const ComplexMatrix& m) {
    const auto ev = linalg::eigenvalues(m);
    const auto cp = linalg::closest_pair(ev);
    const Complex d = ev[cp.i] - ev[cp.j];
    return d * d;
}

/// Builds the candidate at a refined location from the closest pair.
EPCandidate candidate_at(const PlaneModel& model, double x, double y, CandidateKind kind) {
    const ComplexMatrix m = model.at(x, y);
    const auto d = linalg::eig(m);
    EPCandidate c;
    c.x = x;
    c.y = y;
    c.kind = kind;
    if (d.dim() < 2) return c;
    const auto cp = linalg::closest_pair(d.eigenvalues);
    c.eigenvalue = 0.5 * (d.eigenvalues[cp.i] + d.eigenvalues[cp.j]);
    c.residual = cp.gap;
    c.overlap = linalg::coalescence_measure(d, cp.i, cp.j);
    c.order = std::max(2, cluster_order(d.eigenvalues, c.eigenvalue, d.matrix_norm));
    return c;
}

bool meets_contract(const EPCandidate& c, double norm) {
    return c.residual < kLineGapTol * (1.0 + norm) && c.overlap > kCandidateOverlap;
}

std::optional<EPCandidate> refine_point(const PlaneModel& model, double x0, double y0, double hx, double hy) {
    double x = x0;
    double y = y0;
    Complex f = pair_discriminant(model.at(x, y));
    const double dx = 1e-5 * hx;
    const double dy = 1e-5 * hy;
    for (int it = 0; it < 60; ++it) {
        const Complex fx = (pair_discriminant(model.at(x + dx, y)) - pair_discriminant(model.at(x - dx, y))) / (2 * dx);
        const Complex fy = (pair_discriminant(model.at(x, y + dy)) - pair_discriminant(model.at(x, y - dy))) / (2 * dy);
        const double a = fx.real(), b = fy.real(), c = fx.imag(), e = fy.imag();
        const double det = a * e - b * c;
        double sx, sy;
        const double jn = a * a + b * b + c * c + e * e;
        if (jn == 0.0) break;
        if (std::abs(det) > 1e-10 * jn) {
            sx = -(e * f.real() - b * f.imag()) / det;
            sy = -(-c * f.real() + a * f.imag()) / det;
        } else {
            // Rank-deficient (line of zeros): minimum-norm step on the dominant row.
            const bool real_row = a * a + b * b >= c * c + e * e;
            const double ga = real_row ? a : c, gb = real_row ? b : e;
            const double fv = real_row ? f.real() : f.imag();
            sx = -fv * ga / (ga * ga + gb * gb);
            sy = -fv * gb / (ga * ga + gb * gb);
        }
        double lambda = 1.0;
        Complex fn = pair_discriminant(model.at(x + sx, y + sy));
        for (int k = 0; k < 12 && std::abs(fn) > std::abs(f); ++k) {
            lambda *= 0.5;
            fn = pair_discriminant(model.at(x + lambda * sx, y + lambda * sy));
        }
        if (std::abs(fn) > std::abs(f)) break;
        x += lambda * sx;
        y += lambda * sy;
        f = fn;
        if (std::abs(lambda * sx) <= 1e-15 * (std::abs(x) + hx) && std::abs(lambda * sy) <= 1e-15 * (std::abs(y) + hy)) {
            break;
        }
        if (std::abs(x - x0) > 4 * hx || std::abs(y - y0) > 4 * hy) return std::nullopt;
    }
    return candidate_at(model, x, y, CandidateKind::Point);
}

}  // namespace

CellSummary summarize(const ComplexMatrix& m) {
    CellSummary s;
    const auto d = linalg::eig(m);
    s.eigenvalues = d.eigenvalues;
    s.norm = d.matrix_norm;
    s.min_gap = d.dim() > 1 ? linalg::closest_pair(d.eigenvalues).gap : 0.0;
    s.max_overlap = max_overlap(d);
    s.disc_sign = discriminant_sign(d.eigenvalues);
    s.real_poly = poly_is_real(m, d.matrix_norm);
    return s;
}

bool GridScan::real_poly() const {
    return std::all_of(cells.begin(), cells.end(), [](const CellSummary& c) { return c.real_poly; });
}

GridScan scan_grid_serial(const PlaneSpec& plane, std::string_view model) {
    const PlaneModel pm(model, plane);
    GridScan g{plane, std::string(model), 0, {}};
    g.cells.resize(plane.cells());
    for (int iy = 0; iy < plane.y.resolution; ++iy)
        for (int ix = 0; ix < plane.x.resolution; ++ix)
            g.cells[static_cast<std::size_t>(iy) * plane.x.resolution + ix] =
                summarize(pm.at(plane.x.at(ix), plane.y.at(iy)));
    g.dim = g.cells.front().eigenvalues.size();
    return g;
}

GridScan scan_grid(const PlaneSpec& plane, std::string_view model, int threads) {
    if (threads < 1) throw InvalidInput("threads must be >= 1");
    const PlaneModel pm(model, plane);
    GridScan g{plane, std::string(model), 0, {}};
    const auto total = static_cast<std::ptrdiff_t>(plane.cells());
    const int nx = plane.x.resolution;
    g.cells.resize(static_cast<std::size_t>(total));
    // Cells are written by index, so the result does not depend on scheduling.
    std::exception_ptr failure;
#pragma omp parallel for num_threads(threads) schedule(dynamic, 64)
    for (std::ptrdiff_t k = 0; k < total; ++k) {
        try {
            const int ix = static_cast<int>(k % nx);
            const int iy = static_cast<int>(k / nx);
            g.cells[static_cast<std::size_t>(k)] = summarize(pm.at(plane.x.at(ix), plane.y.at(iy)));
        } catch (...) {
#pragma omp critical
            if (!failure) failure = std::current_exception();
        }
    }
    if (failure) std::rethrow_exception(failure);
    g.dim = g.cells.front().eigenvalues.size();
    return g;
}

std::string_view to_string(CandidateKind k) { return k == CandidateKind::Point ? "point" : "on_line"; }

int cluster_order(std::span<const Complex> eigenvalues, Complex center, double norm) {
    const double tol = kClusterTol * (1.0 + norm);
    return static_cast<int>(
        std::count_if(eigenvalues.begin(), eigenvalues.end(), [&](Complex l) { return std::abs(l - center) < tol; }));
}

std::optional<EPCandidate> refine_edge(const PlaneModel& model, std::pair<double, double> a,
                                       std::pair<double, double> b) {
    auto sign_at = [&](double t) {
        const double x = a.first + t * (b.first - a.first);
        const double y = a.second + t * (b.second - a.second);
        return discriminant_sign(linalg::eigenvalues(model.at(x, y)));
    };
    const int sa = sign_at(0.0);
    if (sa == sign_at(1.0)) return std::nullopt;
    double lo = 0.0, hi = 1.0;
    for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        (sign_at(mid) == sa ? lo : hi) = mid;
    }
    auto point = [&](double t) {
        return std::pair{a.first + t * (b.first - a.first), a.second + t * (b.second - a.second)};
    };
    const auto [xl, yl] = point(lo);
    const auto [xh, yh] = point(hi);
    EPCandidate cl = candidate_at(model, xl, yl, CandidateKind::OnLine);
    EPCandidate ch = candidate_at(model, xh, yh, CandidateKind::OnLine);
    return ch.residual < cl.residual ? ch : cl;
}

std::optional<EPCandidate> detect_ep(const PlaneModel& model, const GridScan& grid, int ix, int iy) {
    if (ix < 0 || iy < 0 || ix + 1 >= grid.nx() || iy + 1 >= grid.ny()) {
        throw InvalidInput("detect_ep: square outside the grid");
    }
    const Axis& ax = grid.plane.x;
    const Axis& ay = grid.plane.y;
    const int cx[4] = {ix, ix + 1, ix + 1, ix};
    const int cy[4] = {iy, iy, iy + 1, iy + 1};
    const bool real = grid.at(ix, iy).real_poly && grid.at(ix + 1, iy).real_poly && grid.at(ix, iy + 1).real_poly &&
                      grid.at(ix + 1, iy + 1).real_poly;
    if (real) {
        for (int e = 0; e < 4; ++e) {
            const int p = e, q = (e + 1) % 4;
            if (grid.at(cx[p], cy[p]).disc_sign == grid.at(cx[q], cy[q]).disc_sign) continue;
            auto c = refine_edge(model, {ax.at(cx[p]), ay.at(cy[p])}, {ax.at(cx[q]), ay.at(cy[q])});
            if (c && meets_contract(*c, linalg::frobenius_norm(model.at(c->x, c->y)))) return c;
        }
        return std::nullopt;
    }
    int best = 0;
    for (int k = 1; k < 4; ++k)
        if (grid.at(cx[k], cy[k]).min_gap < grid.at(cx[best], cy[best]).min_gap) best = k;
    auto c = refine_point(model, ax.at(cx[best]), ay.at(cy[best]), ax.step(), ay.step());
    if (!c) return std::nullopt;
    const bool inside = c->x >= ax.at(ix) - ax.step() && c->x <= ax.at(ix + 1) + ax.step() &&
                        c->y >= ay.at(iy) - ay.step() && c->y <= ay.at(iy + 1) + ay.step();
    if (!inside || !meets_contract(*c, linalg::frobenius_norm(model.at(c->x, c->y)))) return std::nullopt;
    return c;
}

std::vector<EPCandidate> find_point_eps(const PlaneModel& model, const GridScan& grid) {
    std::vector<EPCandidate> out;
    if (grid.real_poly()) return out;
    const Axis& ax = grid.plane.x;
    const Axis& ay = grid.plane.y;
    for (int iy = 0; iy < grid.ny(); ++iy)
        for (int ix = 0; ix < grid.nx(); ++ix) {
            const double g = grid.at(ix, iy).min_gap;
            bool is_min = true;
            for (int dy = -1; dy <= 1 && is_min; ++dy)
                for (int dx = -1; dx <= 1; ++dx) {
                    if (dx == 0 && dy == 0) continue;
                    const int jx = ix + dx, jy = iy + dy;
                    if (jx < 0 || jy < 0 || jx >= grid.nx() || jy >= grid.ny()) continue;
                    const double gn = grid.at(jx, jy).min_gap;
                    // Ties go to the earlier cell so a flat minimum seeds once.
                    const bool earlier = jy < iy || (jy == iy && jx < ix);
                    if (gn < g || (gn == g && earlier)) {
                        is_min = false;
                        break;
                    }
                }
            if (!is_min) continue;
            auto c = refine_point(model, ax.at(ix), ay.at(iy), ax.step(), ay.step());
            if (!c) continue;
            if (c->x < ax.min || c->x > ax.max || c->y < ay.min || c->y > ay.max) continue;
            if (!meets_contract(*c, linalg::frobenius_norm(model.at(c->x, c->y)))) continue;
            const bool dup = std::any_of(out.begin(), out.end(), [&](const EPCandidate& o) {
                return std::abs(o.x - c->x) < 1e-6 * ax.step() && std::abs(o.y - c->y) < 1e-6 * ay.step();
            });
            if (!dup) out.push_back(*c);
        }
    std::sort(out.begin(), out.end(), [](const EPCandidate& a, const EPCandidate& b) {
        return a.x != b.x ? a.x < b.x : a.y < b.y;
    });
    return out;
}

ExceptionalMap map_exceptional(const PlaneSpec& plane, std::string_view model, int threads) {
    ExceptionalMap map;
    map.grid = threads == 1 ? scan_grid_serial(plane, model) : scan_grid(plane, model, threads);
    const PlaneModel pm(model, plane);
    if (map.grid.real_poly()) {
        LineSet ls = trace_lines(pm, map.grid);
        map.lines = std::move(ls.lines);
        map.points = std::move(ls.endpoints);
    } else {
        map.points = find_point_eps(pm, map.grid);
    }
    return map;
}

std::size_t quasi_steady_index(std::span<const Complex> eigenvalues) {
    if (eigenvalues.empty()) throw InvalidInput("quasi_steady_index: empty spectrum");
    double scale = 0.0;
    for (const auto& l : eigenvalues) scale = std::max(scale, std::abs(l));
    const double tol = 1e-12 * (1.0 + scale);
    std::size_t best = 0;
    for (std::size_t i = 1; i < eigenvalues.size(); ++i) {
        const double dr = eigenvalues[i].real() - eigenvalues[best].real();
        if (dr > tol || (std::abs(dr) <= tol && std::abs(eigenvalues[i].imag()) < std::abs(eigenvalues[best].imag()))) {
            best = i;
        }
    }
    return best;
}

std::size_t quasi_steady_index(const linalg::SpectralDecomposition& d) { return quasi_steady_index(d.eigenvalues); }

}  // namespace lep::spectra
