// Marching squares over the signed-gap field and third-order point search.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>

#include "lep/spectra.hpp"

namespace lep::spectra {

namespace {

struct EdgeGrid {
    int nx;
    int ny;
    int horizontal(int ix, int iy) const { return iy * (nx - 1) + ix; }
    int vertical(int ix, int iy) const { return (nx - 1) * ny + iy * nx + ix; }
};

bool vertex_less(const LineVertex& a, const LineVertex& b) { return a.x != b.x ? a.x < b.x : a.y < b.y; }

void orient(Polyline& line) {
    auto& v = line.vertices;
    if (v.size() < 2) return;
    if (!line.closed) {
        if (vertex_less(v.back(), v.front())) std::reverse(v.begin(), v.end());
        return;
    }
    const auto first = std::min_element(v.begin(), v.end(), vertex_less);
    std::rotate(v.begin(), first, v.end());
    if (v.size() > 2 && vertex_less(v.back(), v[1])) std::reverse(v.begin() + 1, v.end());
}

int sign_at(const PlaneModel& model, double x, double y) {
    const auto ev = linalg::eigenvalues(model.at(x, y));
    Complex prod = 1.0;
    for (std::size_t i = 0; i < ev.size(); ++i)
        for (std::size_t j = i + 1; j < ev.size(); ++j) prod *= (ev[i] - ev[j]) * (ev[i] - ev[j]);
    return prod.real() > 0.0 ? 1 : -1;
}

/// Distance from the closest pair's midpoint to the nearest other eigenvalue.
double third_distance(std::span<const Complex> ev) {
    if (ev.size() < 3) return std::numeric_limits<double>::infinity();
    const auto cp = linalg::closest_pair(ev);
    const Complex mid = 0.5 * (ev[cp.i] + ev[cp.j]);
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < ev.size(); ++k)
        if (k != cp.i && k != cp.j) best = std::min(best, std::abs(ev[k] - mid));
    return best;
}

/// p, p', p'', p''' of a real-coefficient polynomial at real lambda.
std::array<double, 4> poly_derivs(std::span<const Complex> c, double lambda) {
    std::array<double, 4> out{};
    const std::size_t n = c.size() - 1;
    for (int d = 0; d < 4; ++d) {
        double acc = 0.0;
        for (std::size_t k = n + 1; k-- > static_cast<std::size_t>(d);) {
            double coef = c[k].real();
            for (int j = 0; j < d; ++j) coef *= static_cast<double>(k - j);
            acc = acc * lambda + coef;
        }
        out[d] = acc;
    }
    return out;
}

}  // namespace

std::optional<EPCandidate> refine_third_order(const PlaneModel& model, double x, double y, Complex lambda0) {
    if (model.at(x, y).dim() < 3) return std::nullopt;
    double u[3] = {x, y, lambda0.real()};
    const double scale_x = 1.0 + std::abs(x);
    const double scale_y = 1.0 + std::abs(y);
    auto residual = [&](const double* v) {
        const auto c = linalg::char_poly(model.at(v[0], v[1]));
        const auto d = poly_derivs(c, v[2]);
        return std::array<double, 3>{d[0], d[1], d[2]};
    };
    for (int it = 0; it < 40; ++it) {
        const auto c = linalg::char_poly(model.at(u[0], u[1]));
        const auto d = poly_derivs(c, u[2]);
        const std::array<double, 3> r{d[0], d[1], d[2]};
        double jac[3][3];
        jac[0][2] = d[1];
        jac[1][2] = d[2];
        jac[2][2] = d[3];
        for (int axis = 0; axis < 2; ++axis) {
            const double h = 1e-6 * (axis == 0 ? scale_x : scale_y);
            double vp[3] = {u[0], u[1], u[2]};
            double vm[3] = {u[0], u[1], u[2]};
            vp[axis] += h;
            vm[axis] -= h;
            const auto rp = residual(vp);
            const auto rm = residual(vm);
            for (int k = 0; k < 3; ++k) jac[k][axis] = (rp[k] - rm[k]) / (2 * h);
        }
        linalg::ComplexMatrix jm(3);
        linalg::ComplexVector rhs(3);
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 3; ++j) jm(i, j) = jac[i][j];
            rhs[i] = -r[i];
        }
        linalg::ComplexVector step;
        try {
            step = linalg::solve(jm, rhs);
        } catch (const SingularMatrix&) {
            return std::nullopt;
        }
        double size = 0.0;
        for (int i = 0; i < 3; ++i) {
            u[i] += step[i].real();
            size = std::max(size, std::abs(step[i].real()) / (1.0 + std::abs(u[i])));
        }
        if (!std::isfinite(size)) return std::nullopt;
        if (size < 1e-14) break;
    }
    const auto m = model.at(u[0], u[1]);
    const auto dec = linalg::eig(m);
    EPCandidate cand;
    cand.x = u[0];
    cand.y = u[1];
    cand.kind = CandidateKind::Point;
    cand.eigenvalue = u[2];
    cand.order = cluster_order(dec.eigenvalues, cand.eigenvalue, dec.matrix_norm);
    if (cand.order < 3) return std::nullopt;
    const double tol = kClusterTol * (1.0 + dec.matrix_norm);
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < dec.dim(); ++i)
        if (std::abs(dec.eigenvalues[i] - cand.eigenvalue) < tol) members.push_back(i);
    cand.residual = 0.0;
    cand.overlap = 1.0;
    for (std::size_t a = 0; a < members.size(); ++a)
        for (std::size_t b = a + 1; b < members.size(); ++b) {
            cand.residual = std::max(cand.residual, std::abs(dec.eigenvalues[members[a]] - dec.eigenvalues[members[b]]));
            cand.overlap = std::min(cand.overlap, linalg::coalescence_measure(dec, members[a], members[b]));
        }
    return cand;
}

LineSet trace_lines(const PlaneModel& model, const GridScan& grid) {
    LineSet out;
    if (!grid.real_poly()) return out;
    const int nx = grid.nx();
    const int ny = grid.ny();
    const Axis& ax = grid.plane.x;
    const Axis& ay = grid.plane.y;
    const EdgeGrid eg{nx, ny};

    std::map<int, std::vector<int>> adjacency;
    auto link = [&](int a, int b) {
        adjacency[a].push_back(b);
        adjacency[b].push_back(a);
    };
    for (int iy = 0; iy + 1 < ny; ++iy)
        for (int ix = 0; ix + 1 < nx; ++ix) {
            const bool s0 = grid.at(ix, iy).disc_sign > 0;
            const bool s1 = grid.at(ix + 1, iy).disc_sign > 0;
            const bool s2 = grid.at(ix + 1, iy + 1).disc_sign > 0;
            const bool s3 = grid.at(ix, iy + 1).disc_sign > 0;
            const int e[4] = {eg.horizontal(ix, iy), eg.vertical(ix + 1, iy), eg.horizontal(ix, iy + 1),
                              eg.vertical(ix, iy)};
            const bool cut[4] = {s0 != s1, s1 != s2, s3 != s2, s0 != s3};
            const int ncut = cut[0] + cut[1] + cut[2] + cut[3];
            if (ncut == 2) {
                int a = -1;
                for (int k = 0; k < 4; ++k)
                    if (cut[k]) {
                        if (a < 0) {
                            a = e[k];
                        } else {
                            link(a, e[k]);
                        }
                    }
            } else if (ncut == 4) {
                const bool center = sign_at(model, 0.5 * (ax.at(ix) + ax.at(ix + 1)), 0.5 * (ay.at(iy) + ay.at(iy + 1))) > 0;
                if (center == s0) {
                    // Corners 0 and 2 joined through the center: cut off corners 1 and 3.
                    link(e[0], e[1]);
                    link(e[2], e[3]);
                } else {
                    link(e[3], e[0]);
                    link(e[1], e[2]);
                }
            }
        }

    std::map<int, LineVertex> vertex_cache;
    auto vertex_of = [&](int id) -> const LineVertex& {
        auto it = vertex_cache.find(id);
        if (it != vertex_cache.end()) return it->second;
        std::pair<double, double> a, b;
        const int nh = (nx - 1) * ny;
        if (id < nh) {
            const int ix = id % (nx - 1), iy = id / (nx - 1);
            a = {ax.at(ix), ay.at(iy)};
            b = {ax.at(ix + 1), ay.at(iy)};
        } else {
            const int k = id - nh;
            const int ix = k % nx, iy = k / nx;
            a = {ax.at(ix), ay.at(iy)};
            b = {ax.at(ix), ay.at(iy + 1)};
        }
        const auto c = refine_edge(model, a, b);
        LineVertex v;
        if (c) {
            v = {c->x, c->y, c->residual, c->overlap};
        } else {
            // The grid saw a sign change the refinement could not reproduce; keep the midpoint.
            v = {0.5 * (a.first + b.first), 0.5 * (a.second + b.second), std::numeric_limits<double>::infinity(), 0.0};
        }
        return vertex_cache.emplace(id, v).first->second;
    };

    // Vertices failing the coalescence confirmation (e.g. a semisimple crossing
    // on the plane boundary) are dropped and split their line.
    auto confirmed = [&](const LineVertex& v) {
        return v.gap < kLineGapTol * (1.0 + linalg::frobenius_norm(model.at(v.x, v.y))) && v.overlap > kCandidateOverlap;
    };
    auto emit_runs = [&](const std::vector<int>& chain, bool closed) {
        std::vector<bool> ok(chain.size());
        for (std::size_t k = 0; k < chain.size(); ++k) ok[k] = confirmed(vertex_of(chain[k]));
        if (closed && std::all_of(ok.begin(), ok.end(), [](bool b) { return b; })) {
            Polyline line{{}, true};
            for (int id : chain) line.vertices.push_back(vertex_of(id));
            orient(line);
            out.lines.push_back(std::move(line));
            return;
        }
        std::size_t start = 0;
        if (closed) start = static_cast<std::size_t>(std::find(ok.begin(), ok.end(), false) - ok.begin());
        Polyline run;
        auto flush = [&] {
            if (run.vertices.size() >= 2) {
                orient(run);
                out.lines.push_back(std::move(run));
            }
            run = Polyline{};
        };
        for (std::size_t step = 0; step < chain.size(); ++step) {
            const std::size_t k = (start + step) % chain.size();
            if (ok[k]) {
                run.vertices.push_back(vertex_of(chain[k]));
            } else {
                flush();
            }
        }
        flush();
    };

    std::map<int, bool> visited;
    auto walk = [&](int start) {
        std::vector<int> chain;
        bool closed = false;
        int prev = -1, cur = start;
        while (true) {
            visited[cur] = true;
            chain.push_back(cur);
            int next = -1;
            for (int nb : adjacency[cur])
                if (nb != prev && !visited[nb]) {
                    next = nb;
                    break;
                }
            if (next < 0) {
                const auto& nbs = adjacency[cur];
                closed = chain.size() > 2 && std::find(nbs.begin(), nbs.end(), start) != nbs.end();
                break;
            }
            prev = cur;
            cur = next;
        }
        emit_runs(chain, closed);
    };
    for (const auto& [id, nbs] : adjacency)
        if (nbs.size() == 1 && !visited[id]) walk(id);
    for (const auto& [id, nbs] : adjacency)
        if (!visited[id]) walk(id);
    std::sort(out.lines.begin(), out.lines.end(), [](const Polyline& a, const Polyline& b) {
        return vertex_less(a.vertices.front(), b.vertices.front());
    });

    // Third-order points: Newton from vertices where the third eigenvalue comes closest.
    const double range = std::max(ax.max - ax.min, ay.max - ay.min);
    for (const auto& line : out.lines) {
        const auto& v = line.vertices;
        std::vector<double> d3(v.size());
        std::vector<Complex> mids(v.size());
        for (std::size_t k = 0; k < v.size(); ++k) {
            const auto ev = linalg::eigenvalues(model.at(v[k].x, v[k].y));
            d3[k] = third_distance(ev);
            const auto cp = linalg::closest_pair(ev);
            mids[k] = 0.5 * (ev[cp.i] + ev[cp.j]);
        }
        for (std::size_t k = 0; k < v.size(); ++k) {
            const std::size_t n = v.size();
            const bool has_prev = k > 0 || line.closed;
            const bool has_next = k + 1 < n || line.closed;
            const double prev = has_prev ? d3[(k + n - 1) % n] : std::numeric_limits<double>::infinity();
            const double next = has_next ? d3[(k + 1) % n] : std::numeric_limits<double>::infinity();
            if (!(d3[k] <= prev && d3[k] < next) || !std::isfinite(d3[k])) continue;
            auto c = refine_third_order(model, v[k].x, v[k].y, mids[k]);
            if (!c) continue;
            // A cusp can sit inside a lobe thinner than one cell, so allow a few cells of travel.
            if (std::hypot((c->x - v[k].x) / ax.step(), (c->y - v[k].y) / ay.step()) > 6.0) continue;
            if (c->x < ax.min || c->x > ax.max || c->y < ay.min || c->y > ay.max) continue;
            const bool dup = std::any_of(out.endpoints.begin(), out.endpoints.end(), [&](const EPCandidate& o) {
                return std::hypot(o.x - c->x, o.y - c->y) < 1e-9 * range;
            });
            if (!dup) out.endpoints.push_back(*c);
        }
    }
    std::sort(out.endpoints.begin(), out.endpoints.end(), [](const EPCandidate& a, const EPCandidate& b) {
        return a.x != b.x ? a.x < b.x : a.y < b.y;
    });
    return out;
}

}  // namespace lep::spectra
