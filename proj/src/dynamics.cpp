#include "lep/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numeric>

#include "lep/spectra.hpp"

namespace lep::dynamics {

namespace {

constexpr double kDefaultDt = 0.01;
constexpr double kTieTol = 1e-12;
constexpr double kGaugeOverlap = 1.0 - 1e-2;
constexpr double kProjectionFloor = 1e-14;

struct BoundPath {
    const models::ModelInfo* info = nullptr;
    std::vector<double> values;
    std::size_t ix = 0;
    std::size_t iy = 0;
    models::EncirclePath path;

    ComplexMatrix at_point(double x, double y) const {
        std::vector<double> v = values;
        v[ix] = x;
        v[iy] = y;
        return models::build_model_values(*info, v);
    }
};

BoundPath bind(const PathModel& pm) {
    pm.path.validate();
    BoundPath b;
    b.info = &models::model_info(pm.model);
    b.path = pm.path;
    const auto [xname, yname] = models::plane_axes(pm.path.plane);
    const std::string xc = models::canonical_param(*b.info, xname);
    const std::string yc = models::canonical_param(*b.info, yname);
    models::ParamMap full;
    for (const auto& [name, value] : pm.fixed) {
        const std::string c = models::canonical_param(*b.info, name);
        if (c == xc || c == yc) {
            throw InvalidInput("parameter '" + name + "' is driven by the path and cannot be fixed");
        }
        full[name] = value;
    }
    full[xc] = pm.path.cx;
    full[yc] = pm.path.cy;
    b.values = models::resolve_params(*b.info, full);
    const auto& p = b.info->params;
    b.ix = static_cast<std::size_t>(std::find(p.begin(), p.end(), xc) - p.begin());
    b.iy = static_cast<std::size_t>(std::find(p.begin(), p.end(), yc) - p.begin());
    return b;
}

double max_abs_diff(const ComplexMatrix& a, const ComplexMatrix& b) {
    double m = 0.0;
    for (std::size_t k = 0; k < a.entries().size(); ++k) m = std::max(m, std::abs(a.entries()[k] - b.entries()[k]));
    return m;
}

// Fixed-step RK4 on x' = factor * G(t) x with per-step rescaling.
struct RawRun {
    std::vector<double> times;
    std::vector<ComplexVector> states;
    std::vector<double> log_scale;
};

void matvec(const ComplexMatrix& g, const std::vector<Complex>& x, Complex factor, std::vector<Complex>& out) {
    const std::size_t n = x.size();
    for (std::size_t r = 0; r < n; ++r) {
        Complex acc = 0.0;
        for (std::size_t c = 0; c < n; ++c) acc += g(r, c) * x[c];
        out[r] = factor * acc;
    }
}

RawRun rk4(const Generator& g, Complex factor, const ComplexVector& x0, double T, int steps, int stride) {
    const std::size_t n = x0.dim();
    std::vector<Complex> x(x0.begin(), x0.end());
    std::vector<Complex> k1(n), k2(n), k3(n), k4(n), tmp(n);
    RawRun run;
    double log_scale = 0.0;
    {
        double s = 0.0;
        for (const auto& v : x) s += std::norm(v);
        s = std::sqrt(s);
        for (auto& v : x) v /= s;
        log_scale = std::log(s);
    }
    auto record = [&](double t) {
        run.times.push_back(t);
        run.states.emplace_back(std::vector<Complex>(x));
        run.log_scale.push_back(log_scale);
    };
    record(0.0);
    const double h = T / steps;
    ComplexMatrix g_now = g(0.0);
    for (int i = 0; i < steps; ++i) {
        const double t0 = T * i / steps;
        const double t1 = T * (i + 1) / steps;
        const ComplexMatrix g_mid = g(0.5 * (t0 + t1));
        ComplexMatrix g_next = g(t1);
        if (g_now.dim() != n || g_mid.dim() != n) throw DimensionMismatch("generator dimension does not match the state");
        matvec(g_now, x, factor, k1);
        for (std::size_t j = 0; j < n; ++j) tmp[j] = x[j] + 0.5 * h * k1[j];
        matvec(g_mid, tmp, factor, k2);
        for (std::size_t j = 0; j < n; ++j) tmp[j] = x[j] + 0.5 * h * k2[j];
        matvec(g_mid, tmp, factor, k3);
        for (std::size_t j = 0; j < n; ++j) tmp[j] = x[j] + h * k3[j];
        matvec(g_next, tmp, factor, k4);
        double s = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            x[j] += (h / 6.0) * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
            s += std::norm(x[j]);
        }
        s = std::sqrt(s);
        if (!std::isfinite(s)) throw NonConvergence("integration diverged at t = " + std::to_string(t1));
        if (s == 0.0) throw InvalidInput("state vanished at t = " + std::to_string(t1));
        for (auto& v : x) v /= s;
        log_scale += std::log(s);
        g_now = std::move(g_next);
        if ((i + 1) % stride == 0 || i + 1 == steps) record(t1);
    }
    return run;
}

void check_options(const IntegrateOptions& o) {
    if (!std::isfinite(o.T) || o.T <= 0.0) throw InvalidInput("T must be positive and finite");
    if (o.steps < 100) throw InvalidInput("steps must be >= 100");
    if (o.records < 1) throw InvalidInput("records must be >= 1");
}

int stride_for(const IntegrateOptions& o) { return std::max(1, o.steps / o.records); }

ComplexMatrix normalized_density(const ComplexVector& v) {
    ComplexMatrix rho = linalg::unvec_row(v);
    const Complex tr = linalg::trace(rho);
    if (std::abs(tr) == 0.0) throw ProjectionUndefined("density matrix has zero trace");
    rho *= 1.0 / tr;
    return rho;
}

// Minimal total |a_i - b_perm(i)| assignment: best permutation and runner-up cost.
struct Matching {
    std::vector<int> perm;
    double cost = 0.0;
    std::vector<int> second;
    double second_cost = std::numeric_limits<double>::infinity();
};

Matching match(std::span<const Complex> from, std::span<const Complex> to) {
    const std::size_t n = from.size();
    Matching m;
    std::vector<int> p(n);
    std::iota(p.begin(), p.end(), 0);
    if (n <= 6) {
        m.cost = std::numeric_limits<double>::infinity();
        do {
            double c = 0.0;
            for (std::size_t i = 0; i < n; ++i) c += std::abs(from[i] - to[p[i]]);
            if (c < m.cost) {
                m.second = m.perm;
                m.second_cost = m.cost;
                m.perm = p;
                m.cost = c;
            } else if (c < m.second_cost) {
                m.second = p;
                m.second_cost = c;
            }
        } while (std::next_permutation(p.begin(), p.end()));
        return m;
    }
    std::vector<bool> used(n, false);
    for (std::size_t i = 0; i < n; ++i) {
        int best = -1;
        for (std::size_t j = 0; j < n; ++j)
            if (!used[j] && (best < 0 || std::abs(from[i] - to[j]) < std::abs(from[i] - to[best]))) best = static_cast<int>(j);
        used[best] = true;
        p[i] = best;
        m.cost += std::abs(from[i] - to[best]);
    }
    m.perm = p;
    return m;
}

double min_separation(std::span<const Complex> v) {
    return v.size() < 2 ? std::numeric_limits<double>::infinity() : linalg::closest_pair(v).gap;
}

std::size_t other_branch_index(const linalg::SpectralDecomposition& d, std::size_t initial) {
    const double tol = 1e-9 * (1.0 + d.matrix_norm);
    std::size_t best = d.dim();
    for (std::size_t i = 0; i < d.dim(); ++i) {
        if (i == initial || std::abs(d.eigenvalues[i].imag()) > tol) continue;
        if (best == d.dim() || d.eigenvalues[i].real() > d.eigenvalues[best].real()) best = i;
    }
    return best;
}

}  // namespace

// ---------------------------------------------------------------------------

ComplexMatrix PathModel::at(double t) const {
    const BoundPath b = bind(*this);
    const auto [x, y] = path.point(t);
    return b.at_point(x, y);
}

bool PathModel::liouvillian() const { return models::model_info(model).kind == models::ModelKind::Liouvillian; }

Generator PathModel::generator() const {
    auto b = std::make_shared<const BoundPath>(bind(*this));
    // Every catalog operator is affine in its parameters; when that holds here the
    // generator is assembled from three precomputed matrices.
    const double cx = path.cx, cy = path.cy;
    const ComplexMatrix g0 = b->at_point(cx, cy);
    const ComplexMatrix gx = b->at_point(cx + 1.0, cy) - g0;
    const ComplexMatrix gy = b->at_point(cx, cy + 1.0) - g0;
    bool affine = true;
    for (const auto& [dx, dy] : {std::pair{0.7, -0.3}, std::pair{-1.3, 2.1}}) {
        const ComplexMatrix exact = b->at_point(cx + dx, cy + dy);
        const ComplexMatrix approx = g0 + Complex(dx) * gx + Complex(dy) * gy;
        if (max_abs_diff(exact, approx) > 1e-12 * (1.0 + linalg::frobenius_norm(exact))) affine = false;
    }
    if (affine) {
        return [b, g0, gx, gy](double t) {
            const auto [x, y] = b->path.point(t);
            const std::size_t n = g0.dim();
            ComplexMatrix m(n);
            const double dx = x - b->path.cx, dy = y - b->path.cy;
            for (std::size_t r = 0; r < n; ++r)
                for (std::size_t c = 0; c < n; ++c) m(r, c) = g0(r, c) + dx * gx(r, c) + dy * gy(r, c);
            return m;
        };
    }
    return [b](double t) {
        const auto [x, y] = b->path.point(t);
        return b->at_point(x, y);
    };
}

PathModel PathModel::reversed() const {
    PathModel r = *this;
    r.path.direction = path.direction == models::Direction::CCW ? models::Direction::CW : models::Direction::CCW;
    return r;
}

int default_steps(double T) {
    if (!std::isfinite(T) || T <= 0.0) throw InvalidInput("T must be positive and finite");
    return std::max(100, static_cast<int>(std::ceil(T / kDefaultDt - 1e-9)));
}

// ---------------------------------------------------------------------------

TrajectoryRecord integrate_schrodinger(const Generator& h, const ComplexVector& psi0, const IntegrateOptions& opts) {
    check_options(opts);
    if (psi0.dim() == 0 || !linalg::all_finite(psi0)) throw InvalidInput("psi0 must be finite and non-empty");
    if (std::abs(linalg::norm(psi0) - 1.0) > 1e-10) throw InvalidInput("psi0 must be normalized");
    const Complex factor(0.0, -1.0);
    const int stride = stride_for(opts);
    RawRun run = rk4(h, factor, psi0, opts.T, opts.steps, stride);

    if (opts.check_steps) {
        const RawRun fine = rk4(h, factor, psi0, opts.T, 2 * opts.steps, 2 * stride);
        for (std::size_t k = 0; k < run.times.size(); ++k) {
            const auto d = linalg::eig(h(run.times[k]));
            const auto a = branch_weights(d, run.states[k]);
            const auto b = branch_weights(d, fine.states[k]);
            for (std::size_t i = 0; i < a.size(); ++i)
                if (std::abs(a[i] - b[i]) >= kStepDoublingTol) {
                    throw StepTooCoarse("branch weight changes by " + std::to_string(std::abs(a[i] - b[i])) +
                                        " under step halving at t = " + std::to_string(run.times[k]));
                }
        }
    }

    TrajectoryRecord tr;
    tr.liouvillian = false;
    tr.times = std::move(run.times);
    tr.states = std::move(run.states);
    tr.log_norm = std::move(run.log_scale);
    for (double l : tr.log_norm) tr.norm.push_back(std::exp(l));
    return tr;
}

TrajectoryRecord integrate_liouvillian(const Generator& l, const ComplexMatrix& rho0, const IntegrateOptions& opts) {
    check_options(opts);
    const std::size_t n = rho0.dim();
    if (n == 0 || !linalg::all_finite(rho0)) throw InvalidInput("rho0 must be finite and non-empty");
    const ComplexMatrix rho0_dag = linalg::adjoint(rho0);
    if (max_abs_diff(rho0, rho0_dag) > 1e-10) throw InvalidInput("rho0 must be Hermitian");
    if (std::abs(linalg::trace(rho0) - 1.0) > 1e-10) throw InvalidInput("rho0 must have unit trace");
    const auto ev = linalg::eigvalsh(0.5 * (rho0 + rho0_dag));
    if (ev.front() < -1e-10) throw InvalidInput("rho0 must be positive semidefinite");

    const ComplexVector x0 = linalg::vec_row(rho0);
    const int stride = stride_for(opts);
    RawRun run = rk4(l, Complex(1.0), x0, opts.T, opts.steps, stride);

    if (opts.check_steps) {
        const RawRun fine = rk4(l, Complex(1.0), x0, opts.T, 2 * opts.steps, 2 * stride);
        for (std::size_t k = 0; k < run.times.size(); ++k) {
            const double diff = max_abs_diff(normalized_density(run.states[k]), normalized_density(fine.states[k]));
            if (diff >= kStepDoublingTol) {
                throw StepTooCoarse("normalized density matrix changes by " + std::to_string(diff) +
                                    " under step halving at t = " + std::to_string(run.times[k]));
            }
        }
    }

    TrajectoryRecord tr;
    tr.liouvillian = true;
    tr.times = std::move(run.times);
    tr.states = std::move(run.states);
    for (std::size_t k = 0; k < tr.times.size(); ++k) {
        const double t = linalg::trace(linalg::unvec_row(tr.states[k])).real();
        const double ln = t > 0.0 ? run.log_scale[k] + std::log(t) : -std::numeric_limits<double>::infinity();
        tr.log_norm.push_back(ln);
        tr.norm.push_back(t > 0.0 ? std::exp(ln) : 0.0);
    }
    return tr;
}

// ---------------------------------------------------------------------------

bool SheetTracking::is_identity() const {
    for (std::size_t b = 0; b < permutation.size(); ++b)
        if (permutation[b] != static_cast<int>(b)) return false;
    return true;
}

SheetTracking track_sheets(const Generator& g, double T, int samples) {
    if (!std::isfinite(T) || T <= 0.0) throw InvalidInput("T must be positive and finite");
    if (samples < 100) throw InvalidInput("track_sheets needs at least 100 samples");
    std::vector<double> times(static_cast<std::size_t>(samples) + 1);
    for (int k = 0; k <= samples; ++k) times[k] = T * k / samples;
    return track_sheets(g, std::span<const double>(times));
}

SheetTracking track_sheets(const Generator& g, std::span<const double> times) {
    if (times.size() < 2) throw InvalidInput("track_sheets needs at least two samples");
    for (std::size_t k = 1; k < times.size(); ++k)
        if (!(times[k] > times[k - 1])) throw InvalidInput("sample times must be strictly increasing");

    SheetTracking out;
    out.times.assign(times.begin(), times.end());
    linalg::SpectralDecomposition prev = linalg::eig(g(times[0]));
    const std::size_t n = prev.dim();
    std::vector<int> index_of(n);  // branch -> canonical index at the previous sample
    std::iota(index_of.begin(), index_of.end(), 0);
    std::vector<Complex> values(prev.eigenvalues);
    std::vector<Complex> before = values;

    auto push = [&](const std::vector<int>& idx, const std::vector<Complex>& vals, bool defective) {
        std::vector<int> labels(n);
        for (std::size_t b = 0; b < n; ++b) labels[idx[b]] = static_cast<int>(b);
        out.labels.push_back(std::move(labels));
        out.branch_values.push_back(vals);
        out.defective.push_back(defective);
    };
    push(index_of, values, prev.any_defective());

    for (std::size_t k = 1; k < times.size(); ++k) {
        linalg::SpectralDecomposition cur = linalg::eig(g(times[k]));
        if (cur.dim() != n) throw DimensionMismatch("generator dimension changed along the path");
        std::vector<Complex> pred(n);
        for (std::size_t b = 0; b < n; ++b) pred[b] = k >= 2 ? 2.0 * values[b] - before[b] : values[b];

        const Matching m = match(pred, cur.eigenvalues);
        const double scale = 1.0 + cur.matrix_norm;
        std::vector<int> chosen = m.perm;
        bool defective = prev.any_defective() || cur.any_defective();
        if (!m.second.empty() && m.second_cost - m.cost <= kTieTol * scale) {
            auto overlap = [&](const std::vector<int>& p) {
                double s = 0.0;
                for (std::size_t b = 0; b < n; ++b) s += std::abs(linalg::dot(prev.right[index_of[b]], cur.right[p[b]]));
                return s;
            };
            const double o1 = overlap(m.perm), o2 = overlap(m.second);
            if (std::abs(o1 - o2) <= kTieTol) defective = true;
            else if (o2 > o1) chosen = m.second;
        }

        const double sep = min_separation(values);
        const bool coalesced = sep < 1e-6 * scale;
        if (!defective && !coalesced) {
            for (std::size_t b = 0; b < n; ++b) {
                const double move = std::abs(cur.eigenvalues[chosen[b]] - pred[b]);
                if (move > 0.5 * sep) {
                    throw SampleTooCoarse("eigenvalue moved by " + std::to_string(move) + " against a separation of " +
                                          std::to_string(sep) + " at t = " + std::to_string(times[k]));
                }
            }
        }

        before = values;
        for (std::size_t b = 0; b < n; ++b) {
            index_of[b] = chosen[b];
            values[b] = cur.eigenvalues[chosen[b]];
        }
        push(index_of, values, defective);
        prev = std::move(cur);
    }
    out.permutation = index_of;
    return out;
}

// ---------------------------------------------------------------------------

std::vector<double> branch_weights(const linalg::SpectralDecomposition& d, const ComplexVector& state) {
    std::vector<double> w(d.dim());
    double total = 0.0;
    for (std::size_t i = 0; i < d.dim(); ++i) {
        w[i] = std::norm(linalg::dot(d.left[i], state));
        total += w[i];
    }
    const double ns = linalg::norm(state);
    if (!(total > kProjectionFloor * ns * ns)) throw ProjectionUndefined("state has no overlap with any left eigenvector");
    for (auto& x : w) x /= total;
    return w;
}

void project_trajectory(TrajectoryRecord& traj, const Generator& g) {
    if (traj.times.empty()) throw InvalidInput("empty trajectory");
    const SheetTracking tracking = track_sheets(g, traj.times);
    const std::size_t samples = traj.times.size();
    traj.projected_energy.assign(samples, Complex());
    traj.sheet_index.assign(samples, 0);
    traj.weights.assign(samples, {});
    traj.coefficients.assign(samples, {});
    for (std::size_t k = 0; k < samples; ++k) {
        const auto d = linalg::eig(g(traj.times[k]));
        const auto& x = traj.states[k];
        if (d.dim() != x.dim()) throw DimensionMismatch("trajectory state does not match the generator");
        const std::size_t n = d.dim();
        std::vector<Complex> overlap(n);
        double total = 0.0;
        Complex ebar = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            overlap[i] = linalg::dot(d.left[i], x);
            total += std::norm(overlap[i]);
            ebar += std::norm(overlap[i]) * d.eigenvalues[i];
        }
        const double nx = linalg::norm(x);
        if (!(total > kProjectionFloor * nx * nx)) {
            throw ProjectionUndefined("all left-eigenvector overlaps vanish at t = " + std::to_string(traj.times[k]));
        }
        traj.projected_energy[k] = ebar / total;
        std::vector<double> w(n);
        std::vector<Complex> c(n);
        for (std::size_t b = 0; b < n; ++b) {
            std::size_t i = 0;
            while (tracking.labels[k][i] != static_cast<int>(b)) ++i;
            w[b] = std::norm(overlap[i]) / total;
            const Complex lr = linalg::dot(d.left[i], d.right[i]);
            c[b] = std::abs(lr) > kProjectionFloor ? overlap[i] / lr : overlap[i];
        }
        std::size_t dominant = 0;
        for (std::size_t i = 1; i < n; ++i)
            if (std::norm(overlap[i]) > std::norm(overlap[dominant])) dominant = i;
        traj.sheet_index[k] = static_cast<int>(dominant);
        traj.weights[k] = std::move(w);
        traj.coefficients[k] = std::move(c);
    }
}

ComplexMatrix nonadiabatic_couplings(const Generator& g, double t, double dt) {
    if (!std::isfinite(dt) || dt <= 0.0) throw InvalidInput("dt must be positive");
    const auto d0 = linalg::eig(g(t));
    const auto dp = linalg::eig(g(t + dt));
    const auto dm = linalg::eig(g(t - dt));
    const std::size_t n = d0.dim();
    if (dp.dim() != n || dm.dim() != n) throw DimensionMismatch("generator dimension changed");
    const auto mp = match(d0.eigenvalues, dp.eigenvalues).perm;
    const auto mm = match(d0.eigenvalues, dm.eigenvalues).perm;

    // Unit right vectors in the eigensolver's gauge (first component real); the
    // neighbours must continue them smoothly.
    auto neighbour = [&](const linalg::SpectralDecomposition& d, int j, std::size_t m) {
        const ComplexVector& v = d.right[j];
        const Complex o = linalg::dot(d0.right[m], v);
        if (o.real() < kGaugeOverlap) {
            throw GaugeDiscontinuity("eigenvector " + std::to_string(m) + " jumps between t and t +- dt (overlap " +
                                     std::to_string(o.real()) + ")");
        }
        return v;
    };
    ComplexMatrix k(n);
    std::vector<ComplexVector> chi(n);
    for (std::size_t i = 0; i < n; ++i) {
        const Complex lr = linalg::dot(d0.left[i], d0.right[i]);
        if (std::abs(lr) < kProjectionFloor) throw ProjectionUndefined("left and right eigenvectors are orthogonal (EP)");
        chi[i] = (1.0 / std::conj(lr)) * d0.left[i];
    }
    for (std::size_t m = 0; m < n; ++m) {
        const ComplexVector vp = neighbour(dp, mp[m], m);
        const ComplexVector vm = neighbour(dm, mm[m], m);
        const ComplexVector deriv = (1.0 / (2.0 * dt)) * (vp - vm);
        for (std::size_t i = 0; i < n; ++i) k(i, m) = linalg::dot(chi[i], deriv);
    }
    return k;
}

// ---------------------------------------------------------------------------

ComplexMatrix eigen_density(const ComplexVector& v) {
    ComplexMatrix m = linalg::unvec_row(v);
    const Complex tr = linalg::trace(m);
    if (std::abs(tr) < kProjectionFloor * (1.0 + linalg::norm(v))) {
        throw ProjectionUndefined("traceless Liouvillian eigenvector has no density-matrix normalization");
    }
    m *= 1.0 / tr;
    ComplexMatrix h = 0.5 * (m + linalg::adjoint(m));
    h *= 1.0 / linalg::trace(h).real();
    return h;
}

double uhlmann_fidelity(const ComplexMatrix& rho, const ComplexMatrix& sigma) {
    if (rho.dim() != 2 || sigma.dim() != 2) throw DimensionMismatch("uhlmann_fidelity is implemented for 2x2 matrices");
    const double overlap = linalg::trace(rho * sigma).real();
    const double dr = std::max(0.0, linalg::determinant(rho).real());
    const double ds = std::max(0.0, linalg::determinant(sigma).real());
    return std::clamp(overlap + 2.0 * std::sqrt(dr * ds), 0.0, 1.0);
}

std::string_view to_string(Verdict v) {
    switch (v) {
        case Verdict::Chiral: return "chiral";
        case Verdict::NonChiral: return "non_chiral";
        case Verdict::Ambiguous: return "ambiguous";
    }
    return "";
}

Verdict verdict_from(double ccw_initial, double cw_initial) {
    const bool a_keep = ccw_initial > 0.9, b_keep = cw_initial > 0.9;
    const bool a_lose = ccw_initial < 0.5, b_lose = cw_initial < 0.5;
    if ((a_keep && b_lose) || (a_lose && b_keep)) return Verdict::Chiral;
    if ((a_keep && b_keep) || (a_lose && b_lose)) return Verdict::NonChiral;
    return Verdict::Ambiguous;
}

AdiabaticityEstimate adiabaticity(const Generator& g, double T, int samples) {
    if (samples < 1) throw InvalidInput("adiabaticity needs at least one sample");
    AdiabaticityEstimate a;
    a.min_gap = std::numeric_limits<double>::infinity();
    for (int k = 0; k < samples; ++k) a.min_gap = std::min(a.min_gap, min_separation(linalg::eigenvalues(g(T * k / samples))));
    if (!std::isfinite(a.min_gap)) a.min_gap = 0.0;
    a.dimensionless_ratio = T * a.min_gap;
    return a;
}

int gain_branch(const PathModel& pm) {
    PathModel ccw = pm;
    ccw.path.direction = models::Direction::CCW;
    const Generator g = ccw.generator();
    const auto e0 = linalg::eigenvalues(g(0.0));
    const auto e1 = linalg::eigenvalues(g(1e-4 * ccw.path.period));
    const auto p = match(e0, e1).perm;
    int best = 0;
    for (std::size_t i = 1; i < e0.size(); ++i)
        if (e1[p[i]].imag() > e1[p[best]].imag() + kTieTol) best = static_cast<int>(i);
    return best;
}

int initial_branch_index(const PathModel& pm, const ChiralityOptions& opts) {
    pm.path.validate();
    const auto d0 = linalg::eig(pm.generator()(0.0));
    switch (opts.initial) {
        case InitialBranch::Gain:
            return pm.liouvillian() ? static_cast<int>(spectra::quasi_steady_index(d0)) : gain_branch(pm);
        case InitialBranch::QuasiSteady: return static_cast<int>(spectra::quasi_steady_index(d0));
        case InitialBranch::Index:
            if (opts.initial_index < 0 || static_cast<std::size_t>(opts.initial_index) >= d0.dim()) {
                throw InvalidInput("initial branch index out of range");
            }
            return opts.initial_index;
    }
    return 0;
}

DirectionResult run_direction(const PathModel& pm, models::Direction dir, int idx, const ChiralityOptions& opts) {
    pm.path.validate();
    const double T = pm.path.period;
    const int steps = opts.steps > 0 ? opts.steps : default_steps(T);
    const IntegrateOptions io{T, steps, opts.records, opts.check_steps};

    PathModel p = pm;
    p.path.direction = dir;
    const Generator g = p.generator();
    const auto d0 = linalg::eig(g(0.0));
    if (idx < 0 || static_cast<std::size_t>(idx) >= d0.dim()) throw InvalidInput("initial branch index out of range");
    const auto dT = linalg::eig(g(T));
    DirectionResult r;
    r.direction = dir;
    if (!pm.liouvillian()) {
        r.trajectory = integrate_schrodinger(g, d0.right[idx], io);
        const auto w = branch_weights(dT, r.trajectory.states.back());
        r.fidelity_initial = w[idx];
        r.fidelity_other = 0.0;
        for (std::size_t i = 0; i < w.size(); ++i)
            if (static_cast<int>(i) != idx) r.fidelity_other = std::max(r.fidelity_other, w[i]);
        r.final_sheet = static_cast<int>(std::max_element(w.begin(), w.end()) - w.begin());
    } else {
        r.trajectory = integrate_liouvillian(g, eigen_density(d0.right[idx]), io);
        const ComplexMatrix rho = normalized_density(r.trajectory.states.back());
        r.fidelity_initial = uhlmann_fidelity(rho, eigen_density(dT.right[idx]));
        const std::size_t other = other_branch_index(dT, static_cast<std::size_t>(idx));
        r.fidelity_other = other < dT.dim() ? uhlmann_fidelity(rho, eigen_density(dT.right[other])) : 0.0;
        r.final_sheet = r.fidelity_initial >= r.fidelity_other || other >= dT.dim() ? idx : static_cast<int>(other);
    }
    project_trajectory(r.trajectory, g);
    return r;
}

ChiralityReport classify_chirality(const PathModel& pm, const ChiralityOptions& opts) {
    const int idx = initial_branch_index(pm, opts);
    const Generator g_start = pm.generator();
    ChiralityReport rep;
    rep.initial_index = idx;
    rep.initial_eigenvalue = linalg::eig(g_start(0.0)).eigenvalues[idx];
    rep.ccw = run_direction(pm, models::Direction::CCW, idx, opts);
    rep.cw = run_direction(pm, models::Direction::CW, idx, opts);
    rep.verdict = verdict_from(rep.ccw.fidelity_initial, rep.cw.fidelity_initial);
    rep.adiabaticity = adiabaticity(g_start, pm.path.period);
    return rep;
}

}  // namespace lep::dynamics
