#include "lep/output.hpp"

#include <charconv>
#include <cmath>
#include <json.hpp>

#include "lep/error.hpp"

namespace lep::cli {

using nlohmann::json;

namespace {

struct Csv {
    std::string s;

    Csv& cell(double v) {
        sep();
        s += csv_number(v);
        return *this;
    }
    Csv& cell(int v) {
        sep();
        s += std::to_string(v);
        return *this;
    }
    Csv& cell(std::size_t v) {
        sep();
        s += std::to_string(v);
        return *this;
    }
    Csv& text(std::string_view v) {
        sep();
        s += v;
        return *this;
    }
    Csv& empty() {
        sep();
        return *this;
    }
    void end() {
        s += '\n';
        fresh = true;
    }

private:
    bool fresh = true;
    void sep() {
        if (!fresh) s += ',';
        fresh = false;
    }
};

json complex_json(linalg::Complex z) { return json::array({z.real(), z.imag()}); }

// nlohmann writes non-finite doubles as null; keep them visible as strings.
json number(double v) {
    if (std::isfinite(v)) return v;
    return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
}

json path_json(const models::EncirclePath& p) {
    return {{"plane", models::to_string(p.plane)}, {"center_x", p.cx},  {"center_y", p.cy},
            {"radius", p.radius},                 {"period", p.period}, {"phase0", p.phase0}};
}

json candidate_json(const spectra::EPCandidate& c) {
    return {{"x", c.x},
            {"y", c.y},
            {"order", c.order},
            {"eigenvalue", complex_json(c.eigenvalue)},
            {"residual", number(c.residual)},
            {"overlap", number(c.overlap)},
            {"kind", spectra::to_string(c.kind)}};
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

}  // namespace

std::string csv_number(double v) {
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
    return std::string(buf, p);
}

std::string map_csv(const spectra::GridScan& grid) {
    Csv c;
    c.text("x").text("y");
    for (std::size_t i = 0; i < grid.dim; ++i) {
        c.text("re_l" + std::to_string(i)).text("im_l" + std::to_string(i));
    }
    c.text("min_gap").text("max_overlap").end();
    for (int iy = 0; iy < grid.ny(); ++iy) {
        for (int ix = 0; ix < grid.nx(); ++ix) {
            const auto& cell = grid.at(ix, iy);
            c.cell(grid.plane.x.at(ix)).cell(grid.plane.y.at(iy));
            for (const auto& l : cell.eigenvalues) c.cell(l.real()).cell(l.imag());
            c.cell(cell.min_gap).cell(cell.max_overlap).end();
        }
    }
    return c.s;
}

std::string map_json(const spectra::ExceptionalMap& map) {
    const auto& g = map.grid;
    json lines = json::array();
    for (const auto& l : map.lines) {
        json verts = json::array();
        for (const auto& v : l.vertices) {
            verts.push_back({{"x", v.x}, {"y", v.y}, {"gap", number(v.gap)}, {"overlap", number(v.overlap)}});
        }
        lines.push_back({{"closed", l.closed}, {"vertices", std::move(verts)}});
    }
    json points = json::array();
    for (const auto& p : map.points) points.push_back(candidate_json(p));
    json fixed = json::object();
    for (const auto& [k, v] : g.plane.fixed) fixed[k] = v;
    return dump({{"model", g.model},
                 {"dimension", g.dim},
                 {"fixed", std::move(fixed)},
                 {"x", {{"name", g.plane.x.name}, {"min", g.plane.x.min}, {"max", g.plane.x.max}, {"resolution", g.plane.x.resolution}}},
                 {"y", {{"name", g.plane.y.name}, {"min", g.plane.y.min}, {"max", g.plane.y.max}, {"resolution", g.plane.y.resolution}}},
                 {"real_characteristic_polynomial", g.real_poly()},
                 {"lines", std::move(lines)},
                 {"points", std::move(points)}});
}

std::string spectrum_csv(const linalg::SpectralDecomposition& d) {
    Csv c;
    c.text("index").text("re").text("im").text("defective").text("cluster").end();
    for (std::size_t i = 0; i < d.dim(); ++i) {
        c.cell(i).cell(d.eigenvalues[i].real()).cell(d.eigenvalues[i].imag());
        c.cell(d.defective[i] ? 1 : 0).cell(d.cluster[i]).end();
    }
    return c.s;
}

std::string spectrum_json(const ExperimentConfig& cfg, const linalg::SpectralDecomposition& d) {
    json params = json::object();
    for (const auto& [k, v] : cfg.params) params[k] = v;
    json eigs = json::array();
    for (std::size_t i = 0; i < d.dim(); ++i) {
        json right = json::array(), left = json::array();
        for (std::size_t k = 0; k < d.right[i].dim(); ++k) {
            right.push_back(complex_json(d.right[i][k]));
            left.push_back(complex_json(d.left[i][k]));
        }
        eigs.push_back({{"eigenvalue", complex_json(d.eigenvalues[i])},
                        {"defective", static_cast<bool>(d.defective[i])},
                        {"cluster", d.cluster[i]},
                        {"right", std::move(right)},
                        {"left", std::move(left)}});
    }
    return dump({{"model", cfg.model},
                 {"params", std::move(params)},
                 {"ep_condition", number(d.ep_condition)},
                 {"matrix_norm", d.matrix_norm},
                 {"eigenpairs", std::move(eigs)}});
}

std::string trajectory_csv(const dynamics::TrajectoryRecord& traj) {
    if (traj.size() == 0) throw InvalidInput("empty trajectory");
    const std::size_t dim = traj.states.front().dim();
    const bool projected = traj.projected_energy.size() == traj.size();
    const std::size_t nw = projected ? traj.weights.front().size() : 0;
    Csv c;
    c.text("t");
    for (std::size_t k = 0; k < dim; ++k) c.text("re_s" + std::to_string(k)).text("im_s" + std::to_string(k));
    c.text("norm").text("re_ebar").text("im_ebar").text("sheet_index");
    for (std::size_t k = 0; k < nw; ++k) c.text("c2_" + std::to_string(k));
    c.text("log_norm").end();
    for (std::size_t i = 0; i < traj.size(); ++i) {
        c.cell(traj.times[i]);
        for (std::size_t k = 0; k < dim; ++k) c.cell(traj.states[i][k].real()).cell(traj.states[i][k].imag());
        c.cell(traj.norm[i]);
        if (projected) {
            c.cell(traj.projected_energy[i].real()).cell(traj.projected_energy[i].imag()).cell(traj.sheet_index[i]);
            for (double w : traj.weights[i]) c.cell(w);
        } else {
            c.empty().empty().empty();
        }
        c.cell(traj.log_norm[i]).end();
    }
    return c.s;
}

namespace {

json direction_obj(const dynamics::DirectionResult& r) {
    return {{"direction", models::to_string(r.direction)},
            {"fidelity_initial", number(r.fidelity_initial)},
            {"fidelity_other", number(r.fidelity_other)},
            {"final_sheet", r.final_sheet},
            {"final_log_norm", r.trajectory.log_norm.empty() ? 0.0 : r.trajectory.log_norm.back()}};
}

json run_header(const ExperimentConfig& cfg) {
    json params = json::object();
    for (const auto& [k, v] : cfg.params) params[k] = v;
    json h = {{"model", cfg.model}, {"params", std::move(params)}, {"initial", cfg.run.initial}};
    if (cfg.path) h["path"] = path_json(*cfg.path);
    return h;
}

}  // namespace

std::string chirality_json(const ExperimentConfig& cfg, const dynamics::ChiralityReport& rep) {
    json j = run_header(cfg);
    j["initial_index"] = rep.initial_index;
    j["initial_eigenvalue"] = complex_json(rep.initial_eigenvalue);
    j["ccw"] = direction_obj(rep.ccw);
    j["cw"] = direction_obj(rep.cw);
    j["verdict"] = dynamics::to_string(rep.verdict);
    j["adiabaticity"] = {{"min_gap", number(rep.adiabaticity.min_gap)},
                         {"ratio", number(rep.adiabaticity.dimensionless_ratio)}};
    return dump(j);
}

std::string direction_json(const ExperimentConfig& cfg, const dynamics::DirectionResult& r, int initial_index) {
    json j = run_header(cfg);
    j["initial_index"] = initial_index;
    j[std::string(models::to_string(r.direction))] = direction_obj(r);
    j["verdict"] = nullptr;
    return dump(j);
}

std::vector<double> log_periods(double t_min, double t_max, int points) {
    if (!(t_min > 0.0 && t_max > t_min) || points < 2) throw InvalidInput("period scan needs 0 < t_min < t_max and >= 2 points");
    std::vector<double> out(static_cast<std::size_t>(points));
    const double a = std::log10(t_min), b = std::log10(t_max);
    for (int i = 0; i < points; ++i) out[i] = std::pow(10.0, a + (b - a) * i / (points - 1));
    out.front() = t_min;
    out.back() = t_max;
    return out;
}

std::string tscan_csv(const std::vector<PeriodScanRow>& rows) {
    Csv c;
    c.text("T").text("ccw_fidelity").text("cw_fidelity").text("verdict").text("adiabaticity_ratio").end();
    for (const auto& r : rows) {
        c.cell(r.T).cell(r.ccw_fidelity).cell(r.cw_fidelity).text(dynamics::to_string(r.verdict));
        c.cell(r.adiabaticity_ratio).end();
    }
    return c.s;
}

std::string steady_csv(const rydberg::SteadyScan& scan) {
    Csv c;
    c.text("Omega").text("Delta").text("discriminant").text("roots");
    for (int k = 0; k < 3; ++k) c.text("n_" + std::to_string(k));
    for (int k = 0; k < 3; ++k) c.text("stable_" + std::to_string(k));
    c.end();
    for (int iy = 0; iy < scan.ny(); ++iy) {
        for (int ix = 0; ix < scan.nx(); ++ix) {
            const auto& cell = scan.at(ix, iy);
            const auto& roots = cell.states.roots;
            c.cell(scan.plane.omega.at(ix)).cell(scan.plane.delta.at(iy)).cell(cell.discriminant).cell(roots.size());
            for (std::size_t k = 0; k < 3; ++k) {
                if (k < roots.size()) c.cell(roots[k].n);
                else c.empty();
            }
            for (std::size_t k = 0; k < 3; ++k) {
                if (k < roots.size()) c.cell(roots[k].stability == rydberg::Stability::Stable ? 1 : 0);
                else c.empty();
            }
            c.end();
        }
    }
    return c.s;
}

namespace {

json fold_set(const std::vector<rydberg::FoldLine>& lines) {
    json out = json::array();
    for (const auto& l : lines) {
        json pts = json::array();
        for (const auto& p : l.points) pts.push_back(json::array({p.Omega, p.Delta}));
        out.push_back({{"closed", l.closed}, {"points", std::move(pts)}});
    }
    return out;
}

}  // namespace

std::string folds_json(const rydberg::BistabilityMap& map) {
    json cusps = json::array();
    for (const auto& c : map.cusps) cusps.push_back({{"Omega", c.Omega}, {"Delta", c.Delta}, {"n", c.n}});
    const auto& p = map.scan.plane;
    return dump({{"gamma", p.gamma},
                 {"NV", p.NV},
                 {"Omega", {{"min", p.omega.min}, {"max", p.omega.max}, {"resolution", p.omega.resolution}}},
                 {"Delta", {{"min", p.delta.min}, {"max", p.delta.max}, {"resolution", p.delta.resolution}}},
                 {"cusps", std::move(cusps)},
                 {"fold_lines", fold_set(map.folds)},
                 {"discriminant_contours", fold_set(map.contours)}});
}

std::string conditions_json(const rydberg::TransferConditions& c) {
    json crossings = json::array();
    for (const auto& x : c.crossings) {
        crossings.push_back({{"u", x.u}, {"Omega", x.Omega}, {"Delta", x.Delta}, {"arc", x.arc}, {"line", x.line}});
    }
    return dump({{"initial_in_bistable", c.initial_in_bistable},
                 {"nearest_crossings_straddle_cusp", c.nearest_crossings_straddle_cusp},
                 {"crossings", std::move(crossings)}});
}

std::string rydberg_trajectory_csv(const rydberg::RydbergTrajectory& traj) {
    Csv c;
    c.text("t").text("n_R").text("re_rho21").text("im_rho21").text("Omega").text("Delta").end();
    for (std::size_t i = 0; i < traj.size(); ++i) {
        const auto& s = traj.states[i];
        c.cell(traj.times[i]).cell(s.rho22).cell(s.rho21.real()).cell(s.rho21.imag());
        c.cell(traj.Omega[i]).cell(traj.Delta[i]).end();
    }
    return c.s;
}

std::string transfer_json(const ExperimentConfig& cfg, const std::vector<const rydberg::SteadyDirection*>& runs,
                          bool chiral) {
    json j = run_header(cfg);
    for (const auto* r : runs) {
        j[std::string(models::to_string(r->direction))] = {
            {"initial_n", r->initial_n}, {"final_n", r->final_n}, {"switched", r->switched}};
    }
    if (runs.size() == 2) j["chiral"] = chiral;
    else j["chiral"] = nullptr;
    return dump(j);
}

}  // namespace lep::cli
