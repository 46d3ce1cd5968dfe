#include "lep/runner.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <json.hpp>

#include "lep/dynamics.hpp"
#include "lep/output.hpp"
#include "lep/rydberg.hpp"
#include "lep/spectra.hpp"

namespace lep::cli {

namespace {

class ArtifactWriter {
public:
    ArtifactWriter(std::filesystem::path dir, std::string prefix) : dir_(std::move(dir)), prefix_(std::move(prefix)) {
        std::error_code ec;
        std::filesystem::create_directories(dir_, ec);
        if (ec) throw IoError("cannot create output directory '" + dir_.string() + "': " + ec.message());
    }

    void write(std::string_view suffix, const std::string& bytes) {
        const std::string name = prefix_ + "_" + std::string(suffix);
        write_raw(name, bytes);
        outputs_.push_back({name, bytes.size(), fnv1a(bytes)});
    }

    void write_raw(const std::string& name, const std::string& bytes) const {
        const auto path = dir_ / name;
        std::ofstream f(path, std::ios::binary | std::ios::trunc);
        if (!f) throw IoError("cannot open '" + path.string() + "' for writing");
        f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!f) throw IoError("write failed for '" + path.string() + "'");
    }

    std::vector<OutputFile>& outputs() { return outputs_; }

private:
    std::filesystem::path dir_;
    std::string prefix_;
    std::vector<OutputFile> outputs_;
};

dynamics::ChiralityOptions chirality_options(const ExperimentConfig& cfg, bool check) {
    dynamics::ChiralityOptions o;
    const auto& r = cfg.run;
    if (r.initial == "quasi_steady") o.initial = dynamics::InitialBranch::QuasiSteady;
    else if (r.initial == "index") o.initial = dynamics::InitialBranch::Index;
    else o.initial = dynamics::InitialBranch::Gain;
    o.initial_index = r.initial_index;
    o.steps = r.steps;
    o.records = r.records;
    o.check_steps = r.check_steps || check;
    return o;
}

void run_spectrum(const ExperimentConfig& cfg, ArtifactWriter& w) {
    const auto d = linalg::eig(models::build_model(cfg.model, cfg.params));
    w.write("spectrum.csv", spectrum_csv(d));
    w.write("spectrum.json", spectrum_json(cfg, d));
}

void run_map(const ExperimentConfig& cfg, const RunOptions& opts, ArtifactWriter& w) {
    const auto map = spectra::map_exceptional(cfg.plane_spec(), cfg.model, opts.threads);
    w.write("map.csv", map_csv(map.grid));
    w.write("map.json", map_json(map));
}

void run_period_scan(const ExperimentConfig& cfg, const dynamics::PathModel& pm,
                     const dynamics::ChiralityOptions& co, ArtifactWriter& w) {
    std::vector<PeriodScanRow> rows;
    for (double T : log_periods(cfg.run.scan_t_min, cfg.run.scan_t_max, cfg.run.scan_points)) {
        auto p = pm;
        p.path.period = T;
        auto o = co;
        // Step counts follow T; a fixed count would be wrong for most of the scan.
        o.steps = 0;
        const auto rep = dynamics::classify_chirality(p, o);
        rows.push_back({T, rep.ccw.fidelity_initial, rep.cw.fidelity_initial, rep.verdict,
                        rep.adiabaticity.dimensionless_ratio});
    }
    w.write("tscan.csv", tscan_csv(rows));

    nlohmann::json j;
    j["periods"] = nlohmann::json::array();
    for (const auto& r : rows) {
        j["periods"].push_back({{"T", r.T},
                                {"ccw_fidelity", r.ccw_fidelity},
                                {"cw_fidelity", r.cw_fidelity},
                                {"verdict", dynamics::to_string(r.verdict)}});
    }
    // Crossover: last chiral period followed by the first non-chiral one above it.
    nlohmann::json cross = nullptr;
    for (std::size_t i = rows.size(); i-- > 0;) {
        if (rows[i].verdict != dynamics::Verdict::Chiral) continue;
        for (std::size_t k = i + 1; k < rows.size(); ++k) {
            if (rows[k].verdict == dynamics::Verdict::NonChiral) {
                cross = {{"last_chiral_T", rows[i].T}, {"first_non_chiral_T", rows[k].T}};
                break;
            }
        }
        break;
    }
    j["crossover"] = cross;
    j["largest_T_verdict"] = rows.empty() ? "" : std::string(dynamics::to_string(rows.back().verdict));
    w.write("tscan.json", j.dump(2) + "\n");
}

void run_encircle(const ExperimentConfig& cfg, const RunOptions& opts, ArtifactWriter& w) {
    const dynamics::PathModel pm{cfg.model, cfg.params, *cfg.path};
    const auto co = chirality_options(cfg, opts.check_steps);
    if (cfg.run.scan_points > 0) {
        run_period_scan(cfg, pm, co, w);
        return;
    }
    const auto& dirs = cfg.run.directions;
    if (dirs == "both") {
        const auto rep = dynamics::classify_chirality(pm, co);
        w.write("ccw.csv", trajectory_csv(rep.ccw.trajectory));
        w.write("cw.csv", trajectory_csv(rep.cw.trajectory));
        w.write("chirality.json", chirality_json(cfg, rep));
        return;
    }
    const auto dir = models::parse_direction(dirs);
    const int idx = dynamics::initial_branch_index(pm, co);
    const auto r = dynamics::run_direction(pm, dir, idx, co);
    w.write(std::string(dirs) + ".csv", trajectory_csv(r.trajectory));
    w.write("chirality.json", direction_json(cfg, r, idx));
}

void run_rydberg(const ExperimentConfig& cfg, const RunOptions& opts, ArtifactWriter& w) {
    const auto plane = rydberg::plane_from_spec(cfg.plane_spec());
    const auto map = rydberg::bistability_map(plane, opts.threads);
    w.write("steady.csv", steady_csv(map.scan));
    w.write("folds.json", folds_json(map));

    const auto initial = rydberg::parse_initial_root(cfg.run.initial);
    try {
        w.write("conditions.json", conditions_json(rydberg::check_conditions(*cfg.path, map, initial)));
    } catch (const NoIntersections& e) {
        nlohmann::json j = {{"error", {{"kind", e.kind()}, {"message", e.what()}}}};
        w.write("conditions.json", j.dump(2) + "\n");
    }

    const double gamma = plane.gamma, NV = plane.NV;
    const bool check = cfg.run.check_steps || opts.check_steps;
    const auto& dirs = cfg.run.directions;
    if (dirs == "both") {
        const auto enc = rydberg::encircle_steady(*cfg.path, gamma, NV, initial, cfg.run.steps, cfg.run.records, check);
        w.write("ccw.csv", rydberg_trajectory_csv(enc.ccw.trajectory));
        w.write("cw.csv", rydberg_trajectory_csv(enc.cw.trajectory));
        w.write("transfer.json", transfer_json(cfg, {&enc.ccw, &enc.cw}, enc.chiral));
        return;
    }
    auto path = *cfg.path;
    path.direction = models::parse_direction(dirs);
    const auto r = rydberg::encircle_steady_direction(path, gamma, NV, initial, cfg.run.steps, cfg.run.records, check);
    w.write(std::string(dirs) + ".csv", rydberg_trajectory_csv(r.trajectory));
    w.write("transfer.json", transfer_json(cfg, {&r}, false));
}

}  // namespace

std::uint64_t fnv1a(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

std::string hex64(std::uint64_t h) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string RunManifest::to_json() const {
    nlohmann::json outs = nlohmann::json::array();
    for (const auto& o : outputs) outs.push_back({{"name", o.name}, {"bytes", o.bytes}, {"fnv1a", hex64(o.fnv1a)}});
    nlohmann::json j = {{"config_hash", hex64(config_hash)},
                        {"tool_version", tool_version},
                        {"wall_time_s", wall_time},
                        {"outputs", std::move(outs)}};
    return j.dump(2) + "\n";
}

RunManifest run_experiment(const ExperimentConfig& cfg, const RunOptions& opts) {
    validate_config(cfg);
    if (opts.threads < 1) throw InvalidInput("--threads must be >= 1");
    const auto t0 = std::chrono::steady_clock::now();

    ArtifactWriter w(opts.out_dir, cfg.prefix);
    const std::string text = serialize_config(cfg);
    w.write("config.txt", text);
    switch (cfg.command) {
        case Command::Spectrum: run_spectrum(cfg, w); break;
        case Command::Map: run_map(cfg, opts, w); break;
        case Command::Encircle: run_encircle(cfg, opts, w); break;
        case Command::Rydberg: run_rydberg(cfg, opts, w); break;
    }

    RunManifest m;
    m.config_hash = fnv1a(text);
    m.outputs = w.outputs();
    m.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    w.write_raw("manifest.json", m.to_json());
    return m;
}

}  // namespace lep::cli
