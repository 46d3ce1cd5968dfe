// lepsim: command-line front end.

#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <sstream>

#include "lep/config.hpp"
#include "lep/presets.hpp"
#include "lep/runner.hpp"

namespace {

using lep::cli::ExperimentConfig;

struct Source {
    std::string config_file;
    std::string preset;
};

void add_source(CLI::App* app, Source& src) {
    auto* c = app->add_option("--config", src.config_file, "experiment configuration file");
    auto* p = app->add_option("--preset", src.preset, "built-in configuration (see 'presets list')");
    c->excludes(p);
}

ExperimentConfig load(const Source& src) {
    if (!src.preset.empty()) return lep::cli::preset(src.preset);
    if (src.config_file.empty()) throw lep::InvalidInput("one of --config or --preset is required");
    std::ifstream f(src.config_file, std::ios::binary);
    if (!f) throw lep::IoError("cannot read '" + src.config_file + "'");
    std::ostringstream ss;
    ss << f.rdbuf();
    return lep::cli::parse_config(ss.str());
}

void report_error(std::string_view kind, std::string_view message, const nlohmann::json& issues = nullptr) {
    nlohmann::json j = {{"error", {{"kind", kind}, {"message", message}}}};
    if (!issues.is_null()) j["error"]["issues"] = issues;
    std::cerr << j.dump() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Exceptional-point spectra, loop dynamics and Rydberg bistability"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(lep::cli::kToolVersion));

    Source src;
    std::string out_dir = ".";
    int threads = 1;
    bool check_steps = false;

    auto add_run_flags = [&](CLI::App* sub) {
        add_source(sub, src);
        sub->add_option("--out", out_dir, "output directory")->capture_default_str();
        sub->add_option("--threads", threads, "grid-scan threads")->check(CLI::PositiveNumber)->capture_default_str();
        sub->add_flag("--check-steps", check_steps, "re-run trajectories at twice the steps and compare");
    };

    auto* run = app.add_subcommand("run", "run a configuration whatever its command");
    add_run_flags(run);
    std::vector<std::pair<CLI::App*, lep::cli::Command>> typed;
    for (auto [name, cmd, help] : {std::tuple{"spectrum", lep::cli::Command::Spectrum, "eigendecomposition at one point"},
                                   std::tuple{"map", lep::cli::Command::Map, "exceptional map over a plane"},
                                   std::tuple{"encircle", lep::cli::Command::Encircle, "loop dynamics and chirality"},
                                   std::tuple{"rydberg", lep::cli::Command::Rydberg, "Rydberg bistability and loops"}}) {
        auto* sub = app.add_subcommand(name, help);
        add_run_flags(sub);
        typed.emplace_back(sub, cmd);
    }

    auto* presets = app.add_subcommand("presets", "built-in configurations");
    presets->require_subcommand(1);
    auto* plist = presets->add_subcommand("list", "list presets");
    std::string show_name;
    auto* pshow = presets->add_subcommand("show", "print a preset as a configuration file");
    pshow->add_option("name", show_name)->required();

    auto* validate = app.add_subcommand("validate", "parse and check a configuration");
    add_source(validate, src);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        report_error("UsageError", e.what());
        return 2;
    }

    try {
        if (plist->parsed()) {
            for (const auto& p : lep::cli::preset_list()) std::cout << p.name << "\t" << p.summary << "\n";
            return 0;
        }
        if (pshow->parsed()) {
            std::cout << lep::cli::serialize_config(lep::cli::preset(show_name));
            return 0;
        }
        if (validate->parsed()) {
            const auto cfg = load(src);
            lep::cli::validate_config(cfg);
            std::cout << nlohmann::json{{"valid", true}, {"command", lep::cli::to_string(cfg.command)}}.dump() << "\n";
            return 0;
        }

        const auto cfg = load(src);
        for (const auto& [sub, cmd] : typed) {
            if (sub->parsed() && cfg.command != cmd) {
                throw lep::InvalidInput("configuration has command '" + std::string(lep::cli::to_string(cfg.command)) +
                                        "', not '" + sub->get_name() + "'");
            }
        }
        const auto manifest = lep::cli::run_experiment(cfg, {out_dir, threads, check_steps});
        std::cout << manifest.to_json();
        return 0;
    } catch (const lep::cli::ConfigError& e) {
        nlohmann::json issues = nlohmann::json::array();
        for (const auto& i : e.issues()) {
            issues.push_back({{"kind", i.kind}, {"line", i.line}, {"key", i.key}, {"message", i.message}});
        }
        report_error(e.kind(), e.what(), issues);
        return 2;
    } catch (const lep::Error& e) {
        report_error(e.kind(), e.what());
        return 1;
    } catch (const std::exception& e) {
        report_error("InternalError", e.what());
        return 1;
    }
}
