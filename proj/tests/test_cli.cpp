#include <doctest.h>

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <numbers>
#include <sstream>

#include "lep/config.hpp"
#include "lep/output.hpp"
#include "lep/presets.hpp"
#include "lep/runner.hpp"
#include "support.hpp"

using namespace lep;
using namespace lep::cli;
using lep::test::Rng;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

fs::path scratch(const std::string& name) {
    const auto p = fs::temp_directory_path() / ("lep_cli_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::vector<ConfigIssue> issues_of(std::string_view text) {
    try {
        parse_config(text);
    } catch (const ConfigError& e) {
        return e.issues();
    }
    return {};
}

bool has_issue(const std::vector<ConfigIssue>& v, std::string_view kind, int line = -1) {
    for (const auto& i : v)
        if (i.kind == kind && (line < 0 || i.line == line)) return true;
    return false;
}

ExperimentConfig random_config(Rng& rng) {
    ExperimentConfig c;
    c.prefix = "r" + std::to_string(rng.integer(0, 999));
    switch (rng.integer(0, 2)) {
        case 0:
            c.command = Command::Spectrum;
            c.model = "detuned_liouvillian";
            c.params = {{"delta", rng.normal()}, {"J", rng.uniform(0, 2)}, {"Gamma", rng.uniform(0.01, 3)}};
            break;
        case 1: {
            c.command = Command::Map;
            c.model = "pt";
            c.params = {{"Gamma", rng.uniform(0.1, 2)}};
            const double a = rng.normal();
            c.plane = PlaneSection{{"J", a, a + rng.uniform(0.1, 3), rng.integer(2, 50)}, {"Gamma", 0.0, 1.0, 2}};
            c.params.clear();
            break;
        }
        default: {
            c.command = Command::Encircle;
            c.model = "encircle";
            c.params = {{"Gamma", rng.uniform(0.1, 3)}};
            models::EncirclePath p;
            p.cx = rng.normal();
            p.cy = rng.normal();
            p.radius = rng.uniform(1e-3, 1);
            p.period = rng.uniform(1, 1e4);
            p.phase0 = rng.uniform(-4, 4);
            c.path = p;
            c.run.directions = rng.integer(0, 1) ? "both" : "cw";
            c.run.steps = rng.integer(0, 1) ? 0 : rng.integer(100, 100000);
            c.run.records = rng.integer(2, 5000);
            c.run.check_steps = rng.integer(0, 1) == 1;
            if (rng.integer(0, 1)) {
                c.run.scan_points = rng.integer(2, 20);
                c.run.scan_t_min = rng.uniform(1, 10);
                c.run.scan_t_max = rng.uniform(20, 1e5);
            }
        }
    }
    return c;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("number formatting round-trips") {
    Rng rng(21);
    for (int k = 0; k < 2000; ++k) {
        const double v = rng.normal() * std::pow(10.0, rng.integer(-300, 300));
        const auto s = format_number(v);
        double back = 0;
        std::from_chars(s.data(), s.data() + s.size(), back);
        CHECK(back == v);
        const auto c = csv_number(v);
        double back2 = 0;
        std::from_chars(c.data(), c.data() + c.size(), back2);
        CHECK(back2 == v);
        CHECK(c.find(',') == std::string::npos);
    }
    CHECK(format_number(0.1) == "0.1");
    CHECK(csv_number(0.1) == "0.10000000000000001");
}

TEST_CASE("presets") {
    SUBCASE("fig2") {
        const auto c = preset("fig2");
        CHECK(c.command == Command::Encircle);
        CHECK(c.model == "encircle");
        CHECK(c.params.at("Gamma") == 1.0);
        REQUIRE(c.path);
        CHECK(c.path->radius == 0.1);
        CHECK(c.path->period == 100.0);
    }
    SUBCASE("fig5") {
        const auto c = preset("fig5");
        CHECK(c.command == Command::Rydberg);
        CHECK(c.params.at("gamma") == 1.0);
        CHECK(c.params.at("NV") == -11.0);
        REQUIRE(c.path);
        CHECK(c.path->period == 50000.0);
        CHECK(c.path->cx == 3.85);
        CHECK(c.path->cy == -5.6);
        CHECK(c.path->radius == 1.477);
        CHECK(c.path->phase0 == -std::atan(9.0 / 4.0));
        CHECK(c.path->plane == models::Plane::OmegaDelta);
    }
    SUBCASE("fig4") {
        for (const char* name : {"fig4a", "fig4_adiabatic", "fig4_intermediate"}) {
            const auto c = preset(name);
            CHECK(c.model == "coldatom_liouvillian");
            CHECK(c.params.at("Gamma") == 1.0 / 20.0);
            CHECK(c.params.at("gamma") == 1.0 / 100.0);
        }
        CHECK(preset("fig4_adiabatic").path->period == 10000.0);
        CHECK(preset("fig4_intermediate").path->period == 150.0);
        CHECK(preset("fig4a").plane->x.name == "delta");
        CHECK(preset("fig4a").plane->y.name == "J");
    }
    SUBCASE("every preset validates and round-trips") {
        CHECK(preset_list().size() >= 5);
        for (const auto& p : preset_list()) {
            const auto c = preset(p.name);
            CHECK_NOTHROW(validate_config(c));
            CHECK(parse_config(serialize_config(c)) == c);
        }
    }
    CHECK_THROWS_AS(preset("fig3"), InvalidInput);
}

TEST_CASE("random configurations round-trip") {
    Rng rng(23);
    for (int k = 0; k < 300; ++k) {
        const auto c = random_config(rng);
        const auto text = serialize_config(c);
        ExperimentConfig back;
        REQUIRE_NOTHROW(back = parse_config(text));
        CHECK(back == c);
        CHECK(serialize_config(back) == text);
    }
}

TEST_CASE("parse errors") {
    SUBCASE("empty text") {
        const auto v = issues_of("");
        CHECK(has_issue(v, "MissingSection"));
        CHECK(issues_of("# only a comment\n\n").size() >= 1);
    }
    SUBCASE("unknown key carries its line") {
        const auto v = issues_of("experiment.command = spectrum\nexperiment.model = pt\nparams.J = 1\nparams.Gama = 1\n");
        CHECK(has_issue(v, "UnknownKey", 4));
        const auto w = issues_of("experiment.command = spectrum\nexperiment.model = pt\nparams.J = 1\nparams.Gamma = 1\nrun.step = 10\n");
        CHECK(has_issue(w, "UnknownKey", 5));
    }
    SUBCASE("bad values") {
        CHECK(has_issue(issues_of("experiment.command = spectrum\nexperiment.model = pt\nparams.J = one\nparams.Gamma = 1\n"), "BadValue", 3));
        CHECK(has_issue(issues_of("experiment.command = spectrum\nexperiment.model = pt\nparams.J = nan\nparams.Gamma = 1\n"), "BadValue"));
        CHECK(has_issue(issues_of("experiment.command = draw\nexperiment.model = pt\n"), "BadValue", 1));
        CHECK(has_issue(issues_of("experiment.command = spectrum\nexperiment.model = nosuch\n"), "BadValue"));
        CHECK(has_issue(issues_of("experiment.command = spectrum\nexperiment.model = pt\nparams.J = 1,5\nparams.Gamma = 1\n"), "BadValue", 3));
    }
    SUBCASE("syntax") {
        CHECK(has_issue(issues_of("experiment.command spectrum\n"), "SyntaxError", 1));
        CHECK(has_issue(issues_of("experiment.command = spectrum\nmodel = pt\n"), "SyntaxError", 2));
        CHECK(has_issue(issues_of("experiment.command = spectrum\nexperiment.command = map\n"), "SyntaxError", 2));
    }
    SUBCASE("required sections per command") {
        CHECK(has_issue(issues_of("experiment.command = map\nexperiment.model = pt\nparams.Gamma = 1\n"), "MissingSection"));
        CHECK(has_issue(issues_of("experiment.command = encircle\nexperiment.model = encircle\nparams.Gamma = 1\n"), "MissingSection"));
    }
    SUBCASE("every problem is reported") {
        const auto v = issues_of("experiment.command = spectrum\nexperiment.model = pt\nparams.J = x\nfoo.bar = 1\n");
        CHECK(v.size() >= 2);
    }
    SUBCASE("comments and whitespace") {
        const auto c = parse_config("# header\n  experiment.command = spectrum  # trailing\nexperiment.model=pt\nparams.J = 1\nparams.Gamma = 2e0\n");
        CHECK(c.params.at("Gamma") == 2.0);
    }
}

TEST_CASE("run: Hermitian 2x2 sweep gives an empty line set") {
    ExperimentConfig c;
    c.command = Command::Map;
    c.model = "coldatom_heff";
    c.prefix = "herm";
    c.params = {{"Gamma", 0.0}};
    c.plane = PlaneSection{{"delta", -1.0, 1.0, 2}, {"J", 0.1, 1.0, 2}};
    const auto dir = scratch("herm");
    const auto m = run_experiment(c, {dir, 1, false});
    const auto j = nlohmann::json::parse(slurp(dir / "herm_map.json"));
    CHECK(j["lines"].empty());
    CHECK(j["points"].empty());
    const auto csv = slurp(dir / "herm_map.csv");
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 5);
    CHECK(csv.find('\r') == std::string::npos);
    CHECK(fs::exists(dir / "manifest.json"));
    CHECK(parse_config(slurp(dir / "herm_config.txt")) == c);
    for (const auto& o : m.outputs) {
        const auto bytes = slurp(dir / o.name);
        CHECK(bytes.size() == o.bytes);
        CHECK(fnv1a(bytes) == o.fnv1a);
    }
}

TEST_CASE("run: fig2 preset") {
    const auto dir = scratch("fig2");
    const auto m = run_experiment(preset("fig2"), {dir, 1, false});
    for (const char* f : {"fig2_ccw.csv", "fig2_cw.csv", "fig2_chirality.json", "fig2_config.txt", "manifest.json"})
        CHECK(fs::exists(dir / f));
    const auto j = nlohmann::json::parse(slurp(dir / "fig2_chirality.json"));
    CHECK(j["verdict"] == "chiral");
    const auto manifest = nlohmann::json::parse(slurp(dir / "manifest.json"));
    CHECK(manifest["config_hash"] == hex64(m.config_hash));
    CHECK(manifest["tool_version"] == std::string(kToolVersion));

    SUBCASE("determinism") {
        const auto dir2 = scratch("fig2_again");
        const auto m2 = run_experiment(preset("fig2"), {dir2, 4, false});
        REQUIRE(m2.outputs.size() == m.outputs.size());
        for (std::size_t i = 0; i < m.outputs.size(); ++i) {
            CHECK(m2.outputs[i].name == m.outputs[i].name);
            CHECK(m2.outputs[i].fnv1a == m.outputs[i].fnv1a);
            CHECK(m2.outputs[i].bytes == m.outputs[i].bytes);
        }
        CHECK(m2.config_hash == m.config_hash);
    }
}

TEST_CASE("run: spectrum and threads") {
    auto c = preset("fig1");
    c.plane->x.resolution = 31;
    c.plane->y.resolution = 21;
    const auto a = scratch("t1"), b = scratch("t8");
    const auto m1 = run_experiment(c, {a, 1, false});
    const auto m8 = run_experiment(c, {b, 8, false});
    for (std::size_t i = 0; i < m1.outputs.size(); ++i) CHECK(m1.outputs[i].fnv1a == m8.outputs[i].fnv1a);

    ExperimentConfig s;
    s.command = Command::Spectrum;
    s.model = "basic_liouvillian";
    s.prefix = "spec";
    s.params = {{"J", 1.0}, {"Gamma", 8.0}};
    const auto dir = scratch("spec");
    run_experiment(s, {dir, 1, false});
    const auto j = nlohmann::json::parse(slurp(dir / "spec_spectrum.json"));
    CHECK(j.dump().find("defective") != std::string::npos);
    const auto csv = slurp(dir / "spec_spectrum.csv");
    CHECK(csv.rfind("index,re,im,defective,cluster\n", 0) == 0);
}

TEST_CASE("fnv1a") {
    CHECK(fnv1a("") == 0xcbf29ce484222325ull);
    CHECK(fnv1a("a") == 0xaf63dc4c8601ec8cull);
    CHECK(hex64(0xabcull) == "0000000000000abc");
}

}  // TEST_SUITE
