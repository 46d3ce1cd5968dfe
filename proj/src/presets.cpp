#include "lep/presets.hpp"

#include <cmath>
#include <numbers>

namespace lep::cli {

namespace {

ExperimentConfig fig1() {
    ExperimentConfig c;
    c.command = Command::Map;
    c.model = "detuned_liouvillian";
    c.prefix = "fig1";
    c.params = {{"Gamma", 1.0}};
    c.plane = PlaneSection{{"delta", -0.3, 0.3, 121}, {"J", 0.0, 0.3, 61}};
    return c;
}

ExperimentConfig fig2() {
    ExperimentConfig c;
    c.command = Command::Encircle;
    c.model = "encircle";
    c.prefix = "fig2";
    c.params = {{"Gamma", 1.0}};
    models::EncirclePath p;
    p.plane = models::Plane::JOmega;
    p.cx = 0.5;
    p.cy = 0.0;
    p.radius = 0.1;
    p.period = 100.0;
    p.phase0 = 0.0;
    c.path = p;
    c.run.initial = "gain";
    return c;
}

ExperimentConfig fig4_base(std::string prefix) {
    ExperimentConfig c;
    c.command = Command::Encircle;
    c.model = "coldatom_liouvillian";
    c.prefix = std::move(prefix);
    c.params = {{"Gamma", 1.0 / 20.0}, {"gamma", 1.0 / 100.0}};
    models::EncirclePath p;
    p.plane = models::Plane::DeltaJ;
    p.cx = 0.0;
    p.cy = 0.5;
    p.radius = 0.5;
    p.phase0 = 2.0 * std::numbers::pi / 3.0;
    c.path = p;
    c.run.initial = "quasi_steady";
    return c;
}

ExperimentConfig fig4a() {
    ExperimentConfig c;
    c.command = Command::Map;
    c.model = "coldatom_liouvillian";
    c.prefix = "fig4a";
    c.params = {{"Gamma", 1.0 / 20.0}, {"gamma", 1.0 / 100.0}};
    c.plane = PlaneSection{{"delta", -0.5, 0.5, 201}, {"J", 0.0, 1.0, 201}};
    return c;
}

ExperimentConfig fig4a_zoom() {
    auto c = fig4a();
    c.prefix = "fig4a_zoom";
    c.plane = PlaneSection{{"delta", -0.01, 0.01, 201}, {"J", 0.0, 0.015, 151}};
    return c;
}

ExperimentConfig fig4_adiabatic() {
    auto c = fig4_base("fig4_adiabatic");
    c.path->period = 10000.0;
    return c;
}

ExperimentConfig fig4_intermediate() {
    auto c = fig4_base("fig4_intermediate");
    c.path->period = 150.0;
    return c;
}

ExperimentConfig fig4_scan() {
    auto c = fig4_base("fig4_scan");
    c.path->period = 1000.0;
    c.run.scan_points = 8;
    c.run.scan_t_min = 100.0;
    c.run.scan_t_max = 100000.0;
    return c;
}

ExperimentConfig fig5() {
    ExperimentConfig c;
    c.command = Command::Rydberg;
    c.model = "rydberg";
    c.prefix = "fig5";
    c.params = {{"gamma", 1.0}, {"NV", -11.0}};
    c.plane = PlaneSection{{"Omega", 0.0, 8.0, 200}, {"Delta", -10.0, 0.0, 200}};
    models::EncirclePath p;
    p.plane = models::Plane::OmegaDelta;
    p.cx = 3.85;
    p.cy = -5.6;
    p.radius = 1.477;
    p.period = 50000.0;
    p.phase0 = -std::atan(9.0 / 4.0);
    c.path = p;
    c.run.initial = "lower";
    return c;
}

struct Entry {
    PresetInfo info;
    ExperimentConfig (*make)();
};

const std::vector<Entry>& entries() {
    static const std::vector<Entry> e{
        {{"fig1", "exceptional map of the detuned Liouvillian on the delta-J plane, Gamma = 1"}, fig1},
        {{"fig2", "Hamiltonian loop around the EP, Gamma = 1, r = 0.1, T = 100"}, fig2},
        {{"fig4a", "exceptional map of the cold-atom Liouvillian, Gamma = 1/20, gamma = 1/100"}, fig4a},
        {{"fig4a_zoom", "fig4a restricted to the exceptional structure near the origin"}, fig4a_zoom},
        {{"fig4_adiabatic", "cold-atom Liouvillian loop, T = 10000"}, fig4_adiabatic},
        {{"fig4_intermediate", "cold-atom Liouvillian loop, T = 150"}, fig4_intermediate},
        {{"fig4_scan", "cold-atom Liouvillian loop, 8 periods from 1e2 to 1e5"}, fig4_scan},
        {{"fig5", "Rydberg steady-state loop, gamma = 1, NV = -11, T = 50000"}, fig5},
    };
    return e;
}

}  // namespace

const std::vector<PresetInfo>& preset_list() {
    static const std::vector<PresetInfo> list = [] {
        std::vector<PresetInfo> out;
        for (const auto& e : entries()) out.push_back(e.info);
        return out;
    }();
    return list;
}

ExperimentConfig preset(std::string_view name) {
    for (const auto& e : entries()) {
        if (e.info.name == name) return e.make();
    }
    std::string known;
    for (const auto& e : entries()) known += (known.empty() ? "" : ", ") + e.info.name;
    throw InvalidInput("unknown preset '" + std::string(name) + "' (known: " + known + ")");
}

}  // namespace lep::cli
