#include "lep/config.hpp"

#include <charconv>
#include <cmath>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <system_error>

#include "lep/rydberg.hpp"

namespace lep::cli {

namespace {

std::string join_issues(const std::vector<ConfigIssue>& issues) {
    std::string s = "invalid configuration";
    for (const auto& i : issues) {
        s += "\n  ";
        if (i.line > 0) s += "line " + std::to_string(i.line) + ": ";
        s += i.kind + ": " + i.message;
    }
    return s;
}

std::string_view trim(std::string_view s) {
    const auto ws = " \t\r";
    const auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(ws);
    return s.substr(b, e - b + 1);
}

std::optional<double> parse_double(std::string_view v) {
    double out = 0.0;
    if (!v.empty() && v.front() == '+') v.remove_prefix(1);
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || p != v.data() + v.size() || !std::isfinite(out)) return std::nullopt;
    return out;
}

std::optional<int> parse_int(std::string_view v) {
    int out = 0;
    if (!v.empty() && v.front() == '+') v.remove_prefix(1);
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || p != v.data() + v.size()) return std::nullopt;
    return out;
}

std::optional<bool> parse_bool(std::string_view v) {
    if (v == "true") return true;
    if (v == "false") return false;
    return std::nullopt;
}

std::optional<Command> parse_command(std::string_view v) {
    if (v == "spectrum") return Command::Spectrum;
    if (v == "map") return Command::Map;
    if (v == "encircle") return Command::Encircle;
    if (v == "rydberg") return Command::Rydberg;
    return std::nullopt;
}

const std::set<std::string, std::less<>> kDirections{"both", "ccw", "cw"};
const std::set<std::string, std::less<>> kInitials{"gain", "quasi_steady", "index", "lower", "upper"};

struct Builder {
    ExperimentConfig cfg;
    std::vector<ConfigIssue> issues;
    std::set<std::string, std::less<>> seen_sections;
    std::set<std::string, std::less<>> seen_keys;
    // Plane and path fields are collected first, assembled at the end.
    std::map<std::string, std::string, std::less<>> plane_fields;
    std::map<std::string, std::string, std::less<>> path_fields;
    std::map<std::string, int, std::less<>> field_lines;

    void issue(std::string kind, int line, std::string key, std::string msg) {
        issues.push_back({std::move(kind), line, std::move(key), std::move(msg)});
    }

    void bad(int line, const std::string& key, const std::string& msg) { issue("BadValue", line, key, key + ": " + msg); }

    void statement(int line, std::string_view section, std::string_view key, std::string_view value) {
        const std::string full = std::string(section) + "." + std::string(key);
        if (section == "experiment") {
            seen_sections.insert("experiment");
            if (key == "command") {
                if (auto c = parse_command(value)) cfg.command = *c;
                else bad(line, full, "expected spectrum, map, encircle or rydberg");
            } else if (key == "model") {
                cfg.model = std::string(value);
            } else if (key == "prefix") {
                if (value.empty() || value.find_first_of("/\\") != std::string_view::npos)
                    bad(line, full, "prefix must be a plain file name stem");
                else cfg.prefix = std::string(value);
            } else {
                issue("UnknownKey", line, full, "unknown key '" + full + "'");
                return;
            }
        } else if (section == "params") {
            seen_sections.insert("params");
            if (key.empty()) {
                issue("SyntaxError", line, full, "empty parameter name");
                return;
            }
            field_lines[full] = line;
            if (auto d = parse_double(value)) cfg.params[std::string(key)] = *d;
            else bad(line, full, "expected a finite number");
        } else if (section == "plane") {
            static const std::set<std::string, std::less<>> keys{"x", "x_min", "x_max", "x_res",
                                                                  "y", "y_min", "y_max", "y_res"};
            seen_sections.insert("plane");
            if (!keys.contains(key)) {
                issue("UnknownKey", line, full, "unknown key '" + full + "'");
                return;
            }
            plane_fields[std::string(key)] = std::string(value);
            field_lines[full] = line;
        } else if (section == "path") {
            static const std::set<std::string, std::less<>> keys{"plane",  "center_x", "center_y",
                                                                  "radius", "period",   "phase0"};
            seen_sections.insert("path");
            if (!keys.contains(key)) {
                issue("UnknownKey", line, full, "unknown key '" + full + "'");
                return;
            }
            path_fields[std::string(key)] = std::string(value);
            field_lines[full] = line;
        } else if (section == "run") {
            seen_sections.insert("run");
            run_statement(line, key, value, full);
        } else {
            issue("UnknownKey", line, full, "unknown section '" + std::string(section) + "'");
            return;
        }
        if (!seen_keys.insert(full).second) issue("SyntaxError", line, full, "duplicate key '" + full + "'");
    }

    void run_statement(int line, std::string_view key, std::string_view value, const std::string& full) {
        auto& r = cfg.run;
        auto set_int = [&](int& dst, int lo) {
            auto v = parse_int(value);
            if (!v || *v < lo) bad(line, full, "expected an integer >= " + std::to_string(lo));
            else dst = *v;
        };
        auto set_pos = [&](double& dst) {
            auto v = parse_double(value);
            if (!v || *v <= 0.0) bad(line, full, "expected a positive number");
            else dst = *v;
        };
        if (key == "directions") {
            if (kDirections.contains(value)) r.directions = std::string(value);
            else bad(line, full, "expected both, ccw or cw");
        } else if (key == "initial") {
            if (kInitials.contains(value)) r.initial = std::string(value);
            else bad(line, full, "expected gain, quasi_steady, index, lower or upper");
        } else if (key == "initial_index") {
            set_int(r.initial_index, 0);
        } else if (key == "steps") {
            set_int(r.steps, 0);
        } else if (key == "records") {
            set_int(r.records, 1);
        } else if (key == "check_steps") {
            if (auto b = parse_bool(value)) r.check_steps = *b;
            else bad(line, full, "expected true or false");
        } else if (key == "scan_points") {
            set_int(r.scan_points, 0);
        } else if (key == "scan_t_min") {
            set_pos(r.scan_t_min);
        } else if (key == "scan_t_max") {
            set_pos(r.scan_t_max);
        } else {
            issue("UnknownKey", line, full, "unknown key 'run." + std::string(key) + "'");
        }
    }

    // Reads a required numeric field from a collected section.
    template <class T, class Parse>
    bool field(const std::map<std::string, std::string, std::less<>>& fields, const std::string& section,
               const std::string& key, T& dst, Parse parse, const char* expect) {
        const std::string full = section + "." + key;
        auto it = fields.find(key);
        if (it == fields.end()) {
            issue("MissingSection", 0, full, "missing key '" + full + "'");
            return false;
        }
        auto v = parse(it->second);
        if (!v) {
            bad(field_lines[full], full, expect);
            return false;
        }
        dst = *v;
        return true;
    }

    void assemble() {
        if (seen_sections.contains("plane")) {
            PlaneSection p;
            auto name = [](std::string_view s) -> std::optional<std::string> {
                if (s.empty()) return std::nullopt;
                return std::string(s);
            };
            bool ok = true;
            ok &= field(plane_fields, "plane", "x", p.x.name, name, "expected a parameter name");
            ok &= field(plane_fields, "plane", "x_min", p.x.min, parse_double, "expected a finite number");
            ok &= field(plane_fields, "plane", "x_max", p.x.max, parse_double, "expected a finite number");
            ok &= field(plane_fields, "plane", "x_res", p.x.resolution, parse_int, "expected an integer");
            ok &= field(plane_fields, "plane", "y", p.y.name, name, "expected a parameter name");
            ok &= field(plane_fields, "plane", "y_min", p.y.min, parse_double, "expected a finite number");
            ok &= field(plane_fields, "plane", "y_max", p.y.max, parse_double, "expected a finite number");
            ok &= field(plane_fields, "plane", "y_res", p.y.resolution, parse_int, "expected an integer");
            if (ok) cfg.plane = p;
        }
        if (seen_sections.contains("path")) {
            models::EncirclePath p;
            auto plane = [](std::string_view s) -> std::optional<models::Plane> {
                try {
                    return models::parse_plane(s);
                } catch (const InvalidInput&) {
                    return std::nullopt;
                }
            };
            bool ok = true;
            ok &= field(path_fields, "path", "plane", p.plane, plane, "expected J-Omega, delta-J or Omega-Delta");
            ok &= field(path_fields, "path", "center_x", p.cx, parse_double, "expected a finite number");
            ok &= field(path_fields, "path", "center_y", p.cy, parse_double, "expected a finite number");
            ok &= field(path_fields, "path", "radius", p.radius, parse_double, "expected a finite number");
            ok &= field(path_fields, "path", "period", p.period, parse_double, "expected a finite number");
            if (path_fields.contains("phase0")) {
                ok &= field(path_fields, "path", "phase0", p.phase0, parse_double, "expected a finite number");
            }
            if (ok) cfg.path = p;
        }
    }
};

void semantic_checks(const ExperimentConfig& cfg, const std::set<std::string, std::less<>>* sections,
                     std::vector<ConfigIssue>& issues) {
    auto issue = [&](std::string kind, std::string key, std::string msg) {
        issues.push_back({std::move(kind), 0, std::move(key), std::move(msg)});
    };
    auto has = [&](const char* s, bool present) { return sections ? sections->contains(s) : present; };

    if (!has("experiment", !cfg.model.empty())) {
        issue("MissingSection", "experiment", "missing section 'experiment'");
        return;
    }
    if (cfg.model.empty()) {
        issue("MissingSection", "experiment.model", "missing key 'experiment.model'");
        return;
    }

    const bool needs_plane = cfg.command == Command::Map || cfg.command == Command::Rydberg;
    const bool needs_path = cfg.command == Command::Encircle || cfg.command == Command::Rydberg;
    if (needs_plane && !has("plane", cfg.plane.has_value())) {
        issue("MissingSection", "plane", "command '" + std::string(to_string(cfg.command)) + "' needs a 'plane' section");
    }
    if (needs_path && !has("path", cfg.path.has_value())) {
        issue("MissingSection", "path", "command '" + std::string(to_string(cfg.command)) + "' needs a 'path' section");
    }

    const auto& r = cfg.run;
    if (r.scan_points > 0) {
        if (cfg.command != Command::Encircle)
            issue("BadValue", "run.scan_points", "run.scan_points: period scans need command 'encircle'");
        if (r.scan_points < 2) issue("BadValue", "run.scan_points", "run.scan_points: need at least 2 points");
        if (!(r.scan_t_min > 0.0 && r.scan_t_max > r.scan_t_min))
            issue("BadValue", "run.scan_t_min", "run.scan_t_min/scan_t_max: need 0 < scan_t_min < scan_t_max");
    }
    if (cfg.command == Command::Rydberg && r.initial != "lower" && r.initial != "upper") {
        issue("BadValue", "run.initial", "run.initial: rydberg runs start from 'lower' or 'upper'");
    }
    if (cfg.command == Command::Encircle && (r.initial == "lower" || r.initial == "upper")) {
        issue("BadValue", "run.initial", "run.initial: 'lower'/'upper' apply to rydberg runs only");
    }

    auto guard = [&](const char* key, auto&& fn) {
        try {
            fn();
        } catch (const UnknownModel& e) {
            issue("BadValue", "experiment.model", std::string("experiment.model: ") + e.what());
        } catch (const Error& e) {
            issue("BadValue", key, std::string(key) + ": " + e.what());
        }
    };

    if (cfg.command == Command::Rydberg) {
        if (cfg.model != "rydberg") {
            issue("BadValue", "experiment.model", "experiment.model: command 'rydberg' uses model 'rydberg'");
            return;
        }
        for (const auto& [k, v] : cfg.params) {
            if (k != "gamma" && k != "NV") issue("UnknownKey", "params." + k, "unknown key 'params." + k + "'");
        }
        for (const char* k : {"gamma", "NV"}) {
            if (!cfg.params.contains(k))
                issue("MissingSection", std::string("params.") + k, std::string("missing key 'params.") + k + "'");
        }
        if (!issues.empty()) return;
        if (cfg.plane) guard("plane", [&] { rydberg::plane_from_spec(cfg.plane_spec()).validate(); });
        if (cfg.path) {
            guard("path", [&] {
                cfg.path->validate();
                if (cfg.path->plane != models::Plane::OmegaDelta)
                    throw InvalidInput("rydberg paths live in the Omega-Delta plane");
            });
        }
        return;
    }

    if (cfg.model == "rydberg") {
        issue("BadValue", "experiment.model", "experiment.model: model 'rydberg' needs command 'rydberg'");
        return;
    }
    const models::ModelInfo* info = nullptr;
    guard("experiment.model", [&] { info = &models::model_info(cfg.model); });
    if (!info) return;
    for (const auto& [k, v] : cfg.params) {
        try {
            models::canonical_param(*info, k);
        } catch (const Error&) {
            issue("UnknownKey", "params." + k, "unknown key 'params." + k + "' for model '" + cfg.model + "'");
        }
    }
    if (!issues.empty()) return;

    switch (cfg.command) {
        case Command::Spectrum:
            guard("params", [&] { models::resolve_params(*info, cfg.params); });
            break;
        case Command::Map:
            if (cfg.plane) {
                guard("plane", [&] {
                    const auto spec = cfg.plane_spec();
                    spec.validate();
                    spectra::PlaneModel(cfg.model, spec);
                });
            }
            break;
        case Command::Encircle:
            if (cfg.path) {
                guard("path", [&] {
                    cfg.path->validate();
                    const auto [ax, ay] = models::plane_axes(cfg.path->plane);
                    models::ParamMap full = cfg.params;
                    for (const auto& name : {ax, ay}) {
                        const auto canon = models::canonical_param(*info, name);
                        for (const auto& [k, v] : cfg.params) {
                            if (models::canonical_param(*info, k) == canon)
                                throw InvalidInput("parameter '" + k + "' is driven by the path and must not be fixed");
                        }
                        full[name] = 0.0;
                    }
                    models::resolve_params(*info, full);
                });
            }
            if (r.initial == "quasi_steady" && info->kind != models::ModelKind::Liouvillian)
                issue("BadValue", "run.initial", "run.initial: 'quasi_steady' needs a Liouvillian model");
            break;
        case Command::Rydberg: break;
    }
}

}  // namespace

std::string_view to_string(Command c) {
    switch (c) {
        case Command::Spectrum: return "spectrum";
        case Command::Map: return "map";
        case Command::Encircle: return "encircle";
        case Command::Rydberg: return "rydberg";
    }
    return "";
}

spectra::PlaneSpec ExperimentConfig::plane_spec() const {
    if (!plane) throw InvalidInput("configuration has no plane");
    return spectra::PlaneSpec{plane->x, plane->y, params};
}

ConfigError::ConfigError(std::vector<ConfigIssue> issues)
    : Error(issues.empty() ? "ConfigError" : issues.front().kind, join_issues(issues)), issues_(std::move(issues)) {}

ExperimentConfig parse_config(std::string_view text) {
    Builder b;
    int line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto nl = text.find('\n', pos);
        std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        ++line_no;

        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;

        const auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            b.issue("SyntaxError", line_no, "", "expected 'section.key = value'");
            continue;
        }
        const auto lhs = trim(line.substr(0, eq));
        const auto value = trim(line.substr(eq + 1));
        const auto dot = lhs.find('.');
        if (dot == std::string_view::npos || dot == 0 || lhs.find_first_of(" \t") != std::string_view::npos) {
            b.issue("SyntaxError", line_no, std::string(lhs), "expected 'section.key' before '='");
            continue;
        }
        if (value.empty()) {
            b.issue("SyntaxError", line_no, std::string(lhs), "missing value for '" + std::string(lhs) + "'");
            continue;
        }
        b.statement(line_no, lhs.substr(0, dot), lhs.substr(dot + 1), value);
    }
    if (b.seen_sections.contains("experiment") && !b.seen_keys.contains("experiment.command")) {
        b.issue("MissingSection", 0, "experiment.command", "missing key 'experiment.command'");
    }
    b.assemble();
    if (b.issues.empty()) {
        semantic_checks(b.cfg, &b.seen_sections, b.issues);
        for (auto& i : b.issues) {
            if (auto it = b.field_lines.find(i.key); i.line == 0 && it != b.field_lines.end()) i.line = it->second;
        }
    }
    if (!b.issues.empty()) throw ConfigError(std::move(b.issues));
    return b.cfg;
}

void validate_config(const ExperimentConfig& cfg) {
    std::vector<ConfigIssue> issues;
    semantic_checks(cfg, nullptr, issues);
    if (!issues.empty()) throw ConfigError(std::move(issues));
}

std::string format_number(double v) {
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, p);
}

std::string serialize_config(const ExperimentConfig& cfg) {
    std::ostringstream os;
    os << "experiment.command = " << to_string(cfg.command) << "\n";
    os << "experiment.model = " << cfg.model << "\n";
    os << "experiment.prefix = " << cfg.prefix << "\n";
    for (const auto& [k, v] : cfg.params) os << "params." << k << " = " << format_number(v) << "\n";
    if (cfg.plane) {
        const auto& p = *cfg.plane;
        os << "plane.x = " << p.x.name << "\n"
           << "plane.x_min = " << format_number(p.x.min) << "\n"
           << "plane.x_max = " << format_number(p.x.max) << "\n"
           << "plane.x_res = " << p.x.resolution << "\n"
           << "plane.y = " << p.y.name << "\n"
           << "plane.y_min = " << format_number(p.y.min) << "\n"
           << "plane.y_max = " << format_number(p.y.max) << "\n"
           << "plane.y_res = " << p.y.resolution << "\n";
    }
    if (cfg.path) {
        const auto& p = *cfg.path;
        os << "path.plane = " << models::to_string(p.plane) << "\n"
           << "path.center_x = " << format_number(p.cx) << "\n"
           << "path.center_y = " << format_number(p.cy) << "\n"
           << "path.radius = " << format_number(p.radius) << "\n"
           << "path.period = " << format_number(p.period) << "\n"
           << "path.phase0 = " << format_number(p.phase0) << "\n";
    }
    const auto& r = cfg.run;
    os << "run.directions = " << r.directions << "\n"
       << "run.initial = " << r.initial << "\n"
       << "run.initial_index = " << r.initial_index << "\n"
       << "run.steps = " << r.steps << "\n"
       << "run.records = " << r.records << "\n"
       << "run.check_steps = " << (r.check_steps ? "true" : "false") << "\n"
       << "run.scan_points = " << r.scan_points << "\n";
    if (r.scan_t_min > 0.0) os << "run.scan_t_min = " << format_number(r.scan_t_min) << "\n";
    if (r.scan_t_max > 0.0) os << "run.scan_t_max = " << format_number(r.scan_t_max) << "\n";
    return os.str();
}

}  // namespace lep::cli
