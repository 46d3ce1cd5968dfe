#pragma once

// Experiment configuration files.
//
// Grammar (one statement per line, UTF-8):
//
//   line      := blank | comment | statement
//   comment   := '#' anything
//   statement := section '.' key '=' value [comment]
//   section   := experiment | params | plane | path | run
//
// Keys:
//   experiment.command   spectrum | map | encircle | rydberg          (required)
//   experiment.model     catalog model name, or "rydberg"              (required)
//   experiment.prefix    output file prefix                            (default "run")
//   params.<name>        model parameter value (aliases accepted)
//   plane.x / plane.y    axis parameter names
//   plane.x_min, plane.x_max, plane.x_res, plane.y_min, plane.y_max, plane.y_res
//   path.plane           J-Omega | delta-J | Omega-Delta
//   path.center_x, path.center_y, path.radius, path.period, path.phase0
//   run.directions       both | ccw | cw                               (default both)
//   run.initial          gain | quasi_steady | index | lower | upper   (default gain)
//   run.initial_index    integer, used with run.initial = index
//   run.steps            integer, 0 = default step count
//   run.records          integer, recorded samples per trajectory      (default 2000)
//   run.check_steps      true | false
//   run.scan_points, run.scan_t_min, run.scan_t_max   logarithmic period scan
//
// Numbers use '.' as decimal separator; booleans are true/false.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "lep/error.hpp"
#include "lep/models.hpp"
#include "lep/spectra.hpp"

namespace lep::cli {

enum class Command { Spectrum, Map, Encircle, Rydberg };
std::string_view to_string(Command c);

struct RunSection {
    std::string directions = "both";
    std::string initial = "gain";
    int initial_index = 0;
    int steps = 0;
    int records = 2000;
    bool check_steps = false;
    int scan_points = 0;
    double scan_t_min = 0.0;
    double scan_t_max = 0.0;

    friend bool operator==(const RunSection&, const RunSection&) = default;
};

struct PlaneSection {
    spectra::Axis x;
    spectra::Axis y;

    friend bool operator==(const PlaneSection&, const PlaneSection&) = default;
};

struct ExperimentConfig {
    Command command = Command::Spectrum;
    std::string model;
    std::string prefix = "run";
    models::ParamMap params;
    std::optional<PlaneSection> plane;
    /// direction is not part of the file; run.directions selects the runs.
    std::optional<models::EncirclePath> path;
    RunSection run;

    friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;

    /// Plane with the fixed parameters attached. Throws InvalidInput without a plane.
    spectra::PlaneSpec plane_spec() const;
};

struct ConfigIssue {
    /// SyntaxError, UnknownKey, MissingSection or BadValue.
    std::string kind;
    /// 1-based line, 0 when the issue is not tied to a line.
    int line = 0;
    std::string key;
    std::string message;
};

class ConfigError : public Error {
public:
    explicit ConfigError(std::vector<ConfigIssue> issues);
    const std::vector<ConfigIssue>& issues() const { return issues_; }

private:
    std::vector<ConfigIssue> issues_;
};

/// Parses and validates. Throws ConfigError listing every problem found.
ExperimentConfig parse_config(std::string_view text);

/// Semantic checks (model, parameters, required sections). Throws ConfigError.
void validate_config(const ExperimentConfig& cfg);

/// Canonical text form; parse_config(serialize_config(c)) == c.
std::string serialize_config(const ExperimentConfig& cfg);

/// Shortest decimal form that reads back to the same double.
std::string format_number(double v);

}  // namespace lep::cli
