#pragma once

// Built-in experiment configurations.

#include <string>
#include <string_view>
#include <vector>

#include "lep/config.hpp"

namespace lep::cli {

struct PresetInfo {
    std::string name;
    std::string summary;
};

const std::vector<PresetInfo>& preset_list();

/// Throws InvalidInput for unknown names.
ExperimentConfig preset(std::string_view name);

}  // namespace lep::cli
