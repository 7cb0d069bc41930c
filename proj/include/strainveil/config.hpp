#pragma once

#include "strainveil/flow.hpp"
#include "strainveil/suppress.hpp"

#include <filesystem>
#include <map>
#include <string>

namespace strainveil {

struct PipelineConfig {
    SuppressionConfig suppression;
    FlowParams flow;
    int crop_width = 256;
    int crop_height = 256;
    double inter_ocular = 96.0;
};

/// `key = value` lines; '#' starts a comment, values may be quoted.
/// Unknown keys and malformed values throw InputError naming the line.
PipelineConfig parse_config(const std::string& text);
PipelineConfig load_config(const std::filesystem::path& path);

/// Every key with its effective value, in the same syntax parse_config reads.
std::map<std::string, std::string> config_snapshot(const PipelineConfig& cfg);

}  // namespace strainveil
