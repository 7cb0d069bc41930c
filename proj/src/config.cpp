#include "strainveil/config.hpp"

#include "strainveil/error.hpp"

#include <fstream>
#include <functional>
#include <sstream>

namespace strainveil {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::string unquote(std::string v) {
    if (v.size() >= 2 && (v.front() == '"' || v.front() == '\'') && v.back() == v.front()) {
        return v.substr(1, v.size() - 2);
    }
    return v;
}

double as_double(const std::string& v) {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
}

int as_int(const std::string& v) {
    std::size_t used = 0;
    const int i = std::stoi(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return i;
}

std::string fmt(double v) {
    std::ostringstream s;
    s.precision(17);
    s << v;
    return s.str();
}

using Setter = std::function<void(PipelineConfig&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
    static const std::map<std::string, Setter> table = {
        {"threshold_percentile", [](PipelineConfig& c, const std::string& v) { c.suppression.threshold_percentile = as_double(v); }},
        {"reference_policy",
         [](PipelineConfig& c, const std::string& v) {
             if (v == "first_frame") c.suppression.reference_policy = ReferencePolicy::first_frame;
             else if (v == "min_mean_strain") c.suppression.reference_policy = ReferencePolicy::min_mean_strain;
             else throw std::invalid_argument(v);
         }},
        {"reference_window", [](PipelineConfig& c, const std::string& v) { c.suppression.reference_window = as_int(v); }},
        {"median_kernel", [](PipelineConfig& c, const std::string& v) { c.suppression.median_kernel = as_int(v); }},
        {"edge_band", [](PipelineConfig& c, const std::string& v) { c.suppression.edge_band = as_int(v); }},
        {"face_blur_sigma", [](PipelineConfig& c, const std::string& v) { c.suppression.face_blur_sigma = as_double(v); }},
        {"mask_min_blob", [](PipelineConfig& c, const std::string& v) { c.suppression.mask_min_blob = as_int(v); }},
        {"normalization",
         [](PipelineConfig& c, const std::string& v) {
             if (v == "per_frame") c.suppression.normalization = NormalizationMode::per_frame;
             else if (v == "per_sequence") c.suppression.normalization = NormalizationMode::per_sequence;
             else throw std::invalid_argument(v);
         }},
        {"pyramid_levels", [](PipelineConfig& c, const std::string& v) { c.flow.pyramid_levels = as_int(v); }},
        {"window_radius", [](PipelineConfig& c, const std::string& v) { c.flow.window_radius = as_int(v); }},
        {"iterations_per_level", [](PipelineConfig& c, const std::string& v) { c.flow.iterations_per_level = as_int(v); }},
        {"regularization_eps", [](PipelineConfig& c, const std::string& v) { c.flow.regularization_eps = as_double(v); }},
        {"max_displacement", [](PipelineConfig& c, const std::string& v) { c.flow.max_displacement = as_double(v); }},
        {"crop_width", [](PipelineConfig& c, const std::string& v) { c.crop_width = as_int(v); }},
        {"crop_height", [](PipelineConfig& c, const std::string& v) { c.crop_height = as_int(v); }},
        {"inter_ocular", [](PipelineConfig& c, const std::string& v) { c.inter_ocular = as_double(v); }},
    };
    return table;
}

}  // namespace

PipelineConfig parse_config(const std::string& text) {
    PipelineConfig cfg;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty() || line.front() == '[') continue;  // blank or TOML-style table header
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw InputError("config line " + std::to_string(lineno) + ": expected key = value");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = unquote(trim(line.substr(eq + 1)));
        const auto it = setters().find(key);
        if (it == setters().end()) throw InputError("config line " + std::to_string(lineno) + ": unknown key '" + key + "'");
        try {
            it->second(cfg, value);
        } catch (const std::exception&) {
            throw InputError("config line " + std::to_string(lineno) + ": bad value '" + value + "' for " + key);
        }
    }
    cfg.suppression.validate();
    cfg.flow.validate();
    if (cfg.crop_width < kMinFrameEdge || cfg.crop_height < kMinFrameEdge) {
        throw InputError("crop must be at least 16x16");
    }
    if (!(cfg.inter_ocular > 0.0)) throw InputError("inter_ocular must be > 0");
    return cfg;
}

PipelineConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open config " + path.string());
    std::ostringstream text;
    text << in.rdbuf();
    return parse_config(text.str());
}

std::map<std::string, std::string> config_snapshot(const PipelineConfig& cfg) {
    const auto& s = cfg.suppression;
    const auto& f = cfg.flow;
    return {
        {"threshold_percentile", fmt(s.threshold_percentile)},
        {"reference_policy", s.reference_policy == ReferencePolicy::first_frame ? "first_frame" : "min_mean_strain"},
        {"reference_window", std::to_string(s.reference_window)},
        {"median_kernel", std::to_string(s.median_kernel)},
        {"edge_band", std::to_string(s.edge_band)},
        {"face_blur_sigma", fmt(s.face_blur_sigma)},
        {"mask_min_blob", std::to_string(s.mask_min_blob)},
        {"normalization", s.normalization == NormalizationMode::per_frame ? "per_frame" : "per_sequence"},
        {"pyramid_levels", std::to_string(f.pyramid_levels)},
        {"window_radius", std::to_string(f.window_radius)},
        {"iterations_per_level", std::to_string(f.iterations_per_level)},
        {"regularization_eps", fmt(f.regularization_eps)},
        {"max_displacement", fmt(f.max_displacement)},
        {"crop_width", std::to_string(cfg.crop_width)},
        {"crop_height", std::to_string(cfg.crop_height)},
        {"inter_ocular", fmt(cfg.inter_ocular)},
    };
}

}  // namespace strainveil
