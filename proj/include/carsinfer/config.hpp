#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "carsinfer/line_narrowing.hpp"
#include "carsinfer/model_types.hpp"
#include "carsinfer/priors.hpp"
#include "carsinfer/smc.hpp"
#include "carsinfer/wavelet.hpp"

namespace carsinfer {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ModelConfig {
    std::optional<double> nr_level;      // A_J; unset = estimate from the data
    std::size_t edge_mask_channels = 16; // likelihood boundary mask per side
    int error_function_order = 34;       // symlet for eps_m
    std::size_t error_function_levels = 0; // 0 = floor(log2 K) - 2
    ErrorInterpolation interpolation = ErrorInterpolation::floor_based;
};

struct NoiseConfig {
    std::optional<double> variance; // unset = estimate via line narrowing
    double floor = 1e-12;
};

struct PriorStageConfig {
    double prominence = 0.10;            // valley depth for splitting, fraction of max
    double perceivable_area_fraction = 0.33; // segments below this fraction of the
                                             // largest segment area carry no prior line
    std::size_t min_segment_width = 3;
    double background_level_guess = 0.0; // p_hat; 0 = J - 1
    double background_min = 0.0; // 0 = J - 2: the artefact lives in the coarsest bands
    double background_max = 0.0; // 0 = J
    double fallback_log_width_variance = 0.25;
    double merge_distance_factor = 1.0; // segments closer than factor * exp(mu_log_gamma) merge
    std::vector<double> segment_boundaries;
};

struct NarrowingStageConfig {
    double gamma_min = 1.0;
    double gamma_max = 35.0;
    std::size_t gamma_count = 33;
    std::size_t max_filter_length = 150;
    std::size_t extrapolation_length = 0; // 0 = measurement point count
    double energy_percentage = 0.5;
    double criterion_percentage = 0.025;
    double criterion_increment = 0.025;
    std::size_t min_intersection = 50;
    double smoothing_fwhm = 0.0; // cm^-1; 0 = 4 channels
    int cwe_order = 8;
    double divisor_floor = 1e-3;
    double lp_seed_floor = 0.1;
    double noise_window_snr = 3.0;
    bool input_is_raman = false;

    NarrowingConfig resolve() const {
        NarrowingConfig cfg;
        cfg.width_grid = NarrowingConfig::linspace(gamma_min, gamma_max, gamma_count);
        cfg.max_filter_length = max_filter_length;
        cfg.extrapolation_length = extrapolation_length;
        cfg.energy_percentage = energy_percentage;
        cfg.criterion_percentage = criterion_percentage;
        cfg.criterion_increment = criterion_increment;
        cfg.min_intersection = min_intersection;
        cfg.smoothing_fwhm = smoothing_fwhm;
        cfg.cwe_order = cwe_order;
        cfg.divisor_floor = divisor_floor;
        cfg.lp_seed_floor = lp_seed_floor;
        cfg.noise_window_snr = noise_window_snr;
        return cfg;
    }
};

struct SyntheticLine {
    double amplitude = 1.0;
    double location = 0.0;
    double sigma = 0.0;
    double gamma = 1.0;
};

struct SyntheticConfig {
    double grid_start = 700.0;
    double grid_step = 0.5;
    std::size_t grid_count = 1024;
    std::vector<SyntheticLine> lines; // empty = bundled 3-line example
    // multiplicative artefact: a random smooth signal synthesized in the
    // stated wavelet detail levels (representable by the eps_m model), or a
    // log-space polynomial in u = [-1, 1] when coefficients are given
    std::string modulation_mode = "wavelet_band"; // or "polynomial"
    std::vector<std::size_t> modulation_levels = {7, 8};
    double modulation_amplitude = 0.12; // max |log eps| of the seed artefact
    std::vector<double> log_modulation_coeffs = {0.0, 0.10, -0.08};
    double background_level = 0.0; // p*; 0 = midpoint of the modulation levels
    double nr_level = 1.0;
    double noise_sd = 0.01;
};

struct PipelineConfig {
    int schema_version = 1;
    std::uint64_t seed = 0;
    std::size_t threads = 1;
    SmcConfig smc;
    ModelConfig model;
    NoiseConfig noise;
    NarrowingStageConfig narrowing;
    PriorStageConfig priors;
    SyntheticConfig synthetic;
};

namespace config_detail {

using nlohmann::json;

inline void require_object(const json& j, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + ": expected an object");
}

template <class T>
void take(json& j, const char* key, T& out) {
    auto it = j.find(key);
    if (it == j.end()) return;
    try {
        out = it->get<T>();
    } catch (const std::exception&) {
        throw ConfigError(std::string("config key '") + key + "': wrong type");
    }
    j.erase(it);
}

inline void take_optional(json& j, const char* key, std::optional<double>& out) {
    auto it = j.find(key);
    if (it == j.end()) return;
    if (it->is_null())
        out.reset();
    else if (it->is_number())
        out = it->get<double>();
    else
        throw ConfigError(std::string("config key '") + key + "': expected number or null");
    j.erase(it);
}

inline void reject_unknown(const json& j, const std::string& where) {
    if (!j.empty()) {
        std::string keys;
        for (auto it = j.begin(); it != j.end(); ++it) {
            if (!keys.empty()) keys += ", ";
            keys += it.key();
        }
        throw ConfigError("unknown config key(s) in " + where + ": " + keys);
    }
}

} // namespace config_detail

inline PipelineConfig parse_config(const nlohmann::json& root) {
    using config_detail::reject_unknown;
    using config_detail::take;
    using config_detail::take_optional;
    config_detail::require_object(root, "config");

    PipelineConfig cfg;
    nlohmann::json j = root;
    take(j, "schema_version", cfg.schema_version);
    if (cfg.schema_version != 1)
        throw ConfigError("unsupported schema_version " + std::to_string(cfg.schema_version));
    take(j, "seed", cfg.seed);
    take(j, "threads", cfg.threads);

    if (j.contains("smc")) {
        nlohmann::json s = j["smc"];
        config_detail::require_object(s, "smc");
        take(s, "particles", cfg.smc.particles);
        take(s, "resample_threshold", cfg.smc.resample_threshold);
        take(s, "learning_rate", cfg.smc.learning_rate);
        take(s, "mcmc_moves", cfg.smc.mcmc_moves);
        take(s, "target_acceptance", cfg.smc.target_acceptance);
        take(s, "proposal_init_factor", cfg.smc.proposal_init_factor);
        reject_unknown(s, "smc");
        j.erase("smc");
    }
    if (j.contains("model")) {
        nlohmann::json s = j["model"];
        config_detail::require_object(s, "model");
        take_optional(s, "nr_level", cfg.model.nr_level);
        take(s, "edge_mask_channels", cfg.model.edge_mask_channels);
        take(s, "error_function_order", cfg.model.error_function_order);
        take(s, "error_function_levels", cfg.model.error_function_levels);
        std::string interp = "floor";
        take(s, "error_function_interpolation", interp);
        if (interp == "floor")
            cfg.model.interpolation = ErrorInterpolation::floor_based;
        else if (interp == "ceil")
            cfg.model.interpolation = ErrorInterpolation::ceil_based;
        else
            throw ConfigError("model.error_function_interpolation: expected \"floor\" or \"ceil\"");
        reject_unknown(s, "model");
        j.erase("model");
    }
    if (j.contains("noise")) {
        nlohmann::json s = j["noise"];
        config_detail::require_object(s, "noise");
        take_optional(s, "variance", cfg.noise.variance);
        take(s, "floor", cfg.noise.floor);
        reject_unknown(s, "noise");
        j.erase("noise");
    }
    if (j.contains("narrowing")) {
        nlohmann::json s = j["narrowing"];
        config_detail::require_object(s, "narrowing");
        take(s, "gamma_min", cfg.narrowing.gamma_min);
        take(s, "gamma_max", cfg.narrowing.gamma_max);
        take(s, "gamma_count", cfg.narrowing.gamma_count);
        take(s, "max_filter_length", cfg.narrowing.max_filter_length);
        take(s, "extrapolation_length", cfg.narrowing.extrapolation_length);
        take(s, "energy_percentage", cfg.narrowing.energy_percentage);
        take(s, "criterion_percentage", cfg.narrowing.criterion_percentage);
        take(s, "criterion_increment", cfg.narrowing.criterion_increment);
        take(s, "min_intersection", cfg.narrowing.min_intersection);
        take(s, "smoothing_fwhm", cfg.narrowing.smoothing_fwhm);
        take(s, "cwe_order", cfg.narrowing.cwe_order);
        take(s, "divisor_floor", cfg.narrowing.divisor_floor);
        take(s, "lp_seed_floor", cfg.narrowing.lp_seed_floor);
        take(s, "noise_window_snr", cfg.narrowing.noise_window_snr);
        take(s, "input_is_raman", cfg.narrowing.input_is_raman);
        reject_unknown(s, "narrowing");
        j.erase("narrowing");
    }
    if (j.contains("priors")) {
        nlohmann::json s = j["priors"];
        config_detail::require_object(s, "priors");
        take(s, "prominence", cfg.priors.prominence);
        take(s, "perceivable_area_fraction", cfg.priors.perceivable_area_fraction);
        take(s, "min_segment_width", cfg.priors.min_segment_width);
        take(s, "background_level_guess", cfg.priors.background_level_guess);
        take(s, "background_min", cfg.priors.background_min);
        take(s, "background_max", cfg.priors.background_max);
        take(s, "fallback_log_width_variance", cfg.priors.fallback_log_width_variance);
        take(s, "merge_distance_factor", cfg.priors.merge_distance_factor);
        take(s, "segment_boundaries", cfg.priors.segment_boundaries);
        reject_unknown(s, "priors");
        j.erase("priors");
    }
    if (j.contains("synthetic")) {
        nlohmann::json s = j["synthetic"];
        config_detail::require_object(s, "synthetic");
        take(s, "grid_start", cfg.synthetic.grid_start);
        take(s, "grid_step", cfg.synthetic.grid_step);
        take(s, "grid_count", cfg.synthetic.grid_count);
        take(s, "nr_level", cfg.synthetic.nr_level);
        take(s, "noise_sd", cfg.synthetic.noise_sd);
        take(s, "modulation_mode", cfg.synthetic.modulation_mode);
        take(s, "modulation_levels", cfg.synthetic.modulation_levels);
        take(s, "modulation_amplitude", cfg.synthetic.modulation_amplitude);
        take(s, "background_level", cfg.synthetic.background_level);
        take(s, "log_modulation_coeffs", cfg.synthetic.log_modulation_coeffs);
        if (cfg.synthetic.modulation_mode != "wavelet_band" &&
            cfg.synthetic.modulation_mode != "polynomial")
            throw ConfigError("synthetic.modulation_mode: expected \"wavelet_band\" or \"polynomial\"");
        if (s.contains("lines")) {
            if (!s["lines"].is_array()) throw ConfigError("synthetic.lines: expected array");
            for (nlohmann::json l : s["lines"]) {
                config_detail::require_object(l, "synthetic.lines[]");
                SyntheticLine line;
                take(l, "amplitude", line.amplitude);
                take(l, "location", line.location);
                take(l, "sigma", line.sigma);
                take(l, "gamma", line.gamma);
                reject_unknown(l, "synthetic.lines[]");
                cfg.synthetic.lines.push_back(line);
            }
            s.erase("lines");
        }
        reject_unknown(s, "synthetic");
        j.erase("synthetic");
    }
    reject_unknown(j, "config");
    return cfg;
}

inline PipelineConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw ConfigError("config parse error in " + path + ": " + e.what());
    }
    return parse_config(j);
}

/// PriorSpec round-trips through JSON so priors can be inspected and edited
/// between pipeline stages.
inline nlohmann::json prior_spec_to_json(const PriorSpec& spec, double noise_variance,
                                         double nr_level) {
    nlohmann::json j;
    j["schema_version"] = 1;
    j["locations"] = nlohmann::json::array();
    for (std::size_t i = 0; i < spec.line_count(); ++i) {
        j["locations"].push_back(
            {{"mean", spec.locations[i].mean}, {"variance", spec.locations[i].variance}});
    }
    j["amplitude_means"] = spec.amplitude_means;
    j["log_gamma"] = {{"mean", spec.log_gamma.mean}, {"variance", spec.log_gamma.variance}};
    j["log_sigma"] = {{"mean", spec.log_sigma.mean}, {"variance", spec.log_sigma.variance}};
    j["background"] = {{"min", spec.background_min}, {"max", spec.background_max}};
    j["width_fallback_used"] = spec.width_fallback_used;
    j["noise_variance"] = noise_variance;
    j["nr_level"] = nr_level;
    return j;
}

struct LoadedPriors {
    PriorSpec spec;
    double noise_variance = 0.0;
    double nr_level = 0.0;
};

inline LoadedPriors prior_spec_from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("schema_version") || j["schema_version"] != 1)
        throw ConfigError("priors file: missing or unsupported schema_version");
    LoadedPriors out;
    try {
        for (const auto& l : j.at("locations"))
            out.spec.locations.push_back({l.at("mean").get<double>(), l.at("variance").get<double>()});
        out.spec.amplitude_means = j.at("amplitude_means").get<std::vector<double>>();
        out.spec.log_gamma = {j.at("log_gamma").at("mean").get<double>(),
                              j.at("log_gamma").at("variance").get<double>()};
        out.spec.log_sigma = {j.at("log_sigma").at("mean").get<double>(),
                              j.at("log_sigma").at("variance").get<double>()};
        out.spec.background_min = j.at("background").at("min").get<double>();
        out.spec.background_max = j.at("background").at("max").get<double>();
        if (j.contains("width_fallback_used"))
            out.spec.width_fallback_used = j["width_fallback_used"].get<bool>();
        out.noise_variance = j.at("noise_variance").get<double>();
        out.nr_level = j.at("nr_level").get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("priors file: ") + e.what());
    }
    out.spec.validate();
    return out;
}

} // namespace carsinfer
