#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>

#include "optomvm/array.hpp"
#include "optomvm/mvm.hpp"

namespace optomvm {

/// Resolved run configuration. Schema-validated on load; unknown keys are
/// rejected. Every CLI run writes the resolved form next to its outputs.
struct RunConfig {
    int n = 8;
    std::uint64_t seed = 1;
    double p0 = 1.0;
    double variation_p = 0.0;
    bool per_coefficient_variation = false;
    int dac_bits = 8;
    bool dac_ideal = false;
    int adc_bits = 10;
    bool adc_ideal = true;
    double adc_full_scale = 0.0;   // <= 0 means "auto": ranged at calibration
    double sigma = 0.0;
    int cal_repeats = 16;
    std::array<double, 3> transmission{0.5, 0.0, 0.25};   // c2, c1, c0
    std::array<double, 3> responsivity{-0.5, 0.0, 0.8};
    EngineMode mode = EngineMode::calibrated;

    ArrayConfig to_array_config() const;
};

RunConfig load_config_file(const std::filesystem::path& path);
RunConfig parse_config_text(const std::string& text, const std::string& origin);

/// `invocation`, when nonempty, is recorded in the file so a run is fully
/// described by its resolved config alone.
std::string resolved_config_text(const RunConfig& cfg, const std::string& invocation = "");
void write_resolved_config(const std::filesystem::path& path, const RunConfig& cfg,
                           const std::string& invocation = "");

/// Stable hex digest of the resolved configuration.
std::string config_digest(const RunConfig& cfg);

/// Builds the engine for a config, calibrated and ADC-ranged.
MvmEngine make_engine(const RunConfig& cfg, std::uint64_t seed_override, bool seed_overridden);

} // namespace optomvm
