#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "optomvm/config.hpp"

namespace optomvm {

/// Monte Carlo error samples (analog minus oracle, per output element) with
/// their Gaussian-fit moments and histogram.
struct ErrorReport {
    std::vector<double> samples;
    double mean = 0.0;
    double stddev = 0.0;
    std::vector<double> bin_edges;    // counts.size() + 1 edges
    std::vector<long long> counts;
    std::uint64_t seed = 0;
    std::string config_digest;
};

/// Sample mean and unbiased sample standard deviation.
std::pair<double, double> fit_gaussian(std::span<const double> samples);

double sample_skewness(std::span<const double> samples);
double sample_excess_kurtosis(std::span<const double> samples);

/// Per trial: W and v i.i.d. uniform on [-1,1], analog and oracle outputs
/// compared elementwise. Fabrication, inputs, and noise use disjoint
/// substreams of `seed`, trial-indexed, so results are independent of
/// execution order and job count.
ErrorReport run_error_experiment(const RunConfig& cfg, int trials, std::uint64_t seed,
                                 int jobs = 1);

/// Trial loop on an already-prepared engine (the power axis reuses one
/// calibration across operating powers).
ErrorReport run_error_trials(const MvmEngine& engine, int trials, std::uint64_t seed,
                             int jobs = 1);

enum class SweepAxis { variation, adc_bits, power };

std::string axis_name(SweepAxis axis);

struct SweepPoint {
    double value = 0.0;
    ErrorReport report;
};

/// One error experiment per axis value with derived seeds. Values must be
/// ascending. The power axis scales the config's p0 by each value.
std::vector<SweepPoint> sweep(const RunConfig& cfg, SweepAxis axis,
                              const std::vector<double>& values, int trials,
                              std::uint64_t seed, int jobs = 1);

// CSV emission; files are byte-reproducible under fixed (config, seed).
void write_sweep_csv(const std::filesystem::path& path, SweepAxis axis,
                     std::span<const SweepPoint> points, int trials);
void write_histogram_csv(const std::filesystem::path& path, const ErrorReport& report);

} // namespace optomvm
