#include "optomvm/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <thread>

#include "optomvm/errors.hpp"
#include "optomvm/matrix.hpp"

namespace optomvm {

namespace {
constexpr std::uint64_t kFabricationTag = 0xFAB;
constexpr std::uint64_t kTrialInputTag = 0x717;
constexpr std::uint64_t kTrialNoiseTag = 0x719;
constexpr std::uint64_t kSweepTag = 0x53E9;
constexpr int kHistogramBins = 61;
} // namespace

std::pair<double, double> fit_gaussian(std::span<const double> samples) {
    if (samples.size() < 2) throw domain_error("fit_gaussian: need at least 2 samples");
    double mean = 0.0;
    for (double x : samples) mean += x;
    mean /= static_cast<double>(samples.size());
    double ss = 0.0;
    for (double x : samples) ss += (x - mean) * (x - mean);
    const double stddev = std::sqrt(ss / static_cast<double>(samples.size() - 1));
    return {mean, stddev};
}

double sample_skewness(std::span<const double> samples) {
    const auto [mean, stddev] = fit_gaussian(samples);
    if (stddev == 0.0) return 0.0;
    double m3 = 0.0;
    for (double x : samples) {
        const double d = (x - mean) / stddev;
        m3 += d * d * d;
    }
    return m3 / static_cast<double>(samples.size());
}

double sample_excess_kurtosis(std::span<const double> samples) {
    const auto [mean, stddev] = fit_gaussian(samples);
    if (stddev == 0.0) return 0.0;
    double m4 = 0.0;
    for (double x : samples) {
        const double d = (x - mean) / stddev;
        m4 += d * d * d * d;
    }
    return m4 / static_cast<double>(samples.size()) - 3.0;
}

namespace {

void fill_histogram(ErrorReport& report) {
    const double half_width = std::max(5.0 * report.stddev, 1e-15);
    const double lo = report.mean - half_width;
    const double hi = report.mean + half_width;
    report.bin_edges.resize(kHistogramBins + 1);
    for (int b = 0; b <= kHistogramBins; ++b)
        report.bin_edges[b] = lo + (hi - lo) * b / kHistogramBins;
    report.counts.assign(kHistogramBins, 0);
    for (double x : report.samples) {
        int bin = static_cast<int>((x - lo) / (hi - lo) * kHistogramBins);
        bin = std::clamp(bin, 0, kHistogramBins - 1);   // outliers into edge bins
        ++report.counts[bin];
    }
}

} // namespace

ErrorReport run_error_trials(const MvmEngine& engine, int trials, std::uint64_t seed,
                             int jobs) {
    if (trials < 1) throw domain_error("run_error_trials: trials must be >= 1");
    const int n = engine.array().n();
    ErrorReport report;
    report.seed = seed;
    report.samples.assign(static_cast<std::size_t>(trials) * n, 0.0);

    auto run_trial = [&](MvmEngine& eng, int t) {
        RngStream input(derive_seed(seed, kTrialInputTag, static_cast<std::uint64_t>(t)));
        Mat w(n, n);
        for (double& x : w.a) x = input.uniform(-1.0, 1.0);
        Vec v(n);
        for (double& x : v) x = input.uniform(-1.0, 1.0);
        RngStream noise(derive_seed(seed, kTrialNoiseTag, static_cast<std::uint64_t>(t)));
        const Vec analog = eng.mvm(w, v, &noise).output;
        const Vec oracle = MvmEngine::mvm_oracle(w, v);
        for (int j = 0; j < n; ++j)
            report.samples[static_cast<std::size_t>(t) * n + j] = analog[j] - oracle[j];
    };

    const int nthreads = std::min(std::max(1, jobs), trials);
    if (nthreads <= 1) {
        MvmEngine local = engine;
        for (int t = 0; t < trials; ++t) run_trial(local, t);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(nthreads);
        for (int w = 0; w < nthreads; ++w) {
            pool.emplace_back([&, w]() {
                MvmEngine local = engine;
                for (int t = w; t < trials; t += nthreads) run_trial(local, t);
            });
        }
        for (auto& th : pool) th.join();
    }

    std::tie(report.mean, report.stddev) = fit_gaussian(report.samples);
    fill_histogram(report);
    return report;
}

ErrorReport run_error_experiment(const RunConfig& cfg, int trials, std::uint64_t seed,
                                 int jobs) {
    MvmEngine engine(cfg.to_array_config(), derive_seed(seed, kFabricationTag), cfg.mode);
    engine.calibrate(cfg.cal_repeats);
    ErrorReport report = run_error_trials(engine, trials, seed, jobs);
    report.config_digest = config_digest(cfg);
    return report;
}

std::string axis_name(SweepAxis axis) {
    switch (axis) {
        case SweepAxis::variation: return "variation";
        case SweepAxis::adc_bits: return "adc_bits";
        case SweepAxis::power: return "power";
    }
    throw domain_error("axis_name: unknown axis");
}

std::vector<SweepPoint> sweep(const RunConfig& cfg, SweepAxis axis,
                              const std::vector<double>& values, int trials,
                              std::uint64_t seed, int jobs) {
    if (values.empty()) throw domain_error("sweep: values must be nonempty");
    for (std::size_t i = 1; i < values.size(); ++i)
        if (!(values[i] > values[i - 1]))
            throw domain_error("sweep: values must be strictly ascending");

    std::vector<SweepPoint> points;
    points.reserve(values.size());

    if (axis == SweepAxis::power) {
        // One calibration at reference power; operating power is an
        // attenuation of the same physical setup, so the row units rescale
        // exactly instead of being re-measured in the noise floor.
        for (double v : values)
            if (!(v > 0.0)) throw domain_error("sweep: power values must be positive");
        MvmEngine engine(cfg.to_array_config(), derive_seed(seed, kFabricationTag), cfg.mode);
        engine.calibrate(cfg.cal_repeats);
        for (std::size_t i = 0; i < values.size(); ++i) {
            MvmEngine at_power = engine;
            at_power.set_power_scale(values[i]);
            const std::uint64_t point_seed = derive_seed(seed, kSweepTag, i);
            ErrorReport report = run_error_trials(at_power, trials, point_seed, jobs);
            report.config_digest = config_digest(cfg);
            points.push_back({values[i], std::move(report)});
        }
        return points;
    }

    for (std::size_t i = 0; i < values.size(); ++i) {
        RunConfig point_cfg = cfg;
        switch (axis) {
            case SweepAxis::variation:
                if (!(values[i] >= 0.0 && values[i] < 1.0))
                    throw domain_error("sweep: variation values must be in [0,1)");
                point_cfg.variation_p = values[i];
                break;
            case SweepAxis::adc_bits: {
                const int bits = static_cast<int>(values[i]);
                if (bits < 1 || bits > 24 || values[i] != bits)
                    throw domain_error("sweep: adc_bits values must be integers in [1,24]");
                point_cfg.adc_bits = bits;
                point_cfg.adc_ideal = false;
                break;
            }
            default: break;
        }
        const std::uint64_t point_seed = derive_seed(seed, kSweepTag, i);
        points.push_back({values[i], run_error_experiment(point_cfg, trials, point_seed, jobs)});
    }
    return points;
}

void write_sweep_csv(const std::filesystem::path& path, SweepAxis axis,
                     std::span<const SweepPoint> points, int trials) {
    std::ofstream out(path);
    if (!out) throw format_error("write_sweep_csv: cannot open " + path.string());
    out << "axis,value,mean,std,trials,seed\n";
    for (const SweepPoint& p : points) {
        out << axis_name(axis) << "," << format_double(p.value) << ","
            << format_double(p.report.mean) << "," << format_double(p.report.stddev) << ","
            << trials << "," << p.report.seed << "\n";
    }
}

void write_histogram_csv(const std::filesystem::path& path, const ErrorReport& report) {
    std::ofstream out(path);
    if (!out) throw format_error("write_histogram_csv: cannot open " + path.string());
    out << "bin_lo,bin_hi,count\n";
    for (std::size_t b = 0; b < report.counts.size(); ++b) {
        out << format_double(report.bin_edges[b]) << "," << format_double(report.bin_edges[b + 1])
            << "," << report.counts[b] << "\n";
    }
}

} // namespace optomvm
