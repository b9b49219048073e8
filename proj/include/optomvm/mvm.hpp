#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "optomvm/array.hpp"
#include "optomvm/calibration.hpp"
#include "optomvm/matrix.hpp"

namespace optomvm {

/// Max-split signed decomposition: plus = max(x,0), minus = max(-x,0),
/// elementwise plus*minus = 0. scale restores original magnitudes:
/// (plus - minus) * scale reconstructs the input.
struct SignedVec {
    Vec plus, minus;
    double scale = 1.0;
};

struct SignedMat {
    Mat plus, minus;
    double scale = 1.0;
};

std::pair<Vec, Vec> split_signed(const Vec& x);
std::pair<Mat, Mat> split_signed(const Mat& x);

/// Max-abs normalization folded into the split: plus/minus lie in [0,1].
SignedVec signed_decompose(const Vec& x);
SignedMat signed_decompose(const Mat& x);

struct Normalized {
    Mat w;
    Vec v;
    double scale_w = 1.0;
    double scale_v = 1.0;
};

/// Maps W and v into the [-1,1] box by their max-abs values (1 if zero).
Normalized normalize(const Mat& w, const Vec& v);

struct MvmResult {
    Vec output;
    long long passes_used = 0;
    long long clamp_events = 0;          // curve clamps during this call
    std::vector<double> row_units;       // amperes, per row
};

/// calibrated: encode/decode through measured per-pair tables.
/// naive: encode through the nominal design curve and decode by the nominal
/// gain, ignoring fabrication variation (the uncorrected control).
enum class EngineMode { calibrated, naive };

/// Owns one ArrayInstance and turns it into a real-valued MVM: normalize,
/// split signs, run the four nonnegative quadrant multiplies, decode rows,
/// recombine and rescale. mvm calls on one engine are serialized; clone the
/// engine for concurrent use.
class MvmEngine {
public:
    MvmEngine(const ArrayConfig& config, std::uint64_t seed,
              EngineMode mode = EngineMode::calibrated);

    /// Runs the pairwise sweep procedure on every row, caches the
    /// all-baseline readout, and ranges the ADC full scale when the config
    /// left it unset. Naive mode builds nominal tables without measurements.
    void calibrate(int repeats = 16, RefChoice ref = RefChoice::nominal_max);

    /// Adopts a previously saved calibration instead of measuring one.
    void adopt_calibration(const ArrayCalibration& cal);

    /// Runs at `scale` times the calibration-time input power. The row units
    /// and cached baselines rescale exactly (readouts are linear in power);
    /// encode tables are power-independent ratios.
    void set_power_scale(double scale);
    double power_scale() const { return power_scale_; }

    bool calibrated() const { return calibrated_; }
    EngineMode mode() const { return mode_; }
    const ArrayCalibration& calibration() const;
    ArrayInstance& array() { return array_; }
    const ArrayInstance& array() const { return array_; }

    /// Analog W*v. Noise draws come from `noise_rng` when given (per-trial /
    /// per-tile streams), otherwise from the instance stream.
    MvmResult mvm(const Mat& w, const Vec& v, RngStream* noise_rng = nullptr);

    /// Exact floating-point reference path.
    static Vec mvm_oracle(const Mat& w, const Vec& v);

    /// Base seed for the per-tile noise streams of one gemm call. Advances
    /// once per call so consecutive gemms on one engine differ while a rerun
    /// of the same process reproduces them.
    std::uint64_t next_gemm_noise_base();

private:
    GateSetting encode_v(int row, int i, double value) const;
    GateSetting encode_w(int row, int i, double value) const;
    GateSetting base_v(int row, int i) const;
    GateSetting base_w(int row, int i) const;
    void apply_settings(const std::vector<GateSetting>& slm,
                        const std::vector<GateSetting>& pd);

    ArrayConfig cfg_;
    ArrayInstance array_;
    EngineMode mode_;
    ArrayCalibration cal_;        // at the current operating power
    ArrayCalibration cal_base_;   // as measured at calibration power
    double power_scale_ = 1.0;
    bool calibrated_ = false;
    std::uint64_t mvm_counter_ = 0;
    std::uint64_t gemm_epoch_ = 0;
};

} // namespace optomvm
