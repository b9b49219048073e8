#pragma once

#include <cstdint>
#include <filesystem>
#include <utility>
#include <vector>

#include "optomvm/array.hpp"

namespace optomvm {

/// Number of gate levels swept per device when the DAC is ideal; finite DACs
/// sweep their own 2^bits code set.
inline constexpr int kIdealSweepLevels = 4097;

/// Reference codes used while sweeping the other device of a pair. The
/// reconstruction is reference-independent (separability of I = P0*T*R);
/// mid_range exists to verify exactly that.
enum class RefChoice { nominal_max, mid_range };

/// Per-pair tuning tables from the two 1-D gate sweeps, plus the corner
/// readouts that pin the pair's product swing.
struct PairTable {
    std::vector<double> slm_lut;   // readout (A) sweeping SLM code, detector at reference
    std::vector<double> pd_lut;    // readout (A) sweeping detector code, SLM at reference
    double i00 = 0.0;              // readout at (slm_lo, pd_lo)
    double corner_hh = 0.0;        // readout at (slm_hi, pd_hi)
    double corner_hl = 0.0;        // readout at (slm_hi, pd_lo)
    double corner_lh = 0.0;        // readout at (slm_lo, pd_hi)
    int slm_lo = 0, slm_hi = 0;    // codes of min/max effective transmission
    int pd_lo = 0, pd_hi = 0;      // codes of min/max effective responsivity
    double t_range = 0.0;          // achievable swing along the SLM sweep (A)
    double r_range = 0.0;          // achievable swing along the detector sweep (A)
    double gain = 0.0;             // P0 * dT * dR from the four corners (A)
    double pd_swing_scale = 1.0;   // u_row / gain, in (0, 1]

    // Normalized effective positions per code, 0 at *_lo and 1 at *_hi.
    std::vector<double> tpos, rpos;
    // Codes ordered by ascending position (ties by code) for nearest lookup.
    std::vector<int> t_order, r_order;
};

/// Calibration of one row: per-pair tables, gains, and the row unit
/// u_row = min_i gain_i by which row readouts divide into algebraic values.
struct RowCalibration {
    int row = 0;
    std::vector<PairTable> pairs;
    double unit = 0.0;   // amperes
};

/// Whole-array calibration plus the cached all-baseline readout per row and
/// the measured maximum achievable row sum (ADC ranging).
struct ArrayCalibration {
    int version = 1;
    int n = 0;
    int levels = 0;        // LUT length (DAC level count or ideal sweep grid)
    bool dac_ideal = false;
    std::vector<RowCalibration> rows;
    std::vector<double> s00;       // per-row readout with every pair at baseline codes
    double max_row_sum = 0.0;      // largest row readout with every pair at max codes

    double grid_u(int code) const {
        return static_cast<double>(code) / static_cast<double>(levels - 1);
    }
};

struct GateSetting {
    int code;        // -1 when the DAC is ideal (continuous level)
    double u;        // realized gate level
};

RowCalibration calibrate_row(ArrayInstance& array, int row, int repeats,
                             RefChoice ref = RefChoice::nominal_max);

ArrayCalibration calibrate_array(ArrayInstance& array, int repeats,
                                 RefChoice ref = RefChoice::nominal_max);

/// Calibration-shaped tables computed from the nominal design curves alone,
/// identical for every pair. This is the uncorrected control: it ignores
/// fabrication variation entirely.
ArrayCalibration nominal_calibration(const ArrayConfig& config);

/// Rescales every ampere-valued field by `factor`. Readouts are linear in
/// input power, so a calibration taken at reference power maps exactly onto
/// an attenuated operating power; the normalized positions are ratios and
/// do not change.
ArrayCalibration scale_calibration_power(const ArrayCalibration& cal, double factor);

/// Code realizing effective transmission position v in [0,1] on pair i.
GateSetting encode_slm(const ArrayCalibration& cal, int row, int i, double v);
/// Code realizing effective responsivity position w * pd_swing_scale on pair i.
GateSetting encode_pd(const ArrayCalibration& cal, int row, int i, double w);
/// Both codes for the (v, w) target of pair i.
std::pair<GateSetting, GateSetting> encode_pair(const ArrayCalibration& cal, int row, int i,
                                                double v, double w);

GateSetting baseline_slm(const ArrayCalibration& cal, int row, int i);
GateSetting baseline_pd(const ArrayCalibration& cal, int row, int i);

/// (s_vw - s_v0 - s_0w + s_00) / u_row. The cross terms of the per-pair
/// affine encodings cancel, leaving sum_i v_i * w_i exactly in the
/// noiseless, unquantized limit.
double decode_row(double s_vw, double s_v0, double s_0w, double s_00,
                  const RowCalibration& cal);

// Versioned structured-text serialization for reuse across runs.
void save_calibration(const std::filesystem::path& path, const ArrayCalibration& cal);
ArrayCalibration load_calibration(const std::filesystem::path& path);

} // namespace optomvm
