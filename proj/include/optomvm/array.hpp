#pragma once

#include <cstdint>
#include <vector>

#include "optomvm/device.hpp"
#include "optomvm/rng.hpp"

namespace optomvm {

/// Physical build parameters for one SLM/detector array.
struct ArrayConfig {
    int n = 8;
    ResponseCurve slm_nominal{0.5, 0.0, 0.25, CurveKind::transmission};
    ResponseCurve pd_nominal{-0.5, 0.0, 0.8, CurveKind::responsivity};
    VariationSpec variation;
    QuantizerSpec quant;
    NoiseSpec noise;
    double p0 = 1.0;   // input power per pixel, W
};

/// One row-summed exposure: values[j] is row j's readout in amperes.
struct RowReadout {
    std::vector<double> values;
    long long pass_id = 0;
};

/// How a readout is acquired. Runtime readouts pass through the noise-and-ADC
/// pipeline; bench readouts skip the ADC (calibration-grade acquisition) but
/// keep physical noise.
enum class ReadMode { runtime, bench };

/// N x N SLM plane plus N x N detector plane. Per-unit response curves are
/// drawn once at construction (fabrication is immutable); gate codes and the
/// ADC range are the mutable state. Requires exclusive access for the
/// set-codes/expose sequence.
class ArrayInstance {
public:
    ArrayInstance(const ArrayConfig& config, std::uint64_t seed);

    int n() const { return cfg_.n; }
    const ArrayConfig& config() const { return cfg_; }
    std::uint64_t seed() const { return seed_; }

    /// Integer DAC codes for both planes, row-major n*n. Finite-DAC mode only.
    void set_codes(const std::vector<int>& slm_codes, const std::vector<int>& pd_codes);
    /// Continuous gate levels u in [0,1], row-major n*n. Ideal-DAC mode only.
    void set_levels(const std::vector<double>& slm_u, const std::vector<double>& pd_u);

    void set_pair_code(int j, int i, int slm_code, int pd_code);
    void set_pair_level(int j, int i, double slm_u, double pd_u);

    /// One exposure: all rows summed, one fresh noise draw per row.
    /// `noise_rng` overrides the instance stream when given.
    RowReadout expose_and_read(ReadMode mode = ReadMode::runtime, RngStream* noise_rng = nullptr);

    /// Single-row acquisition for pair-by-pair calibration sweeps.
    double expose_and_read_row(int j, ReadMode mode = ReadMode::bench,
                               RngStream* noise_rng = nullptr);

    const ResponseCurve& slm_curve(int j, int i) const { return slm_curves_[idx(j, i)]; }
    const ResponseCurve& pd_curve(int j, int i) const { return pd_curves_[idx(j, i)]; }
    int slm_code(int j, int i) const { return slm_codes_[idx(j, i)]; }
    int pd_code(int j, int i) const { return pd_codes_[idx(j, i)]; }

    const QuantizerSpec& quantizer() const { return cfg_.quant; }
    void set_adc_full_scale(double amps) { cfg_.quant.adc_full_scale = amps; }
    double p0() const { return cfg_.p0; }
    /// Operating input power; an exposure-time knob, not part of fabrication.
    void set_p0(double watts);

    EvalDiag& diag() { return diag_; }
    long long pass_count() const { return pass_count_; }

private:
    std::size_t idx(int j, int i) const { return static_cast<std::size_t>(j) * cfg_.n + i; }
    double row_current(int j);
    double realize(int code) const;

    ArrayConfig cfg_;
    std::uint64_t seed_;
    std::vector<ResponseCurve> slm_curves_, pd_curves_;   // post-variation, frozen
    std::vector<int> slm_codes_, pd_codes_;               // -1 in ideal-DAC mode
    std::vector<double> slm_u_, pd_u_;                    // realized gate levels
    RngStream noise_rng_;
    EvalDiag diag_;
    long long pass_count_ = 0;
};

} // namespace optomvm
