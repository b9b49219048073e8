#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "optomvm/rng.hpp"

namespace optomvm {

enum class CurveKind { transmission, responsivity };

/// Counts out-of-range curve evaluations that were clamped back into the
/// kind's valid range. Owned by whoever drives the evaluations.
struct EvalDiag {
    long long clamp_events = 0;
};

/// Quadratic device response over the normalized gate code u in [0,1].
/// Transmission values live in [0,1]; responsivity values are >= 0 (A/W).
struct ResponseCurve {
    double c2 = 0.0;
    double c1 = 0.0;
    double c0 = 0.0;
    CurveKind kind = CurveKind::transmission;

    /// Raw polynomial value, no range handling.
    double raw(double u) const { return (c2 * u + c1) * u + c0; }
};

/// c2*u^2 + c1*u + c0 clamped to the kind's valid range; clamping is
/// recorded in diag when given. Throws domain_error for u outside [0,1].
double eval_curve(const ResponseCurve& curve, double u, EvalDiag* diag = nullptr);

/// Least-squares quadratic through (u, value) samples. Requires at least
/// three distinct abscissae. Returns the curve and the fit residual RMS.
std::pair<ResponseCurve, double> fit_quadratic(std::span<const std::pair<double, double>> samples,
                                               CurveKind kind);

/// Fabrication variation strength. One uniform draw per device unit scales
/// the whole coefficient vector; per_coefficient draws three independent
/// factors instead (off by default).
struct VariationSpec {
    double p = 0.0;   // in [0, 1)
    bool per_coefficient = false;
};

/// Scales coefficients by (1 + p/2 - p*x) for each x in xs. xs has one
/// entry (whole-vector mode) or three (per-coefficient mode, order c2,c1,c0).
ResponseCurve apply_variation(const ResponseCurve& curve, const VariationSpec& spec,
                              std::span<const double> xs);

/// DAC/ADC precision. Ideal flags bypass the respective quantizer; the DAC
/// code set has 2^dac_bits levels uniformly spanning u in [0,1]; the ADC
/// maps [0, adc_full_scale] onto 2^adc_bits levels. full_scale <= 0 means
/// not yet ranged (set after calibration).
struct QuantizerSpec {
    int dac_bits = 8;
    bool dac_ideal = false;
    int adc_bits = 10;
    bool adc_ideal = true;
    double adc_full_scale = 0.0;

    int dac_levels() const { return 1 << dac_bits; }
    int adc_levels() const { return 1 << adc_bits; }
};

/// Additive Gaussian readout noise, amperes. sigma = 0 reproduces the
/// noiseless readout bit-exactly.
struct NoiseSpec {
    double sigma = 0.0;
    bool enabled = true;

    bool active() const { return enabled && sigma > 0.0; }
};

/// Nearest of `levels` uniform grid points over [0,1] for x*(levels-1);
/// exact half-step ties round toward the lower code.
int nearest_level(double x, int levels);

struct GateQuantization {
    int code;
    double u_realized;
};

/// Nearest DAC level for a target code u in [0,1]. With an ideal DAC the
/// target is realized exactly and code is -1.
GateQuantization quantize_gate(double u, const QuantizerSpec& q);

/// Readout pipeline: ADC(clamp(I + N(0, sigma^2), 0, full_scale)).
/// With sigma = 0 and an ideal ADC the input current is returned unchanged.
double read_with_noise_and_adc(double current, const NoiseSpec& noise,
                               const QuantizerSpec& q, RngStream& rng);

namespace physics {
inline constexpr double kElectronCharge = 1.6e-19;   // C
inline constexpr double kHbar = 1.05e-34;            // J*s
inline constexpr double kFermiVelocity = 1e6;        // m/s
} // namespace physics

/// Carrier mobility mu = q*hbar*v_F^2 / (gamma * E_F), inputs in eV,
/// result in cm^2/(V*s).
double damping_to_mobility(double gamma_ev, double fermi_level_ev);

} // namespace optomvm
