#include "optomvm/device.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "optomvm/errors.hpp"

namespace optomvm {

double eval_curve(const ResponseCurve& curve, double u, EvalDiag* diag) {
    if (!(u >= 0.0 && u <= 1.0))
        throw domain_error("eval_curve: gate code " + std::to_string(u) + " outside [0,1]");
    double value = curve.raw(u);
    const double lo = 0.0;
    const double hi = curve.kind == CurveKind::transmission
                          ? 1.0
                          : std::numeric_limits<double>::infinity();
    if (value < lo || value > hi) {
        if (diag) ++diag->clamp_events;
        value = std::clamp(value, lo, hi);
    }
    return value;
}

std::pair<ResponseCurve, double> fit_quadratic(std::span<const std::pair<double, double>> samples,
                                               CurveKind kind) {
    std::set<double> distinct;
    for (const auto& [u, _] : samples) distinct.insert(u);
    if (distinct.size() < 3)
        throw domain_error("fit_quadratic: need >= 3 distinct abscissae, got " +
                           std::to_string(distinct.size()));

    // Normal equations for [c2, c1, c0] on the monomial basis.
    double s[5] = {0, 0, 0, 0, 0};   // sums of u^0..u^4
    double t[3] = {0, 0, 0};         // sums of y*u^0..y*u^2
    for (const auto& [u, y] : samples) {
        double up = 1.0;
        for (int k = 0; k <= 4; ++k) {
            s[k] += up;
            if (k <= 2) t[k] += y * up;
            up *= u;
        }
    }
    double m[3][4] = {{s[4], s[3], s[2], t[2]},
                      {s[3], s[2], s[1], t[1]},
                      {s[2], s[1], s[0], t[0]}};
    // Gaussian elimination with partial pivoting.
    for (int col = 0; col < 3; ++col) {
        int pivot = col;
        for (int r = col + 1; r < 3; ++r)
            if (std::fabs(m[r][col]) > std::fabs(m[pivot][col])) pivot = r;
        if (std::fabs(m[pivot][col]) < 1e-300)
            throw domain_error("fit_quadratic: singular normal equations");
        std::swap(m[col], m[pivot]);
        for (int r = 0; r < 3; ++r) {
            if (r == col) continue;
            const double f = m[r][col] / m[col][col];
            for (int cc = col; cc < 4; ++cc) m[r][cc] -= f * m[col][cc];
        }
    }
    ResponseCurve curve;
    curve.c2 = m[0][3] / m[0][0];
    curve.c1 = m[1][3] / m[1][1];
    curve.c0 = m[2][3] / m[2][2];
    curve.kind = kind;

    double sse = 0.0;
    for (const auto& [u, y] : samples) {
        const double r = y - curve.raw(u);
        sse += r * r;
    }
    const double rms = std::sqrt(sse / static_cast<double>(samples.size()));
    return {curve, rms};
}

ResponseCurve apply_variation(const ResponseCurve& curve, const VariationSpec& spec,
                              std::span<const double> xs) {
    if (!(spec.p >= 0.0 && spec.p < 1.0))
        throw domain_error("apply_variation: p must be in [0,1)");
    const std::size_t want = spec.per_coefficient ? 3 : 1;
    if (xs.size() != want)
        throw domain_error("apply_variation: expected " + std::to_string(want) +
                           " draws, got " + std::to_string(xs.size()));
    for (double x : xs)
        if (!(x >= 0.0 && x <= 1.0)) throw domain_error("apply_variation: X outside [0,1]");

    auto factor = [&](double x) { return 1.0 + spec.p / 2.0 - spec.p * x; };
    ResponseCurve out = curve;
    if (spec.per_coefficient) {
        out.c2 *= factor(xs[0]);
        out.c1 *= factor(xs[1]);
        out.c0 *= factor(xs[2]);
    } else {
        const double f = factor(xs[0]);
        out.c2 *= f;
        out.c1 *= f;
        out.c0 *= f;
    }
    return out;
}

int nearest_level(double x, int levels) {
    const double pos = x * static_cast<double>(levels - 1);
    int code = static_cast<int>(std::ceil(pos - 0.5));   // tie -> lower code
    return std::clamp(code, 0, levels - 1);
}

GateQuantization quantize_gate(double u, const QuantizerSpec& q) {
    if (!(u >= 0.0 && u <= 1.0))
        throw domain_error("quantize_gate: target outside [0,1]");
    if (q.dac_ideal) return {-1, u};
    const int code = nearest_level(u, q.dac_levels());
    return {code, static_cast<double>(code) / static_cast<double>(q.dac_levels() - 1)};
}

double read_with_noise_and_adc(double current, const NoiseSpec& noise,
                               const QuantizerSpec& q, RngStream& rng) {
    double x = current;
    if (noise.active()) x += rng.gaussian(0.0, noise.sigma);
    if (q.adc_ideal) {
        // No conversion stage; only the physical non-negativity of the
        // readout applies.
        return x < 0.0 ? 0.0 : x;
    }
    if (!(q.adc_full_scale > 0.0))
        throw state_error("read_with_noise_and_adc: ADC full scale not set");
    x = std::clamp(x, 0.0, q.adc_full_scale);
    const int code = nearest_level(x / q.adc_full_scale, q.adc_levels());
    return static_cast<double>(code) / static_cast<double>(q.adc_levels() - 1) * q.adc_full_scale;
}

double damping_to_mobility(double gamma_ev, double fermi_level_ev) {
    if (!(gamma_ev > 0.0) || !(fermi_level_ev > 0.0))
        throw domain_error("damping_to_mobility: gamma and E_F must be positive");
    using namespace physics;
    const double gamma_j = gamma_ev * kElectronCharge;
    const double fermi_j = fermi_level_ev * kElectronCharge;
    const double mobility_si =
        kElectronCharge * kHbar * kFermiVelocity * kFermiVelocity / (gamma_j * fermi_j);
    return mobility_si * 1e4;   // m^2/(V*s) -> cm^2/(V*s)
}

} // namespace optomvm
