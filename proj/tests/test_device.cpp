#include <doctest.h>

#include <array>
#include <cmath>
#include <vector>

#include "optomvm/device.hpp"
#include "optomvm/errors.hpp"

using namespace optomvm;

namespace {
const ResponseCurve kTransmission{0.5, 0.0, 0.25, CurveKind::transmission};
const ResponseCurve kResponsivity{-0.5, 0.0, 0.8, CurveKind::responsivity};
} // namespace

TEST_SUITE("device") {

TEST_CASE("eval_curve default curves") {
    CHECK(eval_curve(kTransmission, 0.0) == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(eval_curve(kTransmission, 1.0) == doctest::Approx(0.75).epsilon(1e-15));
    CHECK(eval_curve(kResponsivity, 1.0) == doctest::Approx(0.3).epsilon(1e-15));
    CHECK_THROWS_AS(eval_curve(kTransmission, -0.01), domain_error);
    CHECK_THROWS_AS(eval_curve(kTransmission, 1.01), domain_error);
    CHECK_THROWS_AS(eval_curve(kTransmission, std::nan("")), domain_error);
}

TEST_CASE("eval_curve clamps out-of-range values and counts them") {
    EvalDiag diag;
    const ResponseCurve hot{0.5, 0.0, 0.9, CurveKind::transmission};   // exceeds 1 at high u
    CHECK(eval_curve(hot, 1.0, &diag) == 1.0);
    CHECK(diag.clamp_events == 1);
    const ResponseCurve cold{-1.0, 0.0, 0.5, CurveKind::responsivity}; // negative at high u
    CHECK(eval_curve(cold, 1.0, &diag) == 0.0);
    CHECK(diag.clamp_events == 2);
    CHECK(eval_curve(hot, 0.0, &diag) == doctest::Approx(0.9));
    CHECK(diag.clamp_events == 2);
}

TEST_CASE("fit_quadratic recovers exact quadratics") {
    std::vector<std::pair<double, double>> pts;
    for (double u : {0.0, 0.5, 1.0}) pts.push_back({u, kTransmission.raw(u)});
    auto [curve, rms] = fit_quadratic(pts, CurveKind::transmission);
    CHECK(std::fabs(curve.c2 - 0.5) < 1e-12);
    CHECK(std::fabs(curve.c1 - 0.0) < 1e-12);
    CHECK(std::fabs(curve.c0 - 0.25) < 1e-12);

    pts.clear();
    for (int i = 0; i <= 100; ++i) {
        const double u = i / 100.0;
        pts.push_back({u, kResponsivity.raw(u)});
    }
    auto [curve2, rms2] = fit_quadratic(pts, CurveKind::responsivity);
    CHECK(rms2 < 1e-12);
    CHECK(std::fabs(curve2.c2 + 0.5) < 1e-10);
}

TEST_CASE("fit_quadratic on perturbed samples agrees with a grid-search minimizer") {
    RngStream rng(2024);
    std::vector<std::pair<double, double>> pts;
    for (int i = 0; i <= 100; ++i) {
        const double u = i / 100.0;
        pts.push_back({u, kTransmission.raw(u) + rng.uniform(-1e-3, 1e-3)});
    }
    auto [fit, rms] = fit_quadratic(pts, CurveKind::transmission);
    CHECK(std::fabs(fit.c2 - 0.5) < 1e-2);
    CHECK(std::fabs(fit.c1 - 0.0) < 1e-2);
    CHECK(std::fabs(fit.c0 - 0.25) < 1e-2);

    // Independent oracle: brute-force grid search around the true
    // coefficients on the same samples.
    auto sse = [&](double c2, double c1, double c0) {
        double acc = 0.0;
        for (const auto& [u, y] : pts) {
            const double r = y - ((c2 * u + c1) * u + c0);
            acc += r * r;
        }
        return acc;
    };
    double best_sse = 1e300;
    std::array<double, 3> best{};
    for (int a = -20; a <= 20; ++a)
        for (int b = -20; b <= 20; ++b)
            for (int c = -20; c <= 20; ++c) {
                const double c2 = 0.5 + a * 1e-3, c1 = b * 1e-3, c0 = 0.25 + c * 1e-3;
                const double s = sse(c2, c1, c0);
                if (s < best_sse) {
                    best_sse = s;
                    best = {c2, c1, c0};
                }
            }
    // Least squares can do no worse than any grid point and must sit within
    // one grid cell of the grid argmin.
    CHECK(sse(fit.c2, fit.c1, fit.c0) <= best_sse + 1e-12);
    CHECK(std::fabs(fit.c2 - best[0]) < 2e-3);
    CHECK(std::fabs(fit.c1 - best[1]) < 2e-3);
    CHECK(std::fabs(fit.c0 - best[2]) < 2e-3);
}

TEST_CASE("fit_quadratic rejects rank-deficient samples") {
    std::vector<std::pair<double, double>> pts = {{0.5, 1.0}, {0.5, 1.1}, {0.5, 0.9}};
    CHECK_THROWS_AS(fit_quadratic(pts, CurveKind::transmission), domain_error);
    pts = {{0.1, 1.0}, {0.9, 1.1}};
    CHECK_THROWS_AS(fit_quadratic(pts, CurveKind::transmission), domain_error);
}

TEST_CASE("apply_variation bounds and midpoint") {
    const VariationSpec spec{0.2, false};
    auto scaled = [&](double x) {
        return apply_variation(kTransmission, spec, std::span<const double>(&x, 1));
    };
    CHECK(scaled(0.0).c2 == doctest::Approx(0.5 * 1.1).epsilon(1e-15));
    CHECK(scaled(0.0).c0 == doctest::Approx(0.25 * 1.1).epsilon(1e-15));
    CHECK(scaled(1.0).c2 == doctest::Approx(0.5 * 0.9).epsilon(1e-15));
    CHECK(scaled(0.5).c2 == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(scaled(0.5).c0 == doctest::Approx(0.25).epsilon(1e-15));
}

TEST_CASE("apply_variation is affine in X and trivial at p=0") {
    RngStream rng(7);
    for (int t = 0; t < 200; ++t) {
        const double x = rng.uniform01();
        const VariationSpec spec{rng.uniform(0.0, 0.99), false};
        const auto a = apply_variation(kResponsivity, spec, std::span<const double>(&x, 1));
        const double x2 = 1.0 - x;
        const auto b = apply_variation(kResponsivity, spec, std::span<const double>(&x2, 1));
        CHECK(0.5 * (a.c2 + b.c2) == doctest::Approx(kResponsivity.c2).epsilon(1e-14));
        CHECK(0.5 * (a.c0 + b.c0) == doctest::Approx(kResponsivity.c0).epsilon(1e-14));

        const VariationSpec none{0.0, false};
        const auto c = apply_variation(kResponsivity, none, std::span<const double>(&x, 1));
        CHECK(c.c2 == kResponsivity.c2);
        CHECK(c.c1 == kResponsivity.c1);
        CHECK(c.c0 == kResponsivity.c0);
    }
}

TEST_CASE("apply_variation per-coefficient mode") {
    const VariationSpec spec{0.2, true};
    const double xs[3] = {0.0, 0.5, 1.0};
    const auto v = apply_variation(kTransmission, spec, xs);
    CHECK(v.c2 == doctest::Approx(0.5 * 1.1));
    CHECK(v.c1 == doctest::Approx(0.0));
    CHECK(v.c0 == doctest::Approx(0.25 * 0.9));
    CHECK_THROWS_AS(apply_variation(kTransmission, spec, std::span<const double>(xs, 1)),
                    domain_error);
}

TEST_CASE("damping_to_mobility matches the physics anchor") {
    const double mu = damping_to_mobility(2e-3, 0.5);
    CHECK(std::fabs(mu - 6562.5) / 6562.5 < 0.01);
    CHECK(damping_to_mobility(4e-3, 0.5) == doctest::Approx(mu / 2).epsilon(1e-12));
    CHECK(damping_to_mobility(2e-3, 0.25) == doctest::Approx(mu * 2).epsilon(1e-12));
    CHECK_THROWS_AS(damping_to_mobility(0.0, 0.5), domain_error);
    CHECK_THROWS_AS(damping_to_mobility(2e-3, -0.5), domain_error);
}

TEST_CASE("quantize_gate nearest level with tie toward lower code") {
    QuantizerSpec q;
    q.dac_bits = 8;
    // u = 0.5 is an exact half-step tie between codes 127 and 128; the tie
    // rule sends it to the lower code.
    auto g = quantize_gate(0.5, q);
    CHECK(g.code == 127);
    CHECK(g.u_realized == doctest::Approx(127.0 / 255.0).epsilon(1e-15));
    CHECK(quantize_gate(0.0, q).code == 0);
    CHECK(quantize_gate(0.0, q).u_realized == 0.0);
    CHECK(quantize_gate(1.0, q).code == 255);
    CHECK(quantize_gate(1.0, q).u_realized == 1.0);
    CHECK_THROWS_AS(quantize_gate(1.5, q), domain_error);
}

TEST_CASE("quantize_gate agrees with an exhaustive level scan") {
    QuantizerSpec q;
    q.dac_bits = 8;
    const int levels = q.dac_levels();
    RngStream rng(11);
    for (int t = 0; t < 2000; ++t) {
        const double u = rng.uniform01();
        const auto g = quantize_gate(u, q);
        // Oracle: scan all codes in code space, ties to the lower code.
        const double pos = u * (levels - 1);
        int best = 0;
        for (int c = 1; c < levels; ++c)
            if (std::fabs(pos - c) < std::fabs(pos - best)) best = c;
        CHECK(g.code == best);
        CHECK(std::fabs(g.u_realized - u) <= 0.5 / (levels - 1) + 1e-15);
    }
}

TEST_CASE("quantize_gate is idempotent on realized levels") {
    QuantizerSpec q;
    q.dac_bits = 6;
    for (int c = 0; c < q.dac_levels(); ++c) {
        const double u = static_cast<double>(c) / (q.dac_levels() - 1);
        const auto g = quantize_gate(u, q);
        CHECK(g.code == c);
        CHECK(g.u_realized == u);
    }
}

TEST_CASE("quantize_gate ideal DAC is exact") {
    QuantizerSpec q;
    q.dac_ideal = true;
    const auto g = quantize_gate(0.123456789, q);
    CHECK(g.code == -1);
    CHECK(g.u_realized == 0.123456789);
}

TEST_CASE("read_with_noise_and_adc identity when disabled") {
    QuantizerSpec q;   // ideal ADC
    NoiseSpec n;       // sigma 0
    RngStream rng(1);
    CHECK(read_with_noise_and_adc(1.0, n, q, rng) == 1.0);
    CHECK(read_with_noise_and_adc(0.37, n, q, rng) == 0.37);
}

TEST_CASE("read_with_noise_and_adc 1-bit tie resolves to the lower level") {
    QuantizerSpec q;
    q.adc_ideal = false;
    q.adc_bits = 1;
    q.adc_full_scale = 2.0;
    NoiseSpec n;
    RngStream rng(1);
    CHECK(read_with_noise_and_adc(1.0, n, q, rng) == 0.0);          // exact tie
    CHECK(read_with_noise_and_adc(1.2, n, q, rng) == 2.0);
    CHECK(read_with_noise_and_adc(0.8, n, q, rng) == 0.0);
    CHECK(read_with_noise_and_adc(5.0, n, q, rng) == 2.0);          // clamped
}

TEST_CASE("read_with_noise_and_adc noise moments") {
    QuantizerSpec q;   // ideal ADC
    NoiseSpec n;
    n.sigma = 0.01;
    RngStream rng(99);
    const int count = 1000000;
    double sum = 0.0, sumsq = 0.0;
    for (int i = 0; i < count; ++i) {
        const double x = read_with_noise_and_adc(0.5, n, q, rng);
        sum += x;
        sumsq += x * x;
    }
    const double mean = sum / count;
    const double stddev = std::sqrt((sumsq - count * mean * mean) / (count - 1));
    CHECK(std::fabs(mean - 0.5) < 3.0 * 0.01 / 1000.0);
    CHECK(std::fabs(stddev - 0.01) / 0.01 < 0.01);
}

TEST_CASE("read_with_noise_and_adc monotone in current") {
    QuantizerSpec q;
    q.adc_ideal = false;
    q.adc_bits = 5;
    q.adc_full_scale = 1.0;
    NoiseSpec n;   // fixed (zero) noise draw
    RngStream rng(1);
    double prev = -1.0;
    for (int i = 0; i <= 500; ++i) {
        const double x = read_with_noise_and_adc(i / 500.0, n, q, rng);
        CHECK(x >= prev);
        prev = x;
    }
}

}
