#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "optomvm/array.hpp"
#include "optomvm/errors.hpp"

using namespace optomvm;

namespace {

ArrayConfig small_config(int n = 8, double p = 0.0) {
    ArrayConfig cfg;
    cfg.n = n;
    cfg.variation.p = p;
    return cfg;
}

std::vector<int> uniform_codes(int n, int code) {
    return std::vector<int>(static_cast<std::size_t>(n) * n, code);
}

} // namespace

TEST_SUITE("array") {

TEST_CASE("zero variation reproduces the nominal curves") {
    ArrayInstance a(small_config(4, 0.0), 123);
    for (int j = 0; j < 4; ++j)
        for (int i = 0; i < 4; ++i) {
            CHECK(a.slm_curve(j, i).c2 == 0.5);
            CHECK(a.slm_curve(j, i).c0 == 0.25);
            CHECK(a.pd_curve(j, i).c2 == -0.5);
            CHECK(a.pd_curve(j, i).c0 == 0.8);
        }
}

TEST_CASE("identical config and seed build bit-identical instances") {
    ArrayInstance a(small_config(8, 0.2), 42);
    ArrayInstance b(small_config(8, 0.2), 42);
    for (int j = 0; j < 8; ++j)
        for (int i = 0; i < 8; ++i) {
            CHECK(a.slm_curve(j, i).c2 == b.slm_curve(j, i).c2);
            CHECK(a.pd_curve(j, i).c0 == b.pd_curve(j, i).c0);
        }
    ArrayInstance c(small_config(8, 0.2), 43);
    bool any_diff = false;
    for (int j = 0; j < 8 && !any_diff; ++j)
        for (int i = 0; i < 8 && !any_diff; ++i)
            any_diff = a.slm_curve(j, i).c2 != c.slm_curve(j, i).c2;
    CHECK(any_diff);
}

TEST_CASE("variation scale factors are uniform on [1-p/2, 1+p/2]") {
    // Kolmogorov-Smirnov at the 1% level against U(0.9, 1.1), p = 0.2.
    const double p = 0.2;
    std::vector<double> scales;
    for (std::uint64_t seed = 0; seed < 10000; ++seed) {
        ArrayInstance a(small_config(8, p), seed);
        for (int j = 0; j < 8; ++j)
            for (int i = 0; i < 8; ++i) {
                scales.push_back(a.slm_curve(j, i).c2 / 0.5);
                scales.push_back(a.pd_curve(j, i).c0 / 0.8);
            }
    }
    std::sort(scales.begin(), scales.end());
    const double n = static_cast<double>(scales.size());
    double d_stat = 0.0;
    for (std::size_t k = 0; k < scales.size(); ++k) {
        const double cdf = std::clamp((scales[k] - 0.9) / 0.2, 0.0, 1.0);
        d_stat = std::max(d_stat, std::fabs(cdf - (k + 1) / n));
        d_stat = std::max(d_stat, std::fabs(cdf - k / n));
    }
    CHECK(d_stat * std::sqrt(n) < 1.628);   // 1% critical value
    CHECK(scales.front() >= 0.9);
    CHECK(scales.back() <= 1.1);
}

TEST_CASE("single pair readout equals P0 * T * R") {
    ArrayConfig cfg = small_config(1, 0.0);
    cfg.slm_nominal = {0.0, 0.0, 0.5, CurveKind::transmission};
    cfg.pd_nominal = {0.0, 0.0, 0.4, CurveKind::responsivity};
    ArrayInstance a(cfg, 1);
    a.set_codes({0}, {0});
    const RowReadout ro = a.expose_and_read();
    CHECK(ro.values[0] == doctest::Approx(0.2).epsilon(1e-15));
}

TEST_CASE("zero input power reads zero everywhere") {
    ArrayConfig cfg = small_config(4, 0.2);
    cfg.p0 = 0.0;
    ArrayInstance a(cfg, 7);
    a.set_codes(uniform_codes(4, 200), uniform_codes(4, 31));
    for (double v : a.expose_and_read().values) CHECK(v == 0.0);
}

TEST_CASE("noiseless readout matches direct summation over the stored curves") {
    ArrayInstance a(small_config(8, 0.2), 99);
    a.set_codes(uniform_codes(8, 180), uniform_codes(8, 77));
    const RowReadout ro = a.expose_and_read();
    for (int j = 0; j < 8; ++j) {
        // Oracle: evaluate the instance's own curves directly, outside the
        // readout path.
        double expect = 0.0;
        for (int i = 0; i < 8; ++i) {
            const double ut = 180.0 / 255.0, up = 77.0 / 255.0;
            const double t = std::clamp(a.slm_curve(j, i).raw(ut), 0.0, 1.0);
            const double r = std::max(a.pd_curve(j, i).raw(up), 0.0);
            expect += 1.0 * t * r;
        }
        CHECK(ro.values[j] == doctest::Approx(expect).epsilon(1e-14));
    }
}

TEST_CASE("readout is exactly linear in p0 (noiseless, ideal ADC)") {
    ArrayConfig cfg = small_config(6, 0.15);
    ArrayInstance a1(cfg, 5);
    cfg.p0 = 2.0;
    ArrayInstance a2(cfg, 5);
    a1.set_codes(uniform_codes(6, 100), uniform_codes(6, 50));
    a2.set_codes(uniform_codes(6, 100), uniform_codes(6, 50));
    const auto r1 = a1.expose_and_read().values;
    const auto r2 = a2.expose_and_read().values;
    for (int j = 0; j < 6; ++j) CHECK(r2[j] == 2.0 * r1[j]);
}

TEST_CASE("changing codes in one row only changes that row") {
    ArrayInstance a(small_config(5, 0.2), 3);
    a.set_codes(uniform_codes(5, 120), uniform_codes(5, 120));
    const auto before = a.expose_and_read().values;
    for (int i = 0; i < 5; ++i) a.set_pair_code(2, i, 30, 200);
    const auto after = a.expose_and_read().values;
    for (int j = 0; j < 5; ++j) {
        if (j == 2)
            CHECK(after[j] != before[j]);
        else
            CHECK(after[j] == before[j]);
    }
}

TEST_CASE("readout differences isolate a single pair's product") {
    // Separability: with all other pairs frozen, four corner readouts
    // recover P0 * dT * dR for the one swept pair.
    ArrayInstance a(small_config(8, 0.2), 21);
    a.set_codes(uniform_codes(8, 60), uniform_codes(8, 60));
    const int j = 3, i = 5;
    auto read_at = [&](int cs, int cp) {
        a.set_pair_code(j, i, cs, cp);
        return a.expose_and_read().values[j];
    };
    const double hh = read_at(255, 0), hl = read_at(255, 255);
    const double lh = read_at(0, 0), ll = read_at(0, 255);
    const double measured = hh - hl - lh + ll;
    const double t_hi = std::clamp(a.slm_curve(j, i).raw(1.0), 0.0, 1.0);
    const double t_lo = std::clamp(a.slm_curve(j, i).raw(0.0), 0.0, 1.0);
    const double r_hi = std::max(a.pd_curve(j, i).raw(0.0), 0.0);
    const double r_lo = std::max(a.pd_curve(j, i).raw(1.0), 0.0);
    CHECK(measured == doctest::Approx((t_hi - t_lo) * (r_hi - r_lo)).epsilon(1e-12));
}

TEST_CASE("set_codes validates the DAC range and names the offending cell") {
    ArrayInstance a(small_config(3, 0.0), 1);
    CHECK_NOTHROW(a.set_codes(uniform_codes(3, 0), uniform_codes(3, 0)));
    CHECK_NOTHROW(a.set_codes(uniform_codes(3, 255), uniform_codes(3, 255)));
    auto bad = uniform_codes(3, 0);
    bad[2 * 3 + 1] = 256;
    try {
        a.set_codes(uniform_codes(3, 0), bad);
        FAIL("expected domain_error");
    } catch (const domain_error& e) {
        const std::string msg = e.what();
        CHECK(msg.find("256") != std::string::npos);
        CHECK(msg.find("pd") != std::string::npos);
        CHECK(msg.find("2") != std::string::npos);
        CHECK(msg.find("1") != std::string::npos);
    }
    CHECK_THROWS_AS(a.set_pair_code(0, 0, -1, 0), domain_error);
}

TEST_CASE("pass counter increases per exposure") {
    ArrayInstance a(small_config(2, 0.0), 1);
    a.set_codes(uniform_codes(2, 0), uniform_codes(2, 0));
    const auto r1 = a.expose_and_read();
    const auto r2 = a.expose_and_read();
    CHECK(r2.pass_id == r1.pass_id + 1);
}

TEST_CASE("noisy readout respects the ADC range invariant") {
    ArrayConfig cfg = small_config(4, 0.0);
    cfg.noise.sigma = 0.5;
    cfg.quant.adc_ideal = false;
    cfg.quant.adc_bits = 6;
    cfg.quant.adc_full_scale = 1.2;
    ArrayInstance a(cfg, 17);
    a.set_codes(uniform_codes(4, 255), uniform_codes(4, 0));
    for (int pass = 0; pass < 200; ++pass)
        for (double v : a.expose_and_read().values) {
            CHECK(v >= 0.0);
            CHECK(v <= 1.2);
        }
}

TEST_CASE("ideal-DAC mode uses continuous levels") {
    ArrayConfig cfg = small_config(2, 0.0);
    cfg.quant.dac_ideal = true;
    ArrayInstance a(cfg, 1);
    CHECK_THROWS_AS(a.set_codes(uniform_codes(2, 0), uniform_codes(2, 0)), state_error);
    std::vector<double> u(4, 0.3);
    CHECK_NOTHROW(a.set_levels(u, u));
    std::vector<double> bad = u;
    bad[1] = 1.5;
    CHECK_THROWS_AS(a.set_levels(bad, u), domain_error);
}

}
