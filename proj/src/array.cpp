#include "optomvm/array.hpp"

#include <string>

#include "optomvm/errors.hpp"

namespace optomvm {

namespace {
// Plane tags for per-unit variation substreams.
constexpr std::uint64_t kSlmPlane = 1;
constexpr std::uint64_t kPdPlane = 2;
constexpr std::uint64_t kNoiseStream = 3;

void validate_config(const ArrayConfig& c) {
    if (c.n < 1) throw config_error("array.n: must be >= 1");
    if (!(c.variation.p >= 0.0 && c.variation.p < 1.0))
        throw config_error("array.variation.p: must be in [0,1)");
    if (!c.quant.dac_ideal && c.quant.dac_bits < 1)
        throw config_error("array.quant.dac_bits: must be >= 1");
    if (!c.quant.adc_ideal && c.quant.adc_bits < 1)
        throw config_error("array.quant.adc_bits: must be >= 1");
    if (!(c.noise.sigma >= 0.0)) throw config_error("array.noise.sigma: must be >= 0");
    if (!(c.p0 >= 0.0)) throw config_error("array.p0: must be >= 0");
}

ResponseCurve vary_unit(const ResponseCurve& nominal, const VariationSpec& spec,
                        std::uint64_t seed, std::uint64_t plane, int j, int i) {
    RngStream unit_rng(derive_seed(seed, plane, static_cast<std::uint64_t>(j),
                                   static_cast<std::uint64_t>(i)));
    if (spec.per_coefficient) {
        const double xs[3] = {unit_rng.uniform01(), unit_rng.uniform01(), unit_rng.uniform01()};
        return apply_variation(nominal, spec, xs);
    }
    const double x = unit_rng.uniform01();
    return apply_variation(nominal, spec, std::span<const double>(&x, 1));
}
} // namespace

ArrayInstance::ArrayInstance(const ArrayConfig& config, std::uint64_t seed)
    : cfg_(config), seed_(seed), noise_rng_(derive_seed(seed, kNoiseStream)) {
    validate_config(cfg_);
    const std::size_t count = static_cast<std::size_t>(cfg_.n) * cfg_.n;
    slm_curves_.reserve(count);
    pd_curves_.reserve(count);
    for (int j = 0; j < cfg_.n; ++j) {
        for (int i = 0; i < cfg_.n; ++i) {
            slm_curves_.push_back(vary_unit(cfg_.slm_nominal, cfg_.variation, seed, kSlmPlane, j, i));
            pd_curves_.push_back(vary_unit(cfg_.pd_nominal, cfg_.variation, seed, kPdPlane, j, i));
        }
    }
    slm_codes_.assign(count, cfg_.quant.dac_ideal ? -1 : 0);
    pd_codes_.assign(count, cfg_.quant.dac_ideal ? -1 : 0);
    slm_u_.assign(count, 0.0);
    pd_u_.assign(count, 0.0);
}

double ArrayInstance::realize(int code) const {
    return static_cast<double>(code) / static_cast<double>(cfg_.quant.dac_levels() - 1);
}

void ArrayInstance::set_codes(const std::vector<int>& slm_codes, const std::vector<int>& pd_codes) {
    if (cfg_.quant.dac_ideal)
        throw state_error("set_codes: array is in ideal-DAC mode, use set_levels");
    const std::size_t count = slm_u_.size();
    if (slm_codes.size() != count || pd_codes.size() != count)
        throw domain_error("set_codes: grids must be n*n");
    for (int j = 0; j < cfg_.n; ++j)
        for (int i = 0; i < cfg_.n; ++i) {
            set_pair_code(j, i, slm_codes[idx(j, i)], pd_codes[idx(j, i)]);
        }
}

void ArrayInstance::set_pair_code(int j, int i, int slm_code, int pd_code) {
    const int levels = cfg_.quant.dac_levels();
    auto check = [&](const char* plane, int code) {
        if (code < 0 || code >= levels)
            throw domain_error(std::string("set_codes: code ") + std::to_string(code) +
                               " out of DAC range at (" + plane + ", " + std::to_string(j) +
                               ", " + std::to_string(i) + ")");
    };
    check("slm", slm_code);
    check("pd", pd_code);
    slm_codes_[idx(j, i)] = slm_code;
    pd_codes_[idx(j, i)] = pd_code;
    slm_u_[idx(j, i)] = realize(slm_code);
    pd_u_[idx(j, i)] = realize(pd_code);
}

void ArrayInstance::set_levels(const std::vector<double>& slm_u, const std::vector<double>& pd_u) {
    if (!cfg_.quant.dac_ideal)
        throw state_error("set_levels: array is in finite-DAC mode, use set_codes");
    const std::size_t count = slm_u_.size();
    if (slm_u.size() != count || pd_u.size() != count)
        throw domain_error("set_levels: grids must be n*n");
    for (int j = 0; j < cfg_.n; ++j)
        for (int i = 0; i < cfg_.n; ++i) set_pair_level(j, i, slm_u[idx(j, i)], pd_u[idx(j, i)]);
}

void ArrayInstance::set_pair_level(int j, int i, double slm_u, double pd_u) {
    auto check = [&](const char* plane, double u) {
        if (!(u >= 0.0 && u <= 1.0))
            throw domain_error(std::string("set_levels: level ") + std::to_string(u) +
                               " outside [0,1] at (" + plane + ", " + std::to_string(j) + ", " +
                               std::to_string(i) + ")");
    };
    check("slm", slm_u);
    check("pd", pd_u);
    slm_u_[idx(j, i)] = slm_u;
    pd_u_[idx(j, i)] = pd_u;
}

void ArrayInstance::set_p0(double watts) {
    if (!(watts >= 0.0)) throw domain_error("set_p0: power must be >= 0");
    cfg_.p0 = watts;
}

double ArrayInstance::row_current(int j) {
    double sum = 0.0;
    for (int i = 0; i < cfg_.n; ++i) {
        const double t = eval_curve(slm_curves_[idx(j, i)], slm_u_[idx(j, i)], &diag_);
        const double r = eval_curve(pd_curves_[idx(j, i)], pd_u_[idx(j, i)], &diag_);
        sum += cfg_.p0 * t * r;
    }
    return sum;
}

RowReadout ArrayInstance::expose_and_read(ReadMode mode, RngStream* noise_rng) {
    RowReadout out;
    out.values.resize(cfg_.n);
    RngStream& rng = noise_rng ? *noise_rng : noise_rng_;
    QuantizerSpec q = cfg_.quant;
    if (mode == ReadMode::bench) q.adc_ideal = true;
    for (int j = 0; j < cfg_.n; ++j)
        out.values[j] = read_with_noise_and_adc(row_current(j), cfg_.noise, q, rng);
    out.pass_id = ++pass_count_;
    return out;
}

double ArrayInstance::expose_and_read_row(int j, ReadMode mode, RngStream* noise_rng) {
    if (j < 0 || j >= cfg_.n) throw domain_error("expose_and_read_row: row out of range");
    RngStream& rng = noise_rng ? *noise_rng : noise_rng_;
    QuantizerSpec q = cfg_.quant;
    if (mode == ReadMode::bench) q.adc_ideal = true;
    ++pass_count_;
    return read_with_noise_and_adc(row_current(j), cfg_.noise, q, rng);
}

} // namespace optomvm
