#include "optomvm/config.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "optomvm/errors.hpp"

namespace optomvm {

namespace {

using nlohmann::json;

const std::set<std::string> kKnownKeys = {
    "n",        "seed",          "p0",           "variation_p", "per_coefficient_variation",
    "dac_bits", "adc_bits",      "adc_full_scale", "sigma",     "cal_repeats",
    "transmission", "responsivity", "mode",      "invocation"};

std::array<double, 3> coeff_array(const json& j, const std::string& key) {
    if (!j.is_array() || j.size() != 3)
        throw config_error(key + ": expected [c2, c1, c0]");
    std::array<double, 3> out{};
    for (int i = 0; i < 3; ++i) {
        if (!j[i].is_number()) throw config_error(key + ": coefficients must be numbers");
        out[i] = j[i].get<double>();
    }
    return out;
}

} // namespace

ArrayConfig RunConfig::to_array_config() const {
    ArrayConfig out;
    out.n = n;
    out.slm_nominal = {transmission[0], transmission[1], transmission[2],
                       CurveKind::transmission};
    out.pd_nominal = {responsivity[0], responsivity[1], responsivity[2],
                      CurveKind::responsivity};
    out.variation.p = variation_p;
    out.variation.per_coefficient = per_coefficient_variation;
    out.quant.dac_bits = dac_bits;
    out.quant.dac_ideal = dac_ideal;
    out.quant.adc_bits = adc_bits;
    out.quant.adc_ideal = adc_ideal;
    out.quant.adc_full_scale = adc_full_scale;
    out.noise.sigma = sigma;
    out.noise.enabled = sigma > 0.0;
    out.p0 = p0;
    return out;
}

RunConfig parse_config_text(const std::string& text, const std::string& origin) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw config_error(origin + ": " + e.what());
    }
    if (!j.is_object()) throw config_error(origin + ": top level must be an object");

    for (const auto& [key, _] : j.items())
        if (!kKnownKeys.count(key)) throw config_error(origin + ": unknown key '" + key + "'");
    // "invocation" records the producing command line in resolved files; it
    // carries no configuration.
    if (j.contains("invocation") && !j["invocation"].is_string())
        throw config_error(origin + ": invocation: expected string");

    RunConfig cfg;
    auto get_int = [&](const char* key, int fallback, int lo) {
        if (!j.contains(key)) return fallback;
        if (!j[key].is_number_integer()) throw config_error(std::string(key) + ": expected integer");
        const int v = j[key].get<int>();
        if (v < lo) throw config_error(std::string(key) + ": must be >= " + std::to_string(lo));
        return v;
    };
    auto get_num = [&](const char* key, double fallback, double lo) {
        if (!j.contains(key)) return fallback;
        if (!j[key].is_number()) throw config_error(std::string(key) + ": expected number");
        const double v = j[key].get<double>();
        if (!(v >= lo)) throw config_error(std::string(key) + ": must be >= " + std::to_string(lo));
        return v;
    };

    cfg.n = get_int("n", cfg.n, 1);
    if (j.contains("seed")) {
        if (!j["seed"].is_number_unsigned() && !j["seed"].is_number_integer())
            throw config_error("seed: expected nonnegative integer");
        cfg.seed = j["seed"].get<std::uint64_t>();
    }
    cfg.p0 = get_num("p0", cfg.p0, 0.0);
    cfg.variation_p = get_num("variation_p", cfg.variation_p, 0.0);
    if (cfg.variation_p >= 1.0) throw config_error("variation_p: must be in [0,1)");
    if (j.contains("per_coefficient_variation")) {
        if (!j["per_coefficient_variation"].is_boolean())
            throw config_error("per_coefficient_variation: expected bool");
        cfg.per_coefficient_variation = j["per_coefficient_variation"].get<bool>();
    }
    auto parse_bits = [&](const char* key, int& bits, bool& ideal) {
        if (!j.contains(key)) return;
        if (j[key].is_string()) {
            if (j[key].get<std::string>() != "ideal")
                throw config_error(std::string(key) + ": expected integer or \"ideal\"");
            ideal = true;
            return;
        }
        if (!j[key].is_number_integer())
            throw config_error(std::string(key) + ": expected integer or \"ideal\"");
        bits = j[key].get<int>();
        ideal = false;
        if (bits < 1 || bits > 24)
            throw config_error(std::string(key) + ": must be in [1, 24]");
    };
    parse_bits("dac_bits", cfg.dac_bits, cfg.dac_ideal);
    parse_bits("adc_bits", cfg.adc_bits, cfg.adc_ideal);
    if (j.contains("adc_full_scale")) {
        if (j["adc_full_scale"].is_string()) {
            if (j["adc_full_scale"].get<std::string>() != "auto")
                throw config_error("adc_full_scale: expected number or \"auto\"");
            cfg.adc_full_scale = 0.0;
        } else if (j["adc_full_scale"].is_number()) {
            cfg.adc_full_scale = j["adc_full_scale"].get<double>();
            if (!(cfg.adc_full_scale > 0.0))
                throw config_error("adc_full_scale: must be positive or \"auto\"");
        } else {
            throw config_error("adc_full_scale: expected number or \"auto\"");
        }
    }
    cfg.sigma = get_num("sigma", cfg.sigma, 0.0);
    cfg.cal_repeats = get_int("cal_repeats", cfg.cal_repeats, 1);
    if (j.contains("transmission")) cfg.transmission = coeff_array(j["transmission"], "transmission");
    if (j.contains("responsivity")) cfg.responsivity = coeff_array(j["responsivity"], "responsivity");
    if (j.contains("mode")) {
        if (!j["mode"].is_string()) throw config_error("mode: expected string");
        const std::string m = j["mode"].get<std::string>();
        if (m == "calibrated")
            cfg.mode = EngineMode::calibrated;
        else if (m == "naive")
            cfg.mode = EngineMode::naive;
        else
            throw config_error("mode: expected \"calibrated\" or \"naive\"");
    }
    return cfg;
}

RunConfig load_config_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw config_error("config: cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str(), path.string());
}

std::string resolved_config_text(const RunConfig& cfg, const std::string& invocation) {
    json j;
    if (!invocation.empty()) j["invocation"] = invocation;
    j["n"] = cfg.n;
    j["seed"] = cfg.seed;
    j["p0"] = cfg.p0;
    j["variation_p"] = cfg.variation_p;
    j["per_coefficient_variation"] = cfg.per_coefficient_variation;
    if (cfg.dac_ideal)
        j["dac_bits"] = "ideal";
    else
        j["dac_bits"] = cfg.dac_bits;
    if (cfg.adc_ideal)
        j["adc_bits"] = "ideal";
    else
        j["adc_bits"] = cfg.adc_bits;
    if (cfg.adc_full_scale > 0.0)
        j["adc_full_scale"] = cfg.adc_full_scale;
    else
        j["adc_full_scale"] = "auto";
    j["sigma"] = cfg.sigma;
    j["cal_repeats"] = cfg.cal_repeats;
    j["transmission"] = cfg.transmission;
    j["responsivity"] = cfg.responsivity;
    j["mode"] = cfg.mode == EngineMode::naive ? "naive" : "calibrated";
    return j.dump(1) + "\n";
}

void write_resolved_config(const std::filesystem::path& path, const RunConfig& cfg,
                           const std::string& invocation) {
    std::ofstream out(path);
    if (!out) throw config_error("config: cannot write " + path.string());
    out << resolved_config_text(cfg, invocation);
}

std::string config_digest(const RunConfig& cfg) {
    const std::string text = resolved_config_text(cfg);
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

MvmEngine make_engine(const RunConfig& cfg, std::uint64_t seed_override, bool seed_overridden) {
    const std::uint64_t seed = seed_overridden ? seed_override : cfg.seed;
    MvmEngine engine(cfg.to_array_config(), seed, cfg.mode);
    engine.calibrate(cfg.cal_repeats);
    return engine;
}

} // namespace optomvm
