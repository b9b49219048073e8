#include "optomvm/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <string>

#include <json.hpp>

#include "optomvm/errors.hpp"

namespace optomvm {

namespace {

using nlohmann::json;

int sweep_levels(const ArrayInstance& a) {
    return a.quantizer().dac_ideal ? kIdealSweepLevels : a.quantizer().dac_levels();
}

double grid_u_of(int code, int levels) {
    return static_cast<double>(code) / static_cast<double>(levels - 1);
}

void set_pair(ArrayInstance& a, int j, int i, int slm_code, int pd_code, int levels) {
    if (a.quantizer().dac_ideal)
        a.set_pair_level(j, i, grid_u_of(slm_code, levels), grid_u_of(pd_code, levels));
    else
        a.set_pair_code(j, i, slm_code, pd_code);
}

double clamped_nominal(const ResponseCurve& c, double u) {
    const double hi = c.kind == CurveKind::transmission ? 1.0
                                                        : std::numeric_limits<double>::infinity();
    return std::clamp(c.raw(u), 0.0, hi);
}

// First code attaining the extreme of the nominal curve over the sweep grid.
int nominal_extreme_code(const ResponseCurve& c, int levels, bool want_max) {
    int best = 0;
    double best_val = clamped_nominal(c, 0.0);
    for (int code = 1; code < levels; ++code) {
        const double val = clamped_nominal(c, grid_u_of(code, levels));
        if (want_max ? val > best_val : val < best_val) {
            best = code;
            best_val = val;
        }
    }
    return best;
}

double averaged_row_read(ArrayInstance& a, int row, int reps) {
    double acc = 0.0;
    for (int r = 0; r < reps; ++r) acc += a.expose_and_read_row(row, ReadMode::bench);
    return acc / static_cast<double>(reps);
}

int argmin_first(const std::vector<double>& v) {
    int best = 0;
    for (int i = 1; i < static_cast<int>(v.size()); ++i)
        if (v[i] < v[best]) best = i;
    return best;
}

int argmax_first(const std::vector<double>& v) {
    int best = 0;
    for (int i = 1; i < static_cast<int>(v.size()); ++i)
        if (v[i] > v[best]) best = i;
    return best;
}

std::string pair_name(int row, int i) {
    return "(row " + std::to_string(row) + ", pair " + std::to_string(i) + ")";
}

// Derives positions, lookup order, and ranges from the raw sweep tables.
void finalize_pair(PairTable& pt, int row, int i) {
    pt.slm_lo = argmin_first(pt.slm_lut);
    pt.slm_hi = argmax_first(pt.slm_lut);
    pt.pd_lo = argmin_first(pt.pd_lut);
    pt.pd_hi = argmax_first(pt.pd_lut);
    pt.t_range = pt.slm_lut[pt.slm_hi] - pt.slm_lut[pt.slm_lo];
    pt.r_range = pt.pd_lut[pt.pd_hi] - pt.pd_lut[pt.pd_lo];
    pt.gain = pt.corner_hh - pt.corner_hl - pt.corner_lh + pt.i00;
    if (!(pt.gain > 0.0) || !(pt.t_range > 0.0) || !(pt.r_range > 0.0))
        throw calibration_error("calibrate_row: degenerate pair " + pair_name(row, i) +
                                ": zero tuning swing");

    const int levels = static_cast<int>(pt.slm_lut.size());
    pt.tpos.resize(levels);
    pt.rpos.resize(levels);
    for (int c = 0; c < levels; ++c) {
        pt.tpos[c] = (pt.slm_lut[c] - pt.slm_lut[pt.slm_lo]) / pt.t_range;
        pt.rpos[c] = (pt.pd_lut[c] - pt.pd_lut[pt.pd_lo]) / pt.r_range;
    }
    auto make_order = [levels](const std::vector<double>& pos) {
        std::vector<int> order(levels);
        for (int c = 0; c < levels; ++c) order[c] = c;
        std::sort(order.begin(), order.end(), [&](int a, int b) {
            if (pos[a] != pos[b]) return pos[a] < pos[b];
            return a < b;
        });
        return order;
    };
    pt.t_order = make_order(pt.tpos);
    pt.r_order = make_order(pt.rpos);
}

void finalize_row(RowCalibration& cal) {
    double unit = std::numeric_limits<double>::infinity();
    for (const PairTable& pt : cal.pairs) unit = std::min(unit, pt.gain);
    cal.unit = unit;
    for (PairTable& pt : cal.pairs) pt.pd_swing_scale = cal.unit / pt.gain;
}

const PairTable& pair_at(const ArrayCalibration& cal, int row, int i) {
    if (row < 0 || row >= static_cast<int>(cal.rows.size()))
        throw domain_error("calibration: row " + std::to_string(row) + " out of range");
    const RowCalibration& rc = cal.rows[row];
    if (i < 0 || i >= static_cast<int>(rc.pairs.size()))
        throw domain_error("calibration: pair " + std::to_string(i) + " out of range");
    return rc.pairs[i];
}

// Solve the locally interpolated tuning curve for `target` between grid
// neighbours of c_best. Falls back to the grid point when no sign change
// brackets the target.
double refine_level(const std::vector<double>& pos, int levels, int c_best, double target) {
    if (levels < 3) return grid_u_of(c_best, levels);
    const int c0 = std::clamp(c_best - 1, 0, levels - 3);
    const double u[3] = {grid_u_of(c0, levels), grid_u_of(c0 + 1, levels),
                         grid_u_of(c0 + 2, levels)};
    const double p[3] = {pos[c0], pos[c0 + 1], pos[c0 + 2]};
    auto interp = [&](double x) {
        const double l0 = (x - u[1]) * (x - u[2]) / ((u[0] - u[1]) * (u[0] - u[2]));
        const double l1 = (x - u[0]) * (x - u[2]) / ((u[1] - u[0]) * (u[1] - u[2]));
        const double l2 = (x - u[0]) * (x - u[1]) / ((u[2] - u[0]) * (u[2] - u[1]));
        return p[0] * l0 + p[1] * l1 + p[2] * l2;
    };
    double lo, hi;
    if ((p[0] - target) * (p[1] - target) <= 0.0) {
        lo = u[0];
        hi = u[1];
    } else if ((p[1] - target) * (p[2] - target) <= 0.0) {
        lo = u[1];
        hi = u[2];
    } else {
        return grid_u_of(c_best, levels);
    }
    double flo = interp(lo) - target;
    double fhi = interp(hi) - target;
    // Grid samples interpolate exactly, so targets equal to a grid position
    // (baselines, full swing) resolve at an endpoint.
    if (flo == 0.0) return lo;
    if (fhi == 0.0) return hi;
    if ((flo > 0.0) == (fhi > 0.0)) return grid_u_of(c_best, levels);
    for (int it = 0; it < 64; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double fmid = interp(mid) - target;
        if (fmid == 0.0) return mid;
        if ((fmid > 0.0) == (flo > 0.0)) {
            lo = mid;
            flo = fmid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

GateSetting encode_position(const ArrayCalibration& cal, const std::vector<double>& pos,
                            const std::vector<int>& order, double target) {
    const int levels = cal.levels;
    auto it = std::lower_bound(order.begin(), order.end(), target,
                               [&](int code, double t) { return pos[code] < t; });
    int best = -1;
    double best_dist = std::numeric_limits<double>::infinity();
    auto consider = [&](int code) {
        const double d = std::fabs(pos[code] - target);
        if (d < best_dist || (d == best_dist && code < best)) {
            best = code;
            best_dist = d;
        }
    };
    if (it != order.end()) consider(*it);
    if (it != order.begin()) consider(*(it - 1));
    if (cal.dac_ideal) return {-1, refine_level(pos, levels, best, target)};
    return {best, cal.grid_u(best)};
}

} // namespace

RowCalibration calibrate_row(ArrayInstance& array, int row, int repeats, RefChoice ref) {
    if (repeats < 1) throw domain_error("calibrate_row: repeats must be >= 1");
    if (row < 0 || row >= array.n()) throw domain_error("calibrate_row: row out of range");
    const int n = array.n();
    const int levels = sweep_levels(array);
    const int reps = array.config().noise.active() ? repeats : 1;

    // Parked pairs contribute a constant to every readout of this row; the
    // constant cancels in the baseline-subtracted tables and corners.
    const int park_slm = nominal_extreme_code(array.config().slm_nominal, levels, false);
    const int park_pd = nominal_extreme_code(array.config().pd_nominal, levels, false);
    for (int i = 0; i < n; ++i) set_pair(array, row, i, park_slm, park_pd, levels);

    const int ref_slm = ref == RefChoice::nominal_max
                            ? nominal_extreme_code(array.config().slm_nominal, levels, true)
                            : (levels - 1) / 2;
    const int ref_pd = ref == RefChoice::nominal_max
                           ? nominal_extreme_code(array.config().pd_nominal, levels, true)
                           : (levels - 1) / 2;

    RowCalibration cal;
    cal.row = row;
    cal.pairs.resize(n);
    for (int i = 0; i < n; ++i) {
        PairTable& pt = cal.pairs[i];
        pt.slm_lut.resize(levels);
        pt.pd_lut.resize(levels);
        for (int c = 0; c < levels; ++c) {
            set_pair(array, row, i, c, ref_pd, levels);
            pt.slm_lut[c] = averaged_row_read(array, row, reps);
        }
        for (int c = 0; c < levels; ++c) {
            set_pair(array, row, i, ref_slm, c, levels);
            pt.pd_lut[c] = averaged_row_read(array, row, reps);
        }
        const int slm_lo = argmin_first(pt.slm_lut);
        const int slm_hi = argmax_first(pt.slm_lut);
        const int pd_lo = argmin_first(pt.pd_lut);
        const int pd_hi = argmax_first(pt.pd_lut);
        set_pair(array, row, i, slm_hi, pd_hi, levels);
        pt.corner_hh = averaged_row_read(array, row, reps);
        set_pair(array, row, i, slm_hi, pd_lo, levels);
        pt.corner_hl = averaged_row_read(array, row, reps);
        set_pair(array, row, i, slm_lo, pd_hi, levels);
        pt.corner_lh = averaged_row_read(array, row, reps);
        set_pair(array, row, i, slm_lo, pd_lo, levels);
        pt.i00 = averaged_row_read(array, row, reps);

        finalize_pair(pt, row, i);
        set_pair(array, row, i, park_slm, park_pd, levels);
    }
    finalize_row(cal);
    return cal;
}

ArrayCalibration calibrate_array(ArrayInstance& array, int repeats, RefChoice ref) {
    ArrayCalibration out;
    out.n = array.n();
    out.levels = sweep_levels(array);
    out.dac_ideal = array.quantizer().dac_ideal;
    out.rows.reserve(out.n);
    for (int j = 0; j < out.n; ++j) out.rows.push_back(calibrate_row(array, j, repeats, ref));

    const int reps = array.config().noise.active() ? repeats : 1;

    // Cache the all-baseline readout; it is input-independent.
    for (int j = 0; j < out.n; ++j)
        for (int i = 0; i < out.n; ++i) {
            const PairTable& pt = out.rows[j].pairs[i];
            set_pair(array, j, i, pt.slm_lo, pt.pd_lo, out.levels);
        }
    out.s00.assign(out.n, 0.0);
    for (int r = 0; r < reps; ++r) {
        const RowReadout ro = array.expose_and_read(ReadMode::bench);
        for (int j = 0; j < out.n; ++j) out.s00[j] += ro.values[j];
    }
    for (double& v : out.s00) v /= static_cast<double>(reps);

    // Range the ADC to the largest achievable row sum.
    for (int j = 0; j < out.n; ++j)
        for (int i = 0; i < out.n; ++i) {
            const PairTable& pt = out.rows[j].pairs[i];
            set_pair(array, j, i, pt.slm_hi, pt.pd_hi, out.levels);
        }
    std::vector<double> top(out.n, 0.0);
    for (int r = 0; r < reps; ++r) {
        const RowReadout ro = array.expose_and_read(ReadMode::bench);
        for (int j = 0; j < out.n; ++j) top[j] += ro.values[j];
    }
    out.max_row_sum = 0.0;
    for (double v : top) out.max_row_sum = std::max(out.max_row_sum, v / reps);
    return out;
}

ArrayCalibration nominal_calibration(const ArrayConfig& config) {
    ArrayCalibration out;
    out.n = config.n;
    out.levels = config.quant.dac_ideal ? kIdealSweepLevels : config.quant.dac_levels();
    out.dac_ideal = config.quant.dac_ideal;

    const ResponseCurve& t = config.slm_nominal;
    const ResponseCurve& r = config.pd_nominal;
    const int t_lo = nominal_extreme_code(t, out.levels, false);
    const int t_hi = nominal_extreme_code(t, out.levels, true);
    const int r_lo = nominal_extreme_code(r, out.levels, false);
    const int r_hi = nominal_extreme_code(r, out.levels, true);
    const double t_lo_v = clamped_nominal(t, grid_u_of(t_lo, out.levels));
    const double t_hi_v = clamped_nominal(t, grid_u_of(t_hi, out.levels));
    const double r_lo_v = clamped_nominal(r, grid_u_of(r_lo, out.levels));
    const double r_hi_v = clamped_nominal(r, grid_u_of(r_hi, out.levels));

    PairTable pt;
    pt.slm_lut.resize(out.levels);
    pt.pd_lut.resize(out.levels);
    for (int c = 0; c < out.levels; ++c) {
        const double u = grid_u_of(c, out.levels);
        pt.slm_lut[c] = config.p0 * clamped_nominal(t, u) * r_hi_v;
        pt.pd_lut[c] = config.p0 * t_hi_v * clamped_nominal(r, u);
    }
    pt.corner_hh = config.p0 * t_hi_v * r_hi_v;
    pt.corner_hl = config.p0 * t_hi_v * r_lo_v;
    pt.corner_lh = config.p0 * t_lo_v * r_hi_v;
    pt.i00 = config.p0 * t_lo_v * r_lo_v;
    finalize_pair(pt, 0, 0);

    out.rows.resize(config.n);
    out.s00.assign(config.n, config.n * pt.i00);
    out.max_row_sum = config.n * pt.corner_hh;
    for (int j = 0; j < config.n; ++j) {
        out.rows[j].row = j;
        out.rows[j].pairs.assign(config.n, pt);
        finalize_row(out.rows[j]);
    }
    return out;
}

ArrayCalibration scale_calibration_power(const ArrayCalibration& cal, double factor) {
    if (!(factor > 0.0)) throw domain_error("scale_calibration_power: factor must be positive");
    ArrayCalibration out = cal;
    for (RowCalibration& rc : out.rows) {
        for (PairTable& pt : rc.pairs) {
            for (double& x : pt.slm_lut) x *= factor;
            for (double& x : pt.pd_lut) x *= factor;
            pt.i00 *= factor;
            pt.corner_hh *= factor;
            pt.corner_hl *= factor;
            pt.corner_lh *= factor;
            pt.t_range *= factor;
            pt.r_range *= factor;
            pt.gain *= factor;
            // tpos/rpos and the lookup orders are ratios; unchanged.
        }
        rc.unit *= factor;
    }
    for (double& x : out.s00) x *= factor;
    out.max_row_sum *= factor;
    return out;
}

GateSetting encode_slm(const ArrayCalibration& cal, int row, int i, double v) {
    if (!(v >= 0.0 && v <= 1.0))
        throw domain_error("encode_slm: value " + std::to_string(v) + " outside [0,1]");
    const PairTable& pt = pair_at(cal, row, i);
    return encode_position(cal, pt.tpos, pt.t_order, v);
}

GateSetting encode_pd(const ArrayCalibration& cal, int row, int i, double w) {
    if (!(w >= 0.0 && w <= 1.0))
        throw domain_error("encode_pd: value " + std::to_string(w) + " outside [0,1]");
    const PairTable& pt = pair_at(cal, row, i);
    return encode_position(cal, pt.rpos, pt.r_order, w * pt.pd_swing_scale);
}

std::pair<GateSetting, GateSetting> encode_pair(const ArrayCalibration& cal, int row, int i,
                                                double v, double w) {
    return {encode_slm(cal, row, i, v), encode_pd(cal, row, i, w)};
}

GateSetting baseline_slm(const ArrayCalibration& cal, int row, int i) {
    const PairTable& pt = pair_at(cal, row, i);
    if (cal.dac_ideal) return {-1, cal.grid_u(pt.slm_lo)};
    return {pt.slm_lo, cal.grid_u(pt.slm_lo)};
}

GateSetting baseline_pd(const ArrayCalibration& cal, int row, int i) {
    const PairTable& pt = pair_at(cal, row, i);
    if (cal.dac_ideal) return {-1, cal.grid_u(pt.pd_lo)};
    return {pt.pd_lo, cal.grid_u(pt.pd_lo)};
}

double decode_row(double s_vw, double s_v0, double s_0w, double s_00,
                  const RowCalibration& cal) {
    if (!(cal.unit > 0.0))
        throw calibration_error("decode_row: row unit is not positive");
    return (s_vw - s_v0 - s_0w + s_00) / cal.unit;
}

namespace {

constexpr std::uint64_t kFnvOffset = 1469598103934665603ull;
constexpr std::uint64_t kFnvPrime = 1099511628211ull;

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = kFnvOffset;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= kFnvPrime;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

json pair_to_json(const PairTable& pt) {
    json j;
    j["slm_lut"] = pt.slm_lut;
    j["pd_lut"] = pt.pd_lut;
    j["i00"] = pt.i00;
    j["corner_hh"] = pt.corner_hh;
    j["corner_hl"] = pt.corner_hl;
    j["corner_lh"] = pt.corner_lh;
    return j;
}

PairTable pair_from_json(const json& j, int row, int i) {
    PairTable pt;
    pt.slm_lut = j.at("slm_lut").get<std::vector<double>>();
    pt.pd_lut = j.at("pd_lut").get<std::vector<double>>();
    pt.i00 = j.at("i00").get<double>();
    pt.corner_hh = j.at("corner_hh").get<double>();
    pt.corner_hl = j.at("corner_hl").get<double>();
    pt.corner_lh = j.at("corner_lh").get<double>();
    if (pt.slm_lut.size() != pt.pd_lut.size() || pt.slm_lut.empty())
        throw format_error("calibration file: inconsistent LUT lengths at " + pair_name(row, i));
    finalize_pair(pt, row, i);
    return pt;
}

} // namespace

void save_calibration(const std::filesystem::path& path, const ArrayCalibration& cal) {
    json j;
    j["format"] = "optomvm-calibration";
    j["version"] = cal.version;
    j["n"] = cal.n;
    j["levels"] = cal.levels;
    j["dac_ideal"] = cal.dac_ideal;
    j["s00"] = cal.s00;
    j["max_row_sum"] = cal.max_row_sum;
    json rows = json::array();
    for (const RowCalibration& rc : cal.rows) {
        json row;
        row["row"] = rc.row;
        row["unit"] = rc.unit;
        json pairs = json::array();
        for (const PairTable& pt : rc.pairs) pairs.push_back(pair_to_json(pt));
        row["pairs"] = std::move(pairs);
        rows.push_back(std::move(row));
    }
    j["rows"] = std::move(rows);
    j["digest"] = hex64(fnv1a(j.dump()));

    std::ofstream out(path);
    if (!out) throw format_error("save_calibration: cannot open " + path.string());
    out << j.dump(1) << "\n";
}

ArrayCalibration load_calibration(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw format_error("load_calibration: cannot open " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw format_error("load_calibration: " + path.string() + ": " + e.what());
    }
    if (j.value("format", "") != std::string("optomvm-calibration"))
        throw format_error("load_calibration: " + path.string() + ": not a calibration file");
    if (j.value("version", 0) != 1)
        throw format_error("load_calibration: unsupported version");

    const std::string stored_digest = j.value("digest", "");
    j.erase("digest");
    const std::string recomputed = hex64(fnv1a(j.dump()));
    if (stored_digest != recomputed)
        throw format_error("load_calibration: " + path.string() + ": digest mismatch");

    ArrayCalibration cal;
    cal.version = 1;
    cal.n = j.at("n").get<int>();
    cal.levels = j.at("levels").get<int>();
    cal.dac_ideal = j.at("dac_ideal").get<bool>();
    cal.s00 = j.at("s00").get<std::vector<double>>();
    cal.max_row_sum = j.at("max_row_sum").get<double>();
    for (const json& row : j.at("rows")) {
        RowCalibration rc;
        rc.row = row.at("row").get<int>();
        int i = 0;
        for (const json& p : row.at("pairs")) rc.pairs.push_back(pair_from_json(p, rc.row, i++));
        finalize_row(rc);
        cal.rows.push_back(std::move(rc));
    }
    if (static_cast<int>(cal.rows.size()) != cal.n)
        throw format_error("load_calibration: row count does not match n");
    return cal;
}

} // namespace optomvm
