#include "optomvm/ml/synth_digits.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "optomvm/errors.hpp"
#include "optomvm/rng.hpp"

namespace optomvm {

namespace {

using Pt = std::array<double, 2>;        // x right, y down, unit box
using Stroke = std::vector<Pt>;

Stroke ellipse(double cx, double cy, double rx, double ry, int steps = 16) {
    Stroke s;
    s.reserve(steps + 1);
    for (int i = 0; i <= steps; ++i) {
        const double a = 2.0 * 3.14159265358979323846 * i / steps;
        s.push_back({cx + rx * std::cos(a), cy + ry * std::sin(a)});
    }
    return s;
}

std::vector<Stroke> glyph(int digit) {
    switch (digit) {
        case 0: return {ellipse(0.50, 0.50, 0.26, 0.38)};
        case 1:
            return {{{0.33, 0.28}, {0.52, 0.12}, {0.52, 0.88}},
                    {{0.36, 0.88}, {0.68, 0.88}}};
        case 2:
            return {{{0.28, 0.32}, {0.33, 0.17}, {0.50, 0.11}, {0.67, 0.17}, {0.72, 0.32},
                     {0.66, 0.47}, {0.45, 0.62}, {0.28, 0.78}, {0.28, 0.88}},
                    {{0.28, 0.88}, {0.74, 0.88}}};
        case 3:
            return {{{0.28, 0.18}, {0.42, 0.10}, {0.60, 0.12}, {0.70, 0.24}, {0.66, 0.38},
                     {0.50, 0.46}},
                    {{0.50, 0.46}, {0.68, 0.54}, {0.74, 0.68}, {0.66, 0.84}, {0.46, 0.90},
                     {0.28, 0.82}}};
        case 4:
            return {{{0.62, 0.88}, {0.62, 0.12}, {0.26, 0.62}, {0.78, 0.62}}};
        case 5:
            return {{{0.70, 0.12}, {0.32, 0.12}, {0.30, 0.46}, {0.50, 0.42}, {0.68, 0.50},
                     {0.72, 0.66}, {0.64, 0.84}, {0.42, 0.90}, {0.28, 0.80}}};
        case 6:
            return {{{0.64, 0.12}, {0.44, 0.18}, {0.32, 0.36}, {0.28, 0.58}, {0.34, 0.78},
                     {0.52, 0.88}, {0.68, 0.78}, {0.70, 0.62}, {0.56, 0.52}, {0.38, 0.56},
                     {0.30, 0.66}}};
        case 7:
            return {{{0.26, 0.12}, {0.74, 0.12}, {0.44, 0.88}},
                    {{0.34, 0.50}, {0.64, 0.50}}};
        case 8: return {ellipse(0.50, 0.30, 0.20, 0.18), ellipse(0.50, 0.68, 0.23, 0.21)};
        case 9:
            return {ellipse(0.52, 0.32, 0.20, 0.20),
                    {{0.72, 0.32}, {0.68, 0.62}, {0.56, 0.88}}};
        default: throw domain_error("glyph: digit out of range");
    }
}

double segment_distance(double px, double py, const Pt& a, const Pt& b) {
    const double vx = b[0] - a[0], vy = b[1] - a[1];
    const double wx = px - a[0], wy = py - a[1];
    const double len2 = vx * vx + vy * vy;
    double t = len2 > 0.0 ? (wx * vx + wy * vy) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    const double dx = px - (a[0] + t * vx), dy = py - (a[1] + t * vy);
    return std::sqrt(dx * dx + dy * dy);
}

} // namespace

DigitDataset make_digit_dataset(int count, std::uint64_t seed) {
    if (count < 1) throw domain_error("make_digit_dataset: count must be >= 1");
    constexpr int kSide = 28;
    DigitDataset ds;
    ds.images.count = count;
    ds.images.rows = kSide;
    ds.images.cols = kSide;
    ds.images.data.assign(static_cast<std::size_t>(count) * kSide * kSide, 0);
    ds.labels.resize(count);

    for (int idx = 0; idx < count; ++idx) {
        const int digit = idx % 10;   // balanced classes
        ds.labels[idx] = static_cast<std::uint8_t>(digit);
        RngStream rng(derive_seed(seed, 0xD161, static_cast<std::uint64_t>(idx)));

        const double angle = rng.uniform(-0.15, 0.15);
        const double scale_x = rng.uniform(0.85, 1.10);
        const double scale_y = rng.uniform(0.85, 1.10);
        const double shear = rng.uniform(-0.12, 0.12);
        const double dx = rng.uniform(-1.5, 1.5);
        const double dy = rng.uniform(-1.5, 1.5);
        const double thickness = rng.uniform(1.2, 1.8);
        const double ca = std::cos(angle), sa = std::sin(angle);

        // Unit glyph -> pixel coordinates: jittered affine about the glyph
        // center, 19 px nominal extent, centered at 13.5.
        auto to_px = [&](const Pt& p) -> Pt {
            double x = (p[0] - 0.5) * scale_x;
            double y = (p[1] - 0.5) * scale_y;
            x += shear * y;
            const double xr = ca * x - sa * y;
            const double yr = sa * x + ca * y;
            return {13.5 + 19.0 * xr + dx, 13.5 + 19.0 * yr + dy};
        };

        std::vector<std::pair<Pt, Pt>> segments;
        for (const Stroke& stroke : glyph(digit))
            for (std::size_t k = 0; k + 1 < stroke.size(); ++k)
                segments.emplace_back(to_px(stroke[k]), to_px(stroke[k + 1]));

        std::uint8_t* img = ds.images.data.data() + static_cast<std::size_t>(idx) * kSide * kSide;
        for (int y = 0; y < kSide; ++y)
            for (int x = 0; x < kSide; ++x) {
                double dmin = 1e9;
                for (const auto& [a, b] : segments)
                    dmin = std::min(dmin, segment_distance(x, y, a, b));
                const double v = std::clamp((thickness - dmin) / 0.9, 0.0, 1.0);
                img[y * kSide + x] = static_cast<std::uint8_t>(std::lround(255.0 * v));
            }
    }
    return ds;
}

void write_digit_dataset(const std::filesystem::path& dir, int train_count, int test_count,
                         std::uint64_t seed) {
    std::filesystem::create_directories(dir);
    const DigitDataset train = make_digit_dataset(train_count, derive_seed(seed, 0x7121));
    const DigitDataset test = make_digit_dataset(test_count, derive_seed(seed, 0x7122));
    save_idx_images(dir / "train-images-idx3-ubyte", train.images);
    save_idx_labels(dir / "train-labels-idx1-ubyte", train.labels);
    save_idx_images(dir / "t10k-images-idx3-ubyte", test.images);
    save_idx_labels(dir / "t10k-labels-idx1-ubyte", test.labels);
}

} // namespace optomvm
