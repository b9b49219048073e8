#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "optomvm/ml/idx.hpp"

namespace optomvm {

/// Deterministic 28x28 rendered-digit dataset (ten stroke-template classes
/// with seeded affine jitter). Stands in for MNIST-format data when no real
/// dataset is on disk; files use the MNIST naming convention so real data
/// drops in unchanged.
struct DigitDataset {
    IdxImages images;
    std::vector<std::uint8_t> labels;
};

DigitDataset make_digit_dataset(int count, std::uint64_t seed);

/// Writes train/t10k image+label IDX files into `dir`.
void write_digit_dataset(const std::filesystem::path& dir, int train_count, int test_count,
                         std::uint64_t seed);

} // namespace optomvm
