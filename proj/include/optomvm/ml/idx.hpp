#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "optomvm/matrix.hpp"

namespace optomvm {

/// IDX image tensor (big-endian container used by MNIST-family datasets).
/// Raw bytes are kept as stored; accessors scale pixels to [0,1].
struct IdxImages {
    int count = 0;
    int rows = 0;
    int cols = 0;
    std::vector<std::uint8_t> data;   // count * rows * cols

    double pixel(int image, int r, int c) const {
        return data[(static_cast<std::size_t>(image) * rows + r) * cols + c] / 255.0;
    }

    /// Flattens images [first, first+n) into an n x (rows*cols) matrix in [0,1].
    Mat to_matrix(int first, int n) const;
};

IdxImages load_idx_images(const std::filesystem::path& path);
std::vector<std::uint8_t> load_idx_labels(const std::filesystem::path& path);

void save_idx_images(const std::filesystem::path& path, const IdxImages& images);
void save_idx_labels(const std::filesystem::path& path, std::span<const std::uint8_t> labels);

} // namespace optomvm
