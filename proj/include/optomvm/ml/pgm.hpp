#pragma once

#include <filesystem>

#include "optomvm/matrix.hpp"

namespace optomvm {

enum class PgmEncoding { binary, ascii };   // P5 / P2

/// Grayscale image as a matrix of values in [0, 255]. Header comments are
/// skipped; maxval must be 255.
Mat load_pgm(const std::filesystem::path& path);

/// Writes P5 (binary) or P2 (ASCII); values rounded and clamped to [0, 255].
void save_pgm(const std::filesystem::path& path, const Mat& image,
              PgmEncoding encoding = PgmEncoding::binary);

} // namespace optomvm
