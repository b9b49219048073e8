#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

namespace optomvm {

using Vec = std::vector<double>;

/// Dense row-major matrix of doubles.
struct Mat {
    int rows = 0;
    int cols = 0;
    std::vector<double> a;

    Mat() = default;
    Mat(int r, int c) : rows(r), cols(c), a(static_cast<std::size_t>(r) * c, 0.0) {}

    double& operator()(int r, int c) { return a[static_cast<std::size_t>(r) * cols + c]; }
    double operator()(int r, int c) const { return a[static_cast<std::size_t>(r) * cols + c]; }

    static Mat identity(int n) {
        Mat m(n, n);
        for (int i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }
};

Mat transpose(const Mat& m);
Mat matmul(const Mat& a, const Mat& b);
Vec matvec(const Mat& m, const Vec& v);
double max_abs(const Mat& m);
double max_abs(const Vec& v);
double frobenius_norm(const Mat& m);

/// Shortest round-trip decimal form of a double (std::to_chars).
std::string format_double(double x);

// Matrix text file: two header lines (format tag, "rows cols"), then one
// whitespace-delimited row per line. Vectors are stored as n x 1 matrices.
void save_matrix(const std::filesystem::path& path, const Mat& m);
Mat load_matrix(const std::filesystem::path& path);

void save_vector(const std::filesystem::path& path, const Vec& v);
/// Accepts an n x 1 or 1 x n matrix file.
Vec load_vector(const std::filesystem::path& path);

} // namespace optomvm
