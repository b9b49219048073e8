#include "optomvm/matrix.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "optomvm/errors.hpp"

namespace optomvm {

namespace {
constexpr const char* kMatrixTag = "optomvm-matrix v1";
} // namespace

Mat transpose(const Mat& m) {
    Mat t(m.cols, m.rows);
    for (int r = 0; r < m.rows; ++r)
        for (int c = 0; c < m.cols; ++c) t(c, r) = m(r, c);
    return t;
}

Mat matmul(const Mat& a, const Mat& b) {
    if (a.cols != b.rows)
        throw domain_error("matmul: inner dimensions disagree (" + std::to_string(a.cols) +
                           " vs " + std::to_string(b.rows) + ")");
    Mat c(a.rows, b.cols);
    for (int i = 0; i < a.rows; ++i) {
        for (int k = 0; k < a.cols; ++k) {
            const double aik = a(i, k);
            if (aik == 0.0) continue;
            for (int j = 0; j < b.cols; ++j) c(i, j) += aik * b(k, j);
        }
    }
    return c;
}

Vec matvec(const Mat& m, const Vec& v) {
    if (m.cols != static_cast<int>(v.size()))
        throw domain_error("matvec: dimension mismatch");
    Vec out(static_cast<std::size_t>(m.rows), 0.0);
    for (int i = 0; i < m.rows; ++i) {
        double acc = 0.0;
        for (int j = 0; j < m.cols; ++j) acc += m(i, j) * v[j];
        out[i] = acc;
    }
    return out;
}

double max_abs(const Mat& m) {
    double best = 0.0;
    for (double x : m.a) best = std::max(best, std::fabs(x));
    return best;
}

double max_abs(const Vec& v) {
    double best = 0.0;
    for (double x : v) best = std::max(best, std::fabs(x));
    return best;
}

double frobenius_norm(const Mat& m) {
    double acc = 0.0;
    for (double x : m.a) acc += x * x;
    return std::sqrt(acc);
}

std::string format_double(double x) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
    if (ec != std::errc{}) throw numeric_error("format_double: conversion failed");
    return std::string(buf, ptr);
}

void save_matrix(const std::filesystem::path& path, const Mat& m) {
    std::ofstream out(path);
    if (!out) throw format_error("save_matrix: cannot open " + path.string());
    out << kMatrixTag << "\n" << m.rows << " " << m.cols << "\n";
    for (int r = 0; r < m.rows; ++r) {
        for (int c = 0; c < m.cols; ++c) {
            if (c) out << " ";
            out << format_double(m(r, c));
        }
        out << "\n";
    }
    if (!out) throw format_error("save_matrix: write failed for " + path.string());
}

Mat load_matrix(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw format_error("load_matrix: cannot open " + path.string());
    std::string tag;
    std::getline(in, tag);
    if (tag != kMatrixTag)
        throw format_error("load_matrix: " + path.string() + ": bad header tag '" + tag + "'");
    int rows = 0, cols = 0;
    in >> rows >> cols;
    if (!in || rows < 1 || cols < 1)
        throw format_error("load_matrix: " + path.string() + ": bad dimension line");
    Mat m(rows, cols);
    for (std::size_t i = 0; i < m.a.size(); ++i) {
        if (!(in >> m.a[i]))
            throw format_error("load_matrix: " + path.string() + ": truncated at element " +
                               std::to_string(i));
    }
    return m;
}

void save_vector(const std::filesystem::path& path, const Vec& v) {
    Mat m(static_cast<int>(v.size()), 1);
    m.a = v;
    save_matrix(path, m);
}

Vec load_vector(const std::filesystem::path& path) {
    const Mat m = load_matrix(path);
    if (m.rows != 1 && m.cols != 1)
        throw format_error("load_vector: " + path.string() + ": expected n x 1 or 1 x n, got " +
                           std::to_string(m.rows) + " x " + std::to_string(m.cols));
    return m.a;
}

} // namespace optomvm
