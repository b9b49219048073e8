#include "optomvm/ml/svd.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "optomvm/errors.hpp"

namespace optomvm {

namespace {

constexpr double kOffdiagTol = 1e-10;
constexpr int kMaxSweeps = 100;

double col_dot(const Mat& g, int a, int b) {
    double acc = 0.0;
    for (int r = 0; r < g.rows; ++r) acc += g(r, a) * g(r, b);
    return acc;
}

void rotate_cols(Mat& m, int a, int b, double cs, double sn) {
    for (int r = 0; r < m.rows; ++r) {
        const double ta = m(r, a);
        const double tb = m(r, b);
        m(r, a) = cs * ta - sn * tb;
        m(r, b) = sn * ta + cs * tb;
    }
}

} // namespace

SvdFactors jacobi_svd(const Mat& a) {
    if (a.rows < 1 || a.cols < 1) throw domain_error("jacobi_svd: empty matrix");
    if (a.rows < a.cols) {
        // Work on the transpose and swap the factor roles.
        SvdFactors f = jacobi_svd(transpose(a));
        return {std::move(f.v), std::move(f.s), std::move(f.u)};
    }
    const int m = a.rows, n = a.cols;
    Mat g = a;
    Mat v = Mat::identity(n);

    bool converged = false;
    for (int sweep = 0; sweep < kMaxSweeps && !converged; ++sweep) {
        converged = true;
        for (int i = 0; i < n - 1; ++i) {
            for (int j = i + 1; j < n; ++j) {
                const double aii = col_dot(g, i, i);
                const double ajj = col_dot(g, j, j);
                const double aij = col_dot(g, i, j);
                const double denom = std::sqrt(aii * ajj);
                if (denom == 0.0 || std::fabs(aij) <= kOffdiagTol * denom) continue;
                converged = false;
                const double zeta = (ajj - aii) / (2.0 * aij);
                const double t = (zeta >= 0.0 ? 1.0 : -1.0) /
                                 (std::fabs(zeta) + std::sqrt(1.0 + zeta * zeta));
                const double cs = 1.0 / std::sqrt(1.0 + t * t);
                const double sn = cs * t;
                rotate_cols(g, i, j, cs, sn);
                rotate_cols(v, i, j, cs, sn);
            }
        }
    }
    if (!converged)
        throw numeric_error("jacobi_svd: no convergence after " + std::to_string(kMaxSweeps) +
                            " sweeps");

    Vec norms(n);
    for (int c = 0; c < n; ++c) norms[c] = std::sqrt(col_dot(g, c, c));
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int x, int y) { return norms[x] > norms[y]; });

    SvdFactors f;
    f.u = Mat(m, n);
    f.v = Mat(n, n);
    f.s.resize(n);
    double s_max = 0.0;
    for (int c = 0; c < n; ++c) s_max = std::max(s_max, norms[c]);
    const double zero_floor = s_max * 1e-13;

    int built = 0;
    for (int c = 0; c < n; ++c) {
        const int src = order[c];
        f.s[c] = norms[src];
        for (int r = 0; r < n; ++r) f.v(r, c) = v(r, src);
        if (norms[src] > zero_floor) {
            for (int r = 0; r < m; ++r) f.u(r, c) = g(r, src) / norms[src];
            ++built;
        }
    }
    // Null-space columns: complete U to an orthonormal set.
    for (int c = built; c < n; ++c) {
        for (int cand = 0; cand < m; ++cand) {
            Vec col(m, 0.0);
            col[cand] = 1.0;
            for (int prev = 0; prev < c; ++prev) {
                double proj = 0.0;
                for (int r = 0; r < m; ++r) proj += col[r] * f.u(r, prev);
                for (int r = 0; r < m; ++r) col[r] -= proj * f.u(r, prev);
            }
            double norm = 0.0;
            for (double x : col) norm += x * x;
            norm = std::sqrt(norm);
            if (norm > 0.5) {
                for (int r = 0; r < m; ++r) f.u(r, c) = col[r] / norm;
                break;
            }
        }
    }
    return f;
}

Mat reconstruct_topk(const SvdFactors& f, int k, Backend backend, MvmEngine* engine,
                     const GemmOptions& options) {
    const int p = static_cast<int>(f.s.size());
    if (k < 1 || k > p)
        throw domain_error("reconstruct_topk: K must be in [1, " + std::to_string(p) + "]");
    Mat left(f.u.rows, k);   // U_K * diag(S_K)
    for (int r = 0; r < f.u.rows; ++r)
        for (int c = 0; c < k; ++c) left(r, c) = f.u(r, c) * f.s[c];
    Mat right(k, f.v.rows);  // V_K^T
    for (int r = 0; r < f.v.rows; ++r)
        for (int c = 0; c < k; ++c) right(c, r) = f.v(r, c);
    return gemm(left, right, backend, engine, options);
}

double psnr(const Mat& reference, const Mat& test, double peak) {
    if (reference.rows != test.rows || reference.cols != test.cols)
        throw domain_error("psnr: shape mismatch");
    double mse = 0.0;
    for (std::size_t i = 0; i < reference.a.size(); ++i) {
        const double d = reference.a[i] - test.a[i];
        mse += d * d;
    }
    mse /= static_cast<double>(reference.a.size());
    if (mse == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(peak * peak / mse);
}

} // namespace optomvm
