#pragma once

#include "optomvm/gemm.hpp"
#include "optomvm/matrix.hpp"

namespace optomvm {

/// Thin SVD A = U * diag(S) * V^T with p = min(m, n); S nonincreasing,
/// columns of U and V orthonormal.
struct SvdFactors {
    Mat u;   // m x p
    Vec s;   // p, descending
    Mat v;   // n x p
};

/// One-sided Jacobi SVD. Converged when every off-diagonal column dot
/// product is below 1e-10 relative; throws numeric_error after 100 sweeps.
SvdFactors jacobi_svd(const Mat& a);

/// U_K * diag(S_K) * V_K^T computed through the blocked gemm backend.
Mat reconstruct_topk(const SvdFactors& f, int k, Backend backend,
                     MvmEngine* engine = nullptr, const GemmOptions& options = {});

/// Peak signal-to-noise ratio in dB for a given peak value.
double psnr(const Mat& reference, const Mat& test, double peak);

} // namespace optomvm
