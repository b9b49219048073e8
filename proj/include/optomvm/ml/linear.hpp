#pragma once

#include <cstdint>
#include <vector>

#include "optomvm/gemm.hpp"
#include "optomvm/matrix.hpp"
#include "optomvm/ml/adam.hpp"

namespace optomvm {

/// Isotropic Gaussian clusters at seeded centers.
struct BlobData {
    Mat x;                     // (k * n_per) x dim
    std::vector<int> labels;   // cluster index per sample
    int k = 0;
};

BlobData make_blobs(int k, int n_per, double spread, std::uint64_t seed, int dim = 2);

/// One-hot targets, (samples x classes).
Mat one_hot(const std::vector<int>& labels, int classes);

/// Mean over samples and outputs of squared prediction error.
double mse_loss(const Mat& preds, const Mat& targets);

/// Full-batch Adam on MSE loss in exact arithmetic. Returns the (dim+1) x
/// classes weight matrix (bias in the last row) and records the loss history.
Mat train_linear_mse(const Mat& x, const Mat& targets, const AdamConfig& adam, int epochs,
                     std::vector<double>* loss_history = nullptr);

/// Forward pass through the chosen gemm backend; appends the bias column.
Mat predict_linear(const Mat& x, const Mat& weights, Backend backend,
                   MvmEngine* engine = nullptr, const GemmOptions& options = {});

struct Evaluation {
    std::vector<int> predictions;
    double loss = 0.0;
    Mat confusion;   // classes x classes, rows = true label
    double accuracy = 0.0;
};

/// Argmax classification of predictions against labels; loss is MSE against
/// the one-hot targets.
Evaluation evaluate_linear(const Mat& x, const std::vector<int>& labels, const Mat& weights,
                           Backend backend, MvmEngine* engine = nullptr,
                           const GemmOptions& options = {});

} // namespace optomvm
