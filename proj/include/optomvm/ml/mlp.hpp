#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "optomvm/gemm.hpp"
#include "optomvm/matrix.hpp"
#include "optomvm/ml/adam.hpp"
#include "optomvm/ml/linear.hpp"

namespace optomvm {

/// Two-layer MLP without a nonlinear activation: logits = W2 (W1 x + b1) + b2.
struct Mlp2 {
    Mat w1;   // h x d
    Vec b1;   // h
    Mat w2;   // c x h
    Vec b2;   // c

    int input_dim() const { return w1.cols; }
    int hidden_dim() const { return w1.rows; }
    int classes() const { return w2.rows; }
};

Mlp2 init_mlp(int input_dim, int hidden_dim, int classes, std::uint64_t seed);

/// Row-per-sample logits; both layer multiplies run through the chosen
/// gemm backend.
Mat mlp_forward(const Mlp2& model, const Mat& x, Backend backend = Backend::oracle,
                MvmEngine* engine = nullptr, const GemmOptions& options = {});

/// Mean softmax negative log likelihood.
double nll_softmax_loss(const Mat& logits, std::span<const int> labels);

struct Mlp2Grads {
    Mat w1;
    Vec b1;
    Mat w2;
    Vec b2;
};

/// Analytic gradients of the NLL loss; exact matrix expressions since the
/// network is linear end to end.
Mlp2Grads mlp_gradients(const Mlp2& model, const Mat& x, std::span<const int> labels);

/// Minibatch Adam in exact arithmetic (training stays on conventional
/// hardware; only inference goes through the analog backend).
Mlp2 train_mlp2(const Mat& x, const std::vector<int>& labels, Mlp2 model,
                const AdamConfig& adam, int epochs, int batch_size, std::uint64_t shuffle_seed,
                std::vector<double>* loss_history = nullptr);

/// Argmax classification; loss is the NLL of the backend-computed logits.
Evaluation evaluate_mlp(const Mlp2& model, const Mat& x, const std::vector<int>& labels,
                        Backend backend, MvmEngine* engine = nullptr,
                        const GemmOptions& options = {});

// Checkpoint: one-line versioned header, then row-major little-endian
// doubles for w1, b1, w2, b2.
void save_mlp(const std::filesystem::path& path, const Mlp2& model);
Mlp2 load_mlp(const std::filesystem::path& path);

} // namespace optomvm
