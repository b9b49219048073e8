#include "optomvm/ml/linear.hpp"

#include <algorithm>
#include <cmath>

#include "optomvm/errors.hpp"
#include "optomvm/rng.hpp"

namespace optomvm {

namespace {

constexpr std::uint64_t kCenterTag = 0xB10B;
constexpr std::uint64_t kPointTag = 0xB10C;

Mat append_bias(const Mat& x) {
    Mat out(x.rows, x.cols + 1);
    for (int r = 0; r < x.rows; ++r) {
        for (int c = 0; c < x.cols; ++c) out(r, c) = x(r, c);
        out(r, x.cols) = 1.0;
    }
    return out;
}

} // namespace

BlobData make_blobs(int k, int n_per, double spread, std::uint64_t seed, int dim) {
    if (k < 2) throw domain_error("make_blobs: need k >= 2 clusters");
    if (n_per < 1) throw domain_error("make_blobs: need n_per >= 1");
    if (!(spread > 0.0)) throw domain_error("make_blobs: spread must be positive");
    if (dim < 1) throw domain_error("make_blobs: dim must be >= 1");

    // Centers drawn uniformly in [-4, 4]^dim, re-drawn until pairwise
    // separation reaches 3 * spread (deterministic given the seed).
    RngStream center_rng(derive_seed(seed, kCenterTag));
    Mat centers(k, dim);
    const double min_sep = 3.0 * spread;
    for (int c = 0; c < k; ++c) {
        for (int attempt = 0; attempt < 10000; ++attempt) {
            for (int d = 0; d < dim; ++d) centers(c, d) = center_rng.uniform(-4.0, 4.0);
            bool ok = true;
            for (int prev = 0; prev < c && ok; ++prev) {
                double dist2 = 0.0;
                for (int d = 0; d < dim; ++d) {
                    const double diff = centers(c, d) - centers(prev, d);
                    dist2 += diff * diff;
                }
                ok = dist2 >= min_sep * min_sep;
            }
            if (ok) break;
        }
    }

    BlobData data;
    data.k = k;
    data.x = Mat(k * n_per, dim);
    data.labels.resize(static_cast<std::size_t>(k) * n_per);
    RngStream point_rng(derive_seed(seed, kPointTag));
    for (int c = 0; c < k; ++c) {
        for (int p = 0; p < n_per; ++p) {
            const int row = c * n_per + p;
            for (int d = 0; d < dim; ++d)
                data.x(row, d) = centers(c, d) + point_rng.gaussian(0.0, spread);
            data.labels[row] = c;
        }
    }
    return data;
}

Mat one_hot(const std::vector<int>& labels, int classes) {
    Mat t(static_cast<int>(labels.size()), classes);
    for (std::size_t r = 0; r < labels.size(); ++r) {
        if (labels[r] < 0 || labels[r] >= classes)
            throw domain_error("one_hot: label out of range");
        t(static_cast<int>(r), labels[r]) = 1.0;
    }
    return t;
}

double mse_loss(const Mat& preds, const Mat& targets) {
    if (preds.rows != targets.rows || preds.cols != targets.cols)
        throw domain_error("mse_loss: shape mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < preds.a.size(); ++i) {
        const double d = preds.a[i] - targets.a[i];
        acc += d * d;
    }
    return acc / static_cast<double>(preds.a.size());
}

Mat train_linear_mse(const Mat& x, const Mat& targets, const AdamConfig& adam, int epochs,
                     std::vector<double>* loss_history) {
    if (x.rows != targets.rows) throw domain_error("train_linear_mse: sample count mismatch");
    if (epochs < 0) throw domain_error("train_linear_mse: epochs must be >= 0");
    const Mat xb = append_bias(x);
    const int d = xb.cols, c = targets.cols, ns = xb.rows;

    Mat w(d, c);   // zero init
    Adam opt(adam, w.a.size());
    if (loss_history) loss_history->clear();
    const double grad_scale = 2.0 / (static_cast<double>(ns) * c);
    for (int epoch = 0; epoch < epochs; ++epoch) {
        const Mat preds = matmul(xb, w);
        const double loss = mse_loss(preds, targets);
        if (!std::isfinite(loss)) throw numeric_error("train_linear_mse: loss diverged");
        if (loss_history) loss_history->push_back(loss);
        // grad = 2/(ns*c) * X^T (X w - T)
        Mat grad(d, c);
        for (int r = 0; r < ns; ++r)
            for (int k = 0; k < c; ++k) {
                const double resid = (preds(r, k) - targets(r, k)) * grad_scale;
                if (resid == 0.0) continue;
                for (int col = 0; col < d; ++col) grad(col, k) += xb(r, col) * resid;
            }
        opt.step(w.a, grad.a);
    }
    return w;
}

Mat predict_linear(const Mat& x, const Mat& weights, Backend backend, MvmEngine* engine,
                   const GemmOptions& options) {
    const Mat xb = append_bias(x);
    if (xb.cols != weights.rows)
        throw domain_error("predict_linear: weight shape does not match inputs");
    return gemm(xb, weights, backend, engine, options);
}

Evaluation evaluate_linear(const Mat& x, const std::vector<int>& labels, const Mat& weights,
                           Backend backend, MvmEngine* engine, const GemmOptions& options) {
    if (static_cast<int>(labels.size()) != x.rows)
        throw domain_error("evaluate_linear: label count mismatch");
    const int classes = weights.cols;
    const Mat preds = predict_linear(x, weights, backend, engine, options);
    Evaluation ev;
    ev.confusion = Mat(classes, classes);
    ev.predictions.resize(labels.size());
    int correct = 0;
    for (int r = 0; r < preds.rows; ++r) {
        int best = 0;
        for (int k = 1; k < classes; ++k)
            if (preds(r, k) > preds(r, best)) best = k;
        ev.predictions[r] = best;
        ev.confusion(labels[r], best) += 1.0;
        if (best == labels[r]) ++correct;
    }
    ev.loss = mse_loss(preds, one_hot(labels, classes));
    ev.accuracy = static_cast<double>(correct) / static_cast<double>(labels.size());
    return ev;
}

} // namespace optomvm
