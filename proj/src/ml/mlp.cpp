#include "optomvm/ml/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

#include "optomvm/errors.hpp"
#include "optomvm/rng.hpp"

namespace optomvm {

namespace {

Mat add_row_bias(Mat m, const Vec& bias) {
    if (static_cast<int>(bias.size()) != m.cols)
        throw domain_error("mlp: bias length mismatch");
    for (int r = 0; r < m.rows; ++r)
        for (int c = 0; c < m.cols; ++c) m(r, c) += bias[c];
    return m;
}

// Row-wise softmax with max-shift.
Mat softmax_rows(const Mat& logits) {
    Mat p = logits;
    for (int r = 0; r < p.rows; ++r) {
        double mx = p(r, 0);
        for (int c = 1; c < p.cols; ++c) mx = std::max(mx, p(r, c));
        double sum = 0.0;
        for (int c = 0; c < p.cols; ++c) {
            p(r, c) = std::exp(p(r, c) - mx);
            sum += p(r, c);
        }
        for (int c = 0; c < p.cols; ++c) p(r, c) /= sum;
    }
    return p;
}

} // namespace

Mlp2 init_mlp(int input_dim, int hidden_dim, int classes, std::uint64_t seed) {
    if (input_dim < 1 || hidden_dim < 1 || classes < 2)
        throw domain_error("init_mlp: bad dimensions");
    Mlp2 m;
    m.w1 = Mat(hidden_dim, input_dim);
    m.b1.assign(hidden_dim, 0.0);
    m.w2 = Mat(classes, hidden_dim);
    m.b2.assign(classes, 0.0);
    RngStream rng(derive_seed(seed, 0x3070));
    const double s1 = 1.0 / std::sqrt(static_cast<double>(input_dim));
    for (double& x : m.w1.a) x = rng.gaussian(0.0, s1);
    const double s2 = 1.0 / std::sqrt(static_cast<double>(hidden_dim));
    for (double& x : m.w2.a) x = rng.gaussian(0.0, s2);
    return m;
}

Mat mlp_forward(const Mlp2& model, const Mat& x, Backend backend, MvmEngine* engine,
                const GemmOptions& options) {
    if (x.cols != model.input_dim()) throw domain_error("mlp_forward: input width mismatch");
    const Mat w1t = transpose(model.w1);
    const Mat hidden = add_row_bias(gemm(x, w1t, backend, engine, options), model.b1);
    const Mat w2t = transpose(model.w2);
    return add_row_bias(gemm(hidden, w2t, backend, engine, options), model.b2);
}

double nll_softmax_loss(const Mat& logits, std::span<const int> labels) {
    if (static_cast<int>(labels.size()) != logits.rows)
        throw domain_error("nll_softmax_loss: label count mismatch");
    const Mat p = softmax_rows(logits);
    double loss = 0.0;
    for (int r = 0; r < p.rows; ++r) {
        if (labels[r] < 0 || labels[r] >= p.cols)
            throw domain_error("nll_softmax_loss: label out of range");
        loss -= std::log(std::max(p(r, labels[r]), 1e-300));
    }
    return loss / static_cast<double>(p.rows);
}

Mlp2Grads mlp_gradients(const Mlp2& model, const Mat& x, std::span<const int> labels) {
    const int ns = x.rows;
    if (static_cast<int>(labels.size()) != ns)
        throw domain_error("mlp_gradients: label count mismatch");
    const Mat hidden = add_row_bias(matmul(x, transpose(model.w1)), model.b1);   // ns x h
    const Mat logits = add_row_bias(matmul(hidden, transpose(model.w2)), model.b2);

    Mat dlogits = softmax_rows(logits);   // ns x c
    for (int r = 0; r < ns; ++r) dlogits(r, labels[r]) -= 1.0;
    for (double& g : dlogits.a) g /= static_cast<double>(ns);

    Mlp2Grads grads;
    grads.w2 = matmul(transpose(dlogits), hidden);            // c x h
    grads.b2.assign(model.b2.size(), 0.0);
    for (int r = 0; r < ns; ++r)
        for (int c = 0; c < dlogits.cols; ++c) grads.b2[c] += dlogits(r, c);

    const Mat dhidden = matmul(dlogits, model.w2);            // ns x h
    grads.w1 = matmul(transpose(dhidden), x);                 // h x d
    grads.b1.assign(model.b1.size(), 0.0);
    for (int r = 0; r < ns; ++r)
        for (int c = 0; c < dhidden.cols; ++c) grads.b1[c] += dhidden(r, c);
    return grads;
}

namespace {

// Flat parameter vector layout: w1, b1, w2, b2.
std::vector<double> flatten(const Mlp2& m) {
    std::vector<double> flat;
    flat.reserve(m.w1.a.size() + m.b1.size() + m.w2.a.size() + m.b2.size());
    flat.insert(flat.end(), m.w1.a.begin(), m.w1.a.end());
    flat.insert(flat.end(), m.b1.begin(), m.b1.end());
    flat.insert(flat.end(), m.w2.a.begin(), m.w2.a.end());
    flat.insert(flat.end(), m.b2.begin(), m.b2.end());
    return flat;
}

void unflatten(const std::vector<double>& flat, Mlp2& m) {
    std::size_t at = 0;
    std::copy_n(flat.begin() + at, m.w1.a.size(), m.w1.a.begin());
    at += m.w1.a.size();
    std::copy_n(flat.begin() + at, m.b1.size(), m.b1.begin());
    at += m.b1.size();
    std::copy_n(flat.begin() + at, m.w2.a.size(), m.w2.a.begin());
    at += m.w2.a.size();
    std::copy_n(flat.begin() + at, m.b2.size(), m.b2.begin());
}

} // namespace

Mlp2 train_mlp2(const Mat& x, const std::vector<int>& labels, Mlp2 model,
                const AdamConfig& adam, int epochs, int batch_size, std::uint64_t shuffle_seed,
                std::vector<double>* loss_history) {
    const int ns = x.rows;
    if (static_cast<int>(labels.size()) != ns) throw domain_error("train_mlp2: label count mismatch");
    if (batch_size < 1) throw domain_error("train_mlp2: batch size must be >= 1");
    if (epochs < 0) throw domain_error("train_mlp2: epochs must be >= 0");

    std::vector<double> params = flatten(model);
    Adam opt(adam, params.size());
    std::vector<int> order(ns);
    std::iota(order.begin(), order.end(), 0);
    RngStream shuffle_rng(derive_seed(shuffle_seed, 0x5481));
    if (loss_history) loss_history->clear();

    for (int epoch = 0; epoch < epochs; ++epoch) {
        // Fisher-Yates with the deterministic stream.
        for (int i = ns - 1; i > 0; --i) {
            const int j = static_cast<int>(shuffle_rng.next_u64() % static_cast<std::uint64_t>(i + 1));
            std::swap(order[i], order[j]);
        }
        double epoch_loss = 0.0;
        int batches = 0;
        for (int start = 0; start < ns; start += batch_size) {
            const int count = std::min(batch_size, ns - start);
            Mat bx(count, x.cols);
            std::vector<int> by(count);
            for (int r = 0; r < count; ++r) {
                const int src = order[start + r];
                for (int c = 0; c < x.cols; ++c) bx(r, c) = x(src, c);
                by[r] = labels[src];
            }
            unflatten(params, model);
            const Mlp2Grads grads = mlp_gradients(model, bx, by);
            const Mat logits = mlp_forward(model, bx);
            const double loss = nll_softmax_loss(logits, by);
            if (!std::isfinite(loss)) throw numeric_error("train_mlp2: loss diverged");
            epoch_loss += loss;
            ++batches;

            std::vector<double> flat_grads;
            flat_grads.reserve(params.size());
            flat_grads.insert(flat_grads.end(), grads.w1.a.begin(), grads.w1.a.end());
            flat_grads.insert(flat_grads.end(), grads.b1.begin(), grads.b1.end());
            flat_grads.insert(flat_grads.end(), grads.w2.a.begin(), grads.w2.a.end());
            flat_grads.insert(flat_grads.end(), grads.b2.begin(), grads.b2.end());
            opt.step(params, flat_grads);
        }
        if (loss_history) loss_history->push_back(epoch_loss / std::max(1, batches));
    }
    unflatten(params, model);
    return model;
}

Evaluation evaluate_mlp(const Mlp2& model, const Mat& x, const std::vector<int>& labels,
                        Backend backend, MvmEngine* engine, const GemmOptions& options) {
    if (static_cast<int>(labels.size()) != x.rows)
        throw domain_error("evaluate_mlp: label count mismatch");
    const Mat logits = mlp_forward(model, x, backend, engine, options);
    const int classes = model.classes();
    Evaluation ev;
    ev.confusion = Mat(classes, classes);
    ev.predictions.resize(labels.size());
    int correct = 0;
    for (int r = 0; r < logits.rows; ++r) {
        int best = 0;
        for (int c = 1; c < classes; ++c)
            if (logits(r, c) > logits(r, best)) best = c;
        ev.predictions[r] = best;
        ev.confusion(labels[r], best) += 1.0;
        if (best == labels[r]) ++correct;
    }
    ev.loss = nll_softmax_loss(logits, labels);
    ev.accuracy = static_cast<double>(correct) / static_cast<double>(labels.size());
    return ev;
}

void save_mlp(const std::filesystem::path& path, const Mlp2& model) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw format_error("save_mlp: cannot open " + path.string());
    out << "optomvm-mlp v1 " << model.input_dim() << " " << model.hidden_dim() << " "
        << model.classes() << "\n";
    auto write_block = [&](const double* data, std::size_t count) {
        out.write(reinterpret_cast<const char*>(data),
                  static_cast<std::streamsize>(count * sizeof(double)));
    };
    write_block(model.w1.a.data(), model.w1.a.size());
    write_block(model.b1.data(), model.b1.size());
    write_block(model.w2.a.data(), model.w2.a.size());
    write_block(model.b2.data(), model.b2.size());
    if (!out) throw format_error("save_mlp: write failed for " + path.string());
}

Mlp2 load_mlp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw format_error("load_mlp: cannot open " + path.string());
    std::string tag, version;
    int d = 0, h = 0, c = 0;
    in >> tag >> version >> d >> h >> c;
    if (tag != "optomvm-mlp" || version != "v1" || d < 1 || h < 1 || c < 2)
        throw format_error("load_mlp: " + path.string() + ": bad checkpoint header");
    in.ignore(1, '\n');
    Mlp2 m;
    m.w1 = Mat(h, d);
    m.b1.assign(h, 0.0);
    m.w2 = Mat(c, h);
    m.b2.assign(c, 0.0);
    auto read_block = [&](double* data, std::size_t count) {
        in.read(reinterpret_cast<char*>(data), static_cast<std::streamsize>(count * sizeof(double)));
        if (!in)
            throw format_error("load_mlp: " + path.string() + ": truncated parameter block");
    };
    read_block(m.w1.a.data(), m.w1.a.size());
    read_block(m.b1.data(), m.b1.size());
    read_block(m.w2.a.data(), m.w2.a.size());
    read_block(m.b2.data(), m.b2.size());
    return m;
}

} // namespace optomvm
