#include <doctest.h>

#include <cmath>
#include <vector>

#include "optomvm/errors.hpp"
#include "optomvm/ml/linear.hpp"

using namespace optomvm;

namespace {

// Test-side oracle: ridge-free least squares via normal equations with
// Gaussian elimination.
Mat normal_equation_weights(const Mat& x, const Mat& targets) {
    Mat xb(x.rows, x.cols + 1);
    for (int r = 0; r < x.rows; ++r) {
        for (int c = 0; c < x.cols; ++c) xb(r, c) = x(r, c);
        xb(r, x.cols) = 1.0;
    }
    const int d = xb.cols;
    Mat gram(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
            double acc = 0.0;
            for (int r = 0; r < xb.rows; ++r) acc += xb(r, i) * xb(r, j);
            gram(i, j) = acc;
        }
    Mat rhs(d, targets.cols);
    for (int i = 0; i < d; ++i)
        for (int k = 0; k < targets.cols; ++k) {
            double acc = 0.0;
            for (int r = 0; r < xb.rows; ++r) acc += xb(r, i) * targets(r, k);
            rhs(i, k) = acc;
        }
    for (int col = 0; col < d; ++col) {
        int pivot = col;
        for (int r = col + 1; r < d; ++r)
            if (std::fabs(gram(r, col)) > std::fabs(gram(pivot, col))) pivot = r;
        for (int c = 0; c < d; ++c) std::swap(gram(col, c), gram(pivot, c));
        for (int c = 0; c < rhs.cols; ++c) std::swap(rhs(col, c), rhs(pivot, c));
        for (int r = 0; r < d; ++r) {
            if (r == col) continue;
            const double f = gram(r, col) / gram(col, col);
            for (int c = 0; c < d; ++c) gram(r, c) -= f * gram(col, c);
            for (int c = 0; c < rhs.cols; ++c) rhs(r, c) -= f * rhs(col, c);
        }
    }
    Mat w(d, targets.cols);
    for (int i = 0; i < d; ++i)
        for (int k = 0; k < targets.cols; ++k) w(i, k) = rhs(i, k) / gram(i, i);
    return w;
}

} // namespace

TEST_SUITE("linear") {

TEST_CASE("make_blobs determinism and geometry") {
    const BlobData a = make_blobs(3, 50, 0.5, 42);
    const BlobData b = make_blobs(3, 50, 0.5, 42);
    CHECK(a.x.a == b.x.a);
    CHECK(a.labels == b.labels);
    CHECK(a.x.rows == 150);
    CHECK(a.x.cols == 2);

    const BlobData c = make_blobs(3, 50, 0.5, 43);
    CHECK(a.x.a != c.x.a);

    // Vanishing spread puts every point on its cluster center.
    const BlobData tight = make_blobs(2, 20, 1e-12, 7);
    for (int cluster = 0; cluster < 2; ++cluster)
        for (int p = 1; p < 20; ++p) {
            const int base = cluster * 20;
            CHECK(tight.x(base + p, 0) == doctest::Approx(tight.x(base, 0)).epsilon(1e-6));
            CHECK(tight.x(base + p, 1) == doctest::Approx(tight.x(base, 1)).epsilon(1e-6));
        }
    CHECK_THROWS_AS(make_blobs(1, 10, 0.5, 1), domain_error);
    CHECK_THROWS_AS(make_blobs(2, 10, 0.0, 1), domain_error);
}

TEST_CASE("zero targets with zero init stay at the fixed point") {
    Mat x(10, 2);
    for (int r = 0; r < 10; ++r) {
        x(r, 0) = r;
        x(r, 1) = -r;
    }
    const Mat targets(10, 2);   // all zero
    AdamConfig adam;
    std::vector<double> history;
    const Mat w = train_linear_mse(x, targets, adam, 50, &history);
    for (double wi : w.a) CHECK(wi == 0.0);
    for (double loss : history) CHECK(loss == 0.0);
}

TEST_CASE("1-D regression recovers the slope") {
    Mat x(21, 1);
    Mat targets(21, 1);
    for (int r = 0; r <= 20; ++r) {
        const double xv = (r - 10) / 10.0;
        x(r, 0) = xv;
        targets(r, 0) = 2.0 * xv;
    }
    AdamConfig adam;
    adam.lr = 2e-3;
    const Mat w = train_linear_mse(x, targets, adam, 12000);
    CHECK(std::fabs(w(0, 0) - 2.0) < 1e-3);   // slope
    CHECK(std::fabs(w(1, 0)) < 1e-3);         // intercept
}

TEST_CASE("blobs training reaches the least-squares optimum") {
    const BlobData data = make_blobs(2, 80, 0.6, 9);
    const Mat targets = one_hot(data.labels, 2);
    const Mat w_star = normal_equation_weights(data.x, targets);
    Mat preds(data.x.rows, 2);
    {
        // loss at the closed-form optimum
        const Mat w = w_star;
        for (int r = 0; r < data.x.rows; ++r)
            for (int k = 0; k < 2; ++k)
                preds(r, k) = data.x(r, 0) * w(0, k) + data.x(r, 1) * w(1, k) + w(2, k);
    }
    const double loss_star = mse_loss(preds, targets);

    AdamConfig adam;
    adam.lr = 1e-4;
    std::vector<double> history;
    train_linear_mse(data.x, targets, adam, 60000, &history);
    CHECK(history.back() - loss_star < 1e-6);
    CHECK(history.back() >= loss_star - 1e-12);   // optimum is a lower bound
}

TEST_CASE("well-separated blobs classify perfectly") {
    // Center distance is at least 3 * spread by construction; tiny spread
    // makes the margin enormous.
    const BlobData data = make_blobs(2, 60, 0.05, 12);
    const Mat targets = one_hot(data.labels, 2);
    AdamConfig adam;
    const Mat w = train_linear_mse(data.x, targets, adam, 300);
    const Evaluation ev = evaluate_linear(data.x, data.labels, w, Backend::oracle);
    CHECK(ev.accuracy == 1.0);
}

TEST_CASE("oracle evaluation equals a direct forward pass") {
    const BlobData data = make_blobs(3, 30, 0.7, 21);
    const Mat targets = one_hot(data.labels, 3);
    AdamConfig adam;
    const Mat w = train_linear_mse(data.x, targets, adam, 150);
    const Evaluation ev = evaluate_linear(data.x, data.labels, w, Backend::oracle);
    // Direct forward pass outside the gemm path.
    Mat preds(data.x.rows, 3);
    for (int r = 0; r < data.x.rows; ++r)
        for (int k = 0; k < 3; ++k)
            preds(r, k) = data.x(r, 0) * w(0, k) + data.x(r, 1) * w(1, k) + w(2, k);
    CHECK(std::fabs(ev.loss - mse_loss(preds, targets)) < 1e-12);

    // Confusion rows sum to the per-class sample counts.
    for (int c = 0; c < 3; ++c) {
        double row_sum = 0.0;
        for (int k = 0; k < 3; ++k) row_sum += ev.confusion(c, k);
        CHECK(row_sum == 30.0);
    }
}

TEST_CASE("analog evaluation changes values, never shapes or label domains") {
    const BlobData data = make_blobs(3, 40, 0.7, 33);
    const Mat targets = one_hot(data.labels, 3);
    AdamConfig adam;
    const Mat w = train_linear_mse(data.x, targets, adam, 150);
    const Evaluation oracle_ev = evaluate_linear(data.x, data.labels, w, Backend::oracle);

    ArrayConfig hw;
    hw.n = 8;
    hw.variation.p = 0.2;
    MvmEngine eng(hw, 91);
    eng.calibrate(1);
    const Evaluation analog_ev =
        evaluate_linear(data.x, data.labels, w, Backend::analog, &eng);
    CHECK(analog_ev.predictions.size() == oracle_ev.predictions.size());
    CHECK(analog_ev.confusion.rows == 3);
    CHECK(analog_ev.confusion.cols == 3);
    for (int p : analog_ev.predictions) {
        CHECK(p >= 0);
        CHECK(p < 3);
    }
    CHECK(std::isfinite(analog_ev.loss));
    CHECK(std::fabs(analog_ev.loss - oracle_ev.loss) / oracle_ev.loss < 0.05);
}

TEST_CASE("training reports divergence as a numeric error") {
    Mat x(4, 1);
    x(0, 0) = 1e200;
    x(1, 0) = -1e200;
    x(2, 0) = 1e200;
    x(3, 0) = -1e200;
    Mat t(4, 1);
    for (double& v : t.a) v = 1e200;
    AdamConfig adam;
    adam.lr = 1e10;
    CHECK_THROWS_AS(train_linear_mse(x, t, adam, 200), numeric_error);
}

}
