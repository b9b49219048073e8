#include "optomvm/gemm.hpp"

#include <algorithm>
#include <thread>
#include <utility>

#include "optomvm/errors.hpp"
#include "optomvm/rng.hpp"

namespace optomvm {

BlockPlan plan_blocks(int m, int k, int n, int tile) {
    if (tile < 1) throw domain_error("plan_blocks: tile size must be >= 1");
    if (m < 1 || k < 1 || n < 1) throw domain_error("plan_blocks: dimensions must be positive");
    BlockPlan plan;
    plan.m = m;
    plan.k = k;
    plan.n = n;
    plan.tile = tile;
    plan.grid_m = (m + tile - 1) / tile;
    plan.grid_k = (k + tile - 1) / tile;
    plan.grid_n = (n + tile - 1) / tile;
    plan.pad_m = plan.grid_m * tile - m;
    plan.pad_k = plan.grid_k * tile - k;
    plan.pad_n = plan.grid_n * tile - n;
    return plan;
}

namespace {

struct GemmCtx {
    const Mat& a_pad;
    const Mat& b_pad;
    Mat& c_pad;
    const BlockPlan& plan;
    Backend backend;
    std::uint64_t noise_base;
};

// One (r, q, c) tile: C block (r, c) += A block (r, q) * B block (q, c).
// Analog mode streams each B column as one MVM with a per-call noise stream
// keyed by the tile coordinates, independent of execution order.
void run_tile(GemmCtx& ctx, MvmEngine* engine, int r, int q, int c) {
    const int tile = ctx.plan.tile;
    const int r0 = r * tile, q0 = q * tile, c0 = c * tile;
    if (ctx.backend == Backend::oracle) {
        for (int ii = 0; ii < tile; ++ii)
            for (int kk = 0; kk < tile; ++kk) {
                const double aik = ctx.a_pad(r0 + ii, q0 + kk);
                if (aik == 0.0) continue;
                for (int jj = 0; jj < tile; ++jj)
                    ctx.c_pad(r0 + ii, c0 + jj) += aik * ctx.b_pad(q0 + kk, c0 + jj);
            }
        return;
    }
    Mat a_tile(tile, tile);
    for (int ii = 0; ii < tile; ++ii)
        for (int kk = 0; kk < tile; ++kk) a_tile(ii, kk) = ctx.a_pad(r0 + ii, q0 + kk);
    Vec v(tile);
    for (int col = 0; col < tile; ++col) {
        for (int kk = 0; kk < tile; ++kk) v[kk] = ctx.b_pad(q0 + kk, c0 + col);
        const std::uint64_t call_id =
            (static_cast<std::uint64_t>(r) * ctx.plan.grid_k + q) * ctx.plan.grid_n + c;
        RngStream stream(derive_seed(ctx.noise_base, call_id, static_cast<std::uint64_t>(col)));
        const MvmResult res = engine->mvm(a_tile, v, &stream);
        for (int ii = 0; ii < tile; ++ii) ctx.c_pad(r0 + ii, c0 + col) += res.output[ii];
    }
}

// Divide and conquer over block index ranges. The k-axis halves run left
// then right so each output block accumulates in ascending q order.
void recurse(GemmCtx& ctx, MvmEngine* engine, int r0, int r1, int q0, int q1, int c0, int c1,
             SplitOrder order) {
    const int er = r1 - r0, eq = q1 - q0, ec = c1 - c0;
    if (er == 1 && eq == 1 && ec == 1) {
        run_tile(ctx, engine, r0, q0, c0);
        return;
    }
    int axis = -1;
    if (order == SplitOrder::largest_first) {
        int best = 0;
        if (er > best) best = er, axis = 0;
        if (eq > best) best = eq, axis = 1;
        if (ec > best) best = ec, axis = 2;
    } else {
        int best = 1 << 30;
        if (er > 1 && er < best) best = er, axis = 0;
        if (eq > 1 && eq < best) best = eq, axis = 1;
        if (ec > 1 && ec < best) best = ec, axis = 2;
    }
    switch (axis) {
        case 0: {
            const int mid = r0 + er / 2;
            recurse(ctx, engine, r0, mid, q0, q1, c0, c1, order);
            recurse(ctx, engine, mid, r1, q0, q1, c0, c1, order);
            break;
        }
        case 1: {
            const int mid = q0 + eq / 2;
            recurse(ctx, engine, r0, r1, q0, mid, c0, c1, order);
            recurse(ctx, engine, r0, r1, mid, q1, c0, c1, order);
            break;
        }
        default: {
            const int mid = c0 + ec / 2;
            recurse(ctx, engine, r0, r1, q0, q1, c0, mid, order);
            recurse(ctx, engine, r0, r1, q0, q1, mid, c1, order);
            break;
        }
    }
}

} // namespace

Mat gemm(const Mat& a, const Mat& b, Backend backend, MvmEngine* engine,
         const GemmOptions& options) {
    if (a.cols != b.rows)
        throw domain_error("gemm: inner dimensions disagree (" + std::to_string(a.cols) +
                           " vs " + std::to_string(b.rows) + ")");
    int tile = 8;
    std::uint64_t noise_base = 0;
    if (backend == Backend::analog) {
        if (!engine) throw state_error("gemm: analog backend requires an engine");
        if (!engine->calibrated()) throw state_error("gemm: engine not calibrated");
        tile = engine->array().n();
        noise_base = engine->next_gemm_noise_base();
    } else if (engine) {
        tile = engine->array().n();
    }
    const BlockPlan plan = plan_blocks(a.rows, a.cols, b.cols, tile);

    Mat a_pad(plan.grid_m * tile, plan.grid_k * tile);
    Mat b_pad(plan.grid_k * tile, plan.grid_n * tile);
    Mat c_pad(plan.grid_m * tile, plan.grid_n * tile);
    for (int i = 0; i < a.rows; ++i)
        for (int j = 0; j < a.cols; ++j) a_pad(i, j) = a(i, j);
    for (int i = 0; i < b.rows; ++i)
        for (int j = 0; j < b.cols; ++j) b_pad(i, j) = b(i, j);

    GemmCtx ctx{a_pad, b_pad, c_pad, plan, backend, noise_base};

    const int cells = plan.grid_m * plan.grid_n;
    const int jobs = std::max(1, options.jobs);
    if (backend == Backend::analog && jobs > 1 && cells > 1) {
        const int nthreads = std::min(jobs, cells);
        std::vector<std::thread> pool;
        pool.reserve(nthreads);
        for (int t = 0; t < nthreads; ++t) {
            pool.emplace_back([&, t]() {
                MvmEngine local = *engine;   // same fabrication and calibration
                for (int cell = t; cell < cells; cell += nthreads) {
                    const int r = cell / plan.grid_n;
                    const int c = cell % plan.grid_n;
                    for (int q = 0; q < plan.grid_k; ++q) run_tile(ctx, &local, r, q, c);
                }
            });
        }
        for (auto& th : pool) th.join();
    } else {
        recurse(ctx, engine, 0, plan.grid_m, 0, plan.grid_k, 0, plan.grid_n, options.split);
    }

    Mat c(a.rows, b.cols);
    for (int i = 0; i < c.rows; ++i)
        for (int j = 0; j < c.cols; ++j) c(i, j) = c_pad(i, j);
    return c;
}

} // namespace optomvm
