#pragma once

#include <cstdint>
#include <vector>

#include "optomvm/matrix.hpp"
#include "optomvm/mvm.hpp"

namespace optomvm {

enum class Backend { oracle, analog };

/// Block partitioning of an (m x k) * (k x n) product onto an N x N tile.
/// Padded dimensions are the smallest multiples of N covering the originals;
/// padding regions are zero.
struct BlockPlan {
    int m = 0, k = 0, n = 0;
    int tile = 0;
    int grid_m = 0, grid_k = 0, grid_n = 0;
    int pad_m = 0, pad_k = 0, pad_n = 0;
};

BlockPlan plan_blocks(int m, int k, int n, int tile);

/// Split choice for the divide-and-conquer recursion. Results are identical
/// for any order because accumulation within each output block is fixed in
/// ascending k-block order.
enum class SplitOrder { largest_first, smallest_first };

struct GemmOptions {
    int jobs = 1;
    SplitOrder split = SplitOrder::largest_first;
};

/// Blocked C = A * B through the N x N tile. The oracle backend runs the
/// exact per-tile multiply through the same block structure; the analog
/// backend streams each B-column of each tile as one MVM call on `engine`.
/// Analog tile noise comes from per-tile derived streams, so results are
/// byte-identical at any job count.
Mat gemm(const Mat& a, const Mat& b, Backend backend, MvmEngine* engine = nullptr,
         const GemmOptions& options = {});

} // namespace optomvm
