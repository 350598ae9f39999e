#pragma once

#include <atomic>
#include <cstddef>
#include <functional>
#include <thread>
#include <vector>

namespace gih {

// Process-wide worker count; 0 means hardware concurrency. Resolved from the
// GIH_THREADS environment variable on first use, overridable by the CLI.
int thread_count();
void set_thread_count(int n);

// Runs fn(block_index, begin, end) over fixed-size blocks of [0, n_items).
// Blocks are claimed dynamically but indexed statically, so callers that
// accumulate one partial result per block and then fold the partials in
// block order get results that do not depend on the worker count.
void run_blocks(std::size_t n_items, std::size_t block_size,
                const std::function<void(std::size_t, std::size_t, std::size_t)>& fn,
                int n_threads = 0);

// Blocked map-reduce with a deterministic fold order. `make` produces the
// per-block accumulator, `fold(total, partial, block_index)` is applied in
// ascending block order on the calling thread.
template <typename T, typename MakeFn, typename BlockFn, typename FoldFn>
T parallel_block_reduce(std::size_t n_items, std::size_t block_size, MakeFn make, BlockFn block_fn,
                        FoldFn fold, int n_threads = 0) {
    std::size_t n_blocks = n_items == 0 ? 0 : (n_items + block_size - 1) / block_size;
    std::vector<T> partials(n_blocks);
    run_blocks(
        n_items, block_size,
        [&](std::size_t block, std::size_t begin, std::size_t end) {
            T acc = make();
            block_fn(acc, begin, end);
            partials[block] = std::move(acc);
        },
        n_threads);
    T total = make();
    for (std::size_t b = 0; b < n_blocks; ++b) fold(total, partials[b], b);
    return total;
}

}  // namespace gih
