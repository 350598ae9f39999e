#include "gih/parallel.hpp"

#include <algorithm>
#include <cstdlib>

namespace gih {

namespace {
int g_thread_count = -1;  // -1 = unresolved

int resolve_default() {
    if (const char* env = std::getenv("GIH_THREADS")) {
        int n = std::atoi(env);
        if (n > 0) return n;
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}
}  // namespace

int thread_count() {
    if (g_thread_count <= 0) g_thread_count = resolve_default();
    return g_thread_count;
}

void set_thread_count(int n) { g_thread_count = n > 0 ? n : -1; }

void run_blocks(std::size_t n_items, std::size_t block_size,
                const std::function<void(std::size_t, std::size_t, std::size_t)>& fn,
                int n_threads) {
    if (n_items == 0) return;
    if (block_size == 0) block_size = 1;
    std::size_t n_blocks = (n_items + block_size - 1) / block_size;
    int workers = n_threads > 0 ? n_threads : thread_count();
    workers = static_cast<int>(std::min<std::size_t>(workers, n_blocks));

    if (workers <= 1) {
        for (std::size_t b = 0; b < n_blocks; ++b)
            fn(b, b * block_size, std::min(n_items, (b + 1) * block_size));
        return;
    }

    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (;;) {
            std::size_t b = next.fetch_add(1);
            if (b >= n_blocks) return;
            fn(b, b * block_size, std::min(n_items, (b + 1) * block_size));
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers - 1);
    for (int t = 1; t < workers; ++t) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();
}

}  // namespace gih
