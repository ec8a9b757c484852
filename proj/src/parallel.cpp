#include "rvp/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <thread>
#include <vector>

#include "rvp/quadrature.hpp"

namespace rvp {

namespace {

std::atomic<int> g_threads{1};
constexpr std::size_t kChunk = 4096;

}  // namespace

void set_thread_count(int n) { g_threads = std::max(1, n); }

int thread_count() { return g_threads; }

void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body)
{
    const std::size_t chunks = (n + kChunk - 1) / kChunk;
    const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(g_threads.load()), chunks);
    auto run_chunk = [&](std::size_t c) { body(c * kChunk, std::min(n, (c + 1) * kChunk)); };
    if (workers <= 1) {
        for (std::size_t c = 0; c < chunks; ++c) run_chunk(c);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t t = 0; t < workers; ++t)
        pool.emplace_back([&] {
            for (std::size_t c = next++; c < chunks; c = next++) run_chunk(c);
        });
    for (auto& th : pool) th.join();
}

double deterministic_sum(std::size_t n, const std::function<double(std::size_t)>& term)
{
    const std::size_t chunks = (n + kChunk - 1) / kChunk;
    std::vector<double> partial(chunks, 0.0);
    parallel_for(n, [&](std::size_t b, std::size_t e) {
        quad::KahanSum s;
        for (std::size_t i = b; i < e; ++i) s.add(term(i));
        partial[b / kChunk] = s.value();
    });
    return quad::kahan_sum(partial);
}

}  // namespace rvp
