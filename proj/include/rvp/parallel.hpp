#pragma once

#include <cstddef>
#include <functional>

namespace rvp {

/// Worker count used by parallel_for; defaults to 1.
void set_thread_count(int n);
int thread_count();

/// Runs body(begin, end) over fixed chunks of [0, n). Chunk boundaries depend
/// only on n, so results written per index are independent of the thread count.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body);

/// Sum of term(i) for i in [0, n): compensated partial sums over fixed chunks,
/// combined in chunk order. Bit-identical for any thread count.
double deterministic_sum(std::size_t n, const std::function<double(std::size_t)>& term);

}  // namespace rvp
