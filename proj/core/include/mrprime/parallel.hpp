#pragma once

#include <cstdint>
#include <functional>

namespace mrprime {

/// Process-wide worker count used by parallel_for when callers pass threads <= 0.
/// Defaults to the hardware concurrency; clamped to at least 1.
void set_num_threads(int n);
int num_threads();

/// Runs fn(i) for i in [0, n). Work is split into contiguous chunks, one per
/// worker. Determinism contract: fn must write only to slots owned by index i;
/// any cross-index reduction happens at the call site in index order.
void parallel_for(std::int64_t n, const std::function<void(std::int64_t)>& fn,
                  int threads = 0);

} // namespace mrprime
