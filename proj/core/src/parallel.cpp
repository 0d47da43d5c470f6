#include "mrprime/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace mrprime {

namespace {
std::atomic<int> g_threads{0};

int default_threads() {
  const unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : static_cast<int>(hc);
}
} // namespace

void set_num_threads(int n) { g_threads.store(n > 0 ? n : 0); }

int num_threads() {
  const int n = g_threads.load();
  return n > 0 ? n : default_threads();
}

void parallel_for(std::int64_t n, const std::function<void(std::int64_t)>& fn, int threads) {
  if (n <= 0) return;
  int t = threads > 0 ? threads : num_threads();
  t = static_cast<int>(std::min<std::int64_t>(t, n));
  if (t <= 1) {
    for (std::int64_t i = 0; i < n; ++i) fn(i);
    return;
  }
  const std::int64_t chunk = (n + t - 1) / t;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(t));
  std::exception_ptr err;
  std::atomic<bool> has_err{false};
  std::mutex err_mu;
  for (int w = 0; w < t; ++w) {
    const std::int64_t b = static_cast<std::int64_t>(w) * chunk;
    const std::int64_t e = std::min<std::int64_t>(b + chunk, n);
    if (b >= e) break;
    pool.emplace_back([&, b, e]() {
      try {
        for (std::int64_t i = b; i < e; ++i) fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mu);
        if (!has_err.exchange(true)) err = std::current_exception();
      }
    });
  }
  for (std::thread& th : pool) th.join();
  if (has_err.load()) std::rethrow_exception(err);
}

} // namespace mrprime
