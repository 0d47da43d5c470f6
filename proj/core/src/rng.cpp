#include "mrprime/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace mrprime {

std::int64_t Rng::uniform_int(std::int64_t lo, std::int64_t hi) {
  if (lo > hi) throw std::invalid_argument("uniform_int: empty range");
  const std::uint64_t range = static_cast<std::uint64_t>(hi - lo) + 1;
  if (range == 0) return static_cast<std::int64_t>(gen_()); // full 64-bit span
  std::uint64_t mask = ~0ull;
  if ((range & (range - 1)) == 0) {
    mask = range - 1;
  } else {
    mask = range;
    mask |= mask >> 1;
    mask |= mask >> 2;
    mask |= mask >> 4;
    mask |= mask >> 8;
    mask |= mask >> 16;
    mask |= mask >> 32;
  }
  std::uint64_t x;
  do {
    x = gen_() & mask;
  } while (x >= range);
  return lo + static_cast<std::int64_t>(x);
}

double Rng::gaussian() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u, v, s;
  do {
    u = 2.0 * uniform() - 1.0;
    v = 2.0 * uniform() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  const double m = std::sqrt(-2.0 * std::log(s) / s);
  spare_ = v * m;
  has_spare_ = true;
  return u * m;
}

std::vector<int> Rng::sample_without_replacement(int n, int k) {
  if (k < 0 || k > n) throw std::invalid_argument("sample_without_replacement: k out of range");
  // Floyd's algorithm: k draws regardless of n, deterministic given the stream.
  std::vector<bool> taken(static_cast<std::size_t>(n), false);
  for (int i = n - k; i < n; ++i) {
    const auto j = static_cast<int>(uniform_int(0, i));
    if (taken[static_cast<std::size_t>(j)])
      taken[static_cast<std::size_t>(i)] = true;
    else
      taken[static_cast<std::size_t>(j)] = true;
  }
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(k));
  for (int i = 0; i < n; ++i)
    if (taken[static_cast<std::size_t>(i)]) out.push_back(i);
  return out;
}

std::uint64_t fnv1a64(const void* data, std::size_t n, std::uint64_t h) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= static_cast<std::uint64_t>(p[i]);
    h *= 1099511628211ull;
  }
  return h;
}

std::uint64_t derive_seed(std::uint64_t root, std::string_view tag, std::uint64_t index) {
  unsigned char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>((root >> (8 * i)) & 0xff);
  std::uint64_t h = fnv1a64(buf, 8);
  h = fnv1a64(tag.data(), tag.size(), h);
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>((index >> (8 * i)) & 0xff);
  return fnv1a64(buf, 8, h);
}

} // namespace mrprime
