#pragma once

// Finite-difference gradient checking against the tape's analytic gradients.
//
// The scalar objective is mean |y - t| with targets t fixed at +-10, far from
// any op output here, so each output element carries a stable +-1/N weight
// under the central-difference perturbations and misrouted gradients cannot
// cancel.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include "mrprime/ops.hpp"
#include "mrprime/rng.hpp"
#include "mrprime/tensor.hpp"

namespace mrprime::testing {

inline Tensor pm10_targets(const std::vector<int>& shape, std::uint64_t seed) {
  Tensor t(shape);
  Rng rng(seed);
  for (auto& v : t.data()) v = rng.uniform() < 0.5 ? -10.0 : 10.0;
  return t;
}

inline double mean_abs_diff(const Tensor& y, const Tensor& t) {
  double s = 0.0;
  for (std::int64_t i = 0; i < y.numel(); ++i) s += std::abs(y.data()[i] - t.data()[i]);
  return s / static_cast<double>(y.numel());
}

inline Tensor random_uniform(std::vector<int> shape, std::uint64_t seed, double lo, double hi,
                             bool requires_grad = false) {
  Tensor t(std::move(shape), requires_grad);
  Rng rng(seed);
  for (auto& v : t.data()) v = rng.uniform(lo, hi);
  return t;
}

/// fn must rebuild the op output from the *current* values of the wrt tensors
/// each call (tape == nullptr for the finite-difference re-evaluations).
/// Returns the worst relative error between analytic and central-difference
/// gradients over every element of every wrt tensor.
inline double gradcheck_max_rel_err(const std::function<Tensor(Tape*)>& fn,
                                    std::vector<Tensor> wrt, std::uint64_t target_seed,
                                    double h = 1e-6) {
  Tape tape;
  Tensor y = fn(&tape);
  const Tensor t = pm10_targets(y.shape(), target_seed);
  Tensor loss = ops::l1_loss(&tape, y, t);
  tape.backward(loss);

  double worst = 0.0;
  for (Tensor& x : wrt) {
    const std::vector<double> analytic = x.grad(); // zeros if never touched
    for (std::int64_t i = 0; i < x.numel(); ++i) {
      const double orig = x.data()[i];
      x.data()[i] = orig + h;
      const double lp = mean_abs_diff(fn(nullptr), t);
      x.data()[i] = orig - h;
      const double lm = mean_abs_diff(fn(nullptr), t);
      x.data()[i] = orig;
      const double fd = (lp - lm) / (2.0 * h);
      const double a = analytic[i];
      const double err = std::abs(a - fd) / std::max({std::abs(a), std::abs(fd), 1.0});
      worst = std::max(worst, err);
    }
  }
  return worst;
}

} // namespace mrprime::testing
