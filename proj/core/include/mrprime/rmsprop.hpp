#pragma once

#include <vector>

#include "mrprime/tensor.hpp"

namespace mrprime {

struct RmspropConfig {
  double lr = 0.01;
  double alpha = 0.99;
  double eps = 1e-8;
};

/// RMSprop with a per-parameter running mean of squared gradients:
///   v <- alpha * v + (1 - alpha) * g^2
///   p <- p - lr * g / (sqrt(v) + eps)
class Rmsprop {
 public:
  Rmsprop(std::vector<Parameter> params, RmspropConfig cfg = {});

  void step();
  void zero_grad();

  double lr() const { return cfg_.lr; }
  void set_lr(double lr) { cfg_.lr = lr; }
  const RmspropConfig& config() const { return cfg_; }

  const std::vector<Parameter>& params() const { return params_; }
  /// Square-average buffers, parameter order; exposed for checkpointing.
  std::vector<std::vector<double>>& square_avg() { return sq_; }
  const std::vector<std::vector<double>>& square_avg() const { return sq_; }

 private:
  std::vector<Parameter> params_;
  std::vector<std::vector<double>> sq_;
  RmspropConfig cfg_;
};

} // namespace mrprime
