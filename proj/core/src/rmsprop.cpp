#include "mrprime/rmsprop.hpp"

#include <cmath>
#include <stdexcept>

namespace mrprime {

Rmsprop::Rmsprop(std::vector<Parameter> params, RmspropConfig cfg)
    : params_(std::move(params)), cfg_(cfg) {
  if (!(cfg_.lr > 0.0)) throw std::invalid_argument("rmsprop: lr must be positive");
  if (!(cfg_.alpha >= 0.0 && cfg_.alpha < 1.0))
    throw std::invalid_argument("rmsprop: alpha must lie in [0, 1)");
  if (!(cfg_.eps > 0.0)) throw std::invalid_argument("rmsprop: eps must be positive");
  sq_.reserve(params_.size());
  for (const Parameter& p : params_)
    sq_.emplace_back(static_cast<std::size_t>(p.tensor.numel()), 0.0);
}

void Rmsprop::step() {
  for (const Parameter& p : params_)
    if (!p.tensor.has_grad())
      throw std::runtime_error("rmsprop_step: missing gradient for parameter " + p.name);
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Tensor& t = params_[i].tensor;
    std::vector<double>& v = sq_[i];
    double* p = t.ptr();
    const double* g = t.grad().data();
    const std::int64_t n = t.numel();
    for (std::int64_t j = 0; j < n; ++j) {
      const std::size_t js = static_cast<std::size_t>(j);
      v[js] = cfg_.alpha * v[js] + (1.0 - cfg_.alpha) * g[j] * g[j];
      p[j] -= cfg_.lr * g[j] / (std::sqrt(v[js]) + cfg_.eps);
    }
    detail::check_finite(t, "rmsprop_step");
  }
}

void Rmsprop::zero_grad() {
  for (Parameter& p : params_) p.tensor.zero_grad();
}

} // namespace mrprime
