#pragma once

#include "mrprime/grid.hpp"
#include "mrprime/masks.hpp"

namespace mrprime {

struct CsConfig {
  double lambda = 0.005;    // TV regularization weight
  int outer_iters = 60;     // proximal-gradient iterations
  int prox_inner_iters = 25; // Chambolle dual iterations per prox
  double step_size = 1.0;   // data-term Lipschitz constant is 1 (orthonormal F, binary M)
  bool use_fista = false;   // optional Nesterov momentum
};

/// Isotropic total variation (forward differences, Neumann boundary).
double tv_value(const Image& x);

/// Approximate prox of weight*TV via Chambolle's dual projection (tau = 1/4).
/// weight = 0 returns y unchanged.
Image tv_denoise(const Image& y, double weight, int inner_iters);

/// 0.5*||M o F(x) - k_us||^2 + lambda*TV(x), the objective cs_reconstruct descends.
double cs_objective(const Image& x, const ComplexGrid& k_us, const Mask& mask, double lambda);

/// Proximal-gradient (optionally FISTA) reconstruction from undersampled
/// k-space, initialized at zero-fill, non-negative-clamped at the end.
Image cs_reconstruct(const ComplexGrid& k_us, const Mask& mask, const CsConfig& config = {});

} // namespace mrprime
