#include "mrprime/cs.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "mrprime/fft.hpp"
#include "mrprime/kspace.hpp"

namespace mrprime {

namespace {

// Forward differences with Neumann boundary (last row/col gradient = 0).
void grad2(const std::vector<double>& x, int H, int W, std::vector<double>& gx,
           std::vector<double>& gy) {
  for (int y = 0; y < H; ++y)
    for (int c = 0; c < W; ++c) {
      const std::size_t i = static_cast<std::size_t>(y) * W + c;
      gx[i] = c + 1 < W ? x[i + 1] - x[i] : 0.0;
      gy[i] = y + 1 < H ? x[i + static_cast<std::size_t>(W)] - x[i] : 0.0;
    }
}

// Negative adjoint of grad2: <grad x, p> = <x, -div p>.
void div2(const std::vector<double>& px, const std::vector<double>& py, int H, int W,
          std::vector<double>& out) {
  for (int y = 0; y < H; ++y)
    for (int c = 0; c < W; ++c) {
      const std::size_t i = static_cast<std::size_t>(y) * W + c;
      double d = 0.0;
      if (c == 0)
        d += px[i];
      else if (c == W - 1)
        d -= px[i - 1];
      else
        d += px[i] - px[i - 1];
      if (y == 0)
        d += py[i];
      else if (y == H - 1)
        d -= py[i - static_cast<std::size_t>(W)];
      else
        d += py[i] - py[i - static_cast<std::size_t>(W)];
      out[i] = d;
    }
}

} // namespace

double tv_value(const Image& x) {
  const int H = x.height, W = x.width;
  double s = 0.0;
  for (int y = 0; y < H; ++y)
    for (int c = 0; c < W; ++c) {
      const double dx = c + 1 < W ? x.at(y, c + 1) - x.at(y, c) : 0.0;
      const double dy = y + 1 < H ? x.at(y + 1, c) - x.at(y, c) : 0.0;
      s += std::hypot(dx, dy);
    }
  return s;
}

Image tv_denoise(const Image& y, double weight, int inner_iters) {
  if (weight < 0.0) throw std::invalid_argument("tv_denoise: weight must be >= 0");
  if (weight == 0.0 || inner_iters <= 0) return y;
  const int H = y.height, W = y.width;
  const std::size_t n = y.px.size();
  std::vector<double> px(n, 0.0), py(n, 0.0); // dual field
  std::vector<double> div(n, 0.0), gx(n, 0.0), gy(n, 0.0), work(n, 0.0);
  constexpr double tau = 0.25;
  for (int it = 0; it < inner_iters; ++it) {
    div2(px, py, H, W, div);
    for (std::size_t i = 0; i < n; ++i) work[i] = div[i] - y.px[i] / weight;
    grad2(work, H, W, gx, gy);
    for (std::size_t i = 0; i < n; ++i) {
      const double denom = 1.0 + tau * std::hypot(gx[i], gy[i]);
      px[i] = (px[i] + tau * gx[i]) / denom;
      py[i] = (py[i] + tau * gy[i]) / denom;
    }
  }
  div2(px, py, H, W, div);
  Image out(H, W);
  for (std::size_t i = 0; i < n; ++i) out.px[i] = y.px[i] - weight * div[i];
  return out;
}

double cs_objective(const Image& x, const ComplexGrid& k_us, const Mask& mask, double lambda) {
  const ComplexGrid r = apply_mask(fft2c(x), mask);
  double data = 0.0;
  for (std::size_t i = 0; i < r.v.size(); ++i) {
    const std::complex<double> d = r.v[i] - k_us.v[i];
    data += std::norm(d);
  }
  return 0.5 * data + lambda * tv_value(x);
}

Image cs_reconstruct(const ComplexGrid& k_us, const Mask& mask, const CsConfig& config) {
  if (k_us.width != mask.width)
    throw std::invalid_argument("cs_reconstruct: mask width does not match k-space width");
  if (!(config.step_size > 0.0 && config.step_size <= 1.0))
    throw std::invalid_argument("cs_reconstruct: step_size must lie in (0, 1]");
  if (config.lambda < 0.0) throw std::invalid_argument("cs_reconstruct: lambda must be >= 0");
  const int H = k_us.height, W = k_us.width;
  Image x = zero_fill_recon(k_us);
  Image z = x;       // extrapolation point (equals x unless FISTA)
  Image x_prev = x;
  double t = 1.0;
  for (int it = 0; it < config.outer_iters; ++it) {
    ComplexGrid r = apply_mask(fft2c(z), mask);
    for (std::size_t i = 0; i < r.v.size(); ++i) r.v[i] -= k_us.v[i];
    const ComplexGrid g = ifft2c(r);
    Image step(H, W);
    for (std::size_t i = 0; i < step.px.size(); ++i)
      step.px[i] = z.px[i] - config.step_size * g.v[i].real();
    Image x_new = tv_denoise(step, config.step_size * config.lambda, config.prox_inner_iters);
    if (config.use_fista) {
      const double t_new = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
      const double beta = (t - 1.0) / t_new;
      for (std::size_t i = 0; i < z.px.size(); ++i)
        z.px[i] = x_new.px[i] + beta * (x_new.px[i] - x_prev.px[i]);
      t = t_new;
      x_prev = x_new;
      x = x_new;
    } else {
      x = x_new;
      z = x_new;
    }
  }
  for (double& v : x.px) v = std::max(v, 0.0);
  return x;
}

} // namespace mrprime
