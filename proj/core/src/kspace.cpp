#include "mrprime/kspace.hpp"

#include <cmath>
#include <stdexcept>

#include "mrprime/rng.hpp"

namespace mrprime {

ComplexGrid apply_forward_model(const Image& x, const Mask& mask, double sigma,
                                std::uint64_t seed) {
  if (mask.width != x.width)
    throw std::invalid_argument("apply_forward_model: mask width " + std::to_string(mask.width) +
                                " does not match image width " + std::to_string(x.width));
  return apply_forward_model_k(fft2c(x), mask, sigma, seed);
}

ComplexGrid apply_forward_model_k(const ComplexGrid& k_full, const Mask& mask, double sigma,
                                  std::uint64_t seed) {
  if (mask.width != k_full.width)
    throw std::invalid_argument("apply_forward_model: mask width " + std::to_string(mask.width) +
                                " does not match k-space width " + std::to_string(k_full.width));
  if (sigma < 0.0) throw std::invalid_argument("apply_forward_model: sigma must be >= 0");
  ComplexGrid k = k_full;
  if (sigma > 0.0) {
    Rng rng(seed);
    const double sd = sigma / std::sqrt(2.0);
    for (auto& z : k.v) {
      const double re = rng.gaussian() * sd; // real then imaginary, row-major
      const double im = rng.gaussian() * sd;
      z += std::complex<double>{re, im};
    }
  }
  return apply_mask(k, mask);
}

Image zero_fill_recon(const ComplexGrid& k_us) {
  const ComplexGrid x = ifft2c(k_us);
  Image out(x.height, x.width);
  for (std::size_t i = 0; i < x.v.size(); ++i) out.px[i] = std::abs(x.v[i]);
  return out;
}

double log_transform_value(double v) {
  if (v > 0.0) return std::log1p(v) * 1e5;
  if (v < 0.0) return -std::log1p(-v) * 1e5;
  return 0.0; // sign(0) = 0; +-0 both map to +0
}

double inverse_log_transform_value(double t) {
  if (t > 0.0) return std::expm1(t / 1e5);
  if (t < 0.0) return -std::expm1(-t / 1e5);
  return 0.0;
}

ComplexGrid log_transform(const ComplexGrid& k) {
  ComplexGrid out(k.height, k.width);
  for (std::size_t i = 0; i < k.v.size(); ++i)
    out.v[i] = {log_transform_value(k.v[i].real()), log_transform_value(k.v[i].imag())};
  return out;
}

ComplexGrid inverse_log_transform(const ComplexGrid& k_t) {
  ComplexGrid out(k_t.height, k_t.width);
  for (std::size_t i = 0; i < k_t.v.size(); ++i)
    out.v[i] = {inverse_log_transform_value(k_t.v[i].real()),
                inverse_log_transform_value(k_t.v[i].imag())};
  return out;
}

Tensor pack_channels(const ComplexGrid& k) {
  const int H = k.height, W = k.width;
  Tensor t({1, 2, H, W});
  double* re = t.ptr();
  double* im = t.ptr() + static_cast<std::int64_t>(H) * W;
  for (std::size_t i = 0; i < k.v.size(); ++i) {
    re[i] = k.v[i].real();
    im[i] = k.v[i].imag();
  }
  return t;
}

ComplexGrid unpack_channels(const Tensor& t) {
  if (!t.defined() || t.ndim() != 4 || t.dim(0) != 1 || t.dim(1) != 2)
    throw std::invalid_argument("unpack_channels: expected a 1x2xHxW tensor");
  const int H = t.dim(2), W = t.dim(3);
  ComplexGrid k(H, W);
  const double* re = t.ptr();
  const double* im = t.ptr() + static_cast<std::int64_t>(H) * W;
  for (std::size_t i = 0; i < k.v.size(); ++i) k.v[i] = {re[i], im[i]};
  return k;
}

} // namespace mrprime
