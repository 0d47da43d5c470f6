#pragma once

#include <cstdint>

#include "mrprime/fft.hpp"
#include "mrprime/grid.hpp"
#include "mrprime/masks.hpp"
#include "mrprime/tensor.hpp"

namespace mrprime {

/// Undersampled acquisition: k_us = M o (fft2c(x) + n), with n complex Gaussian
/// (sd sigma/sqrt(2) per component). Noise is drawn over the full grid from the
/// seeded generator before masking; unsampled columns come out exactly zero.
ComplexGrid apply_forward_model(const Image& x, const Mask& mask, double sigma,
                                std::uint64_t seed);

/// Same acquisition given a precomputed full k-space (k_full = fft2c(x));
/// lets training loops cache the FFT across epochs.
ComplexGrid apply_forward_model_k(const ComplexGrid& k_full, const Mask& mask, double sigma,
                                  std::uint64_t seed);

/// Magnitude of ifft2c(k_us) — the zero-filled baseline reconstruction.
Image zero_fill_recon(const ComplexGrid& k_us);

/// Signed log transform, channelwise on real and imaginary parts:
///   t(v) = sign(v) * log(1 + |v|) * 1e5
ComplexGrid log_transform(const ComplexGrid& k);

/// Exact inverse: v = sign(t) * (exp(|t| / 1e5) - 1).
ComplexGrid inverse_log_transform(const ComplexGrid& k_t);

/// Scalar versions of the transform pair.
double log_transform_value(double v);
double inverse_log_transform_value(double t);

/// ComplexGrid <-> 1 x 2 x H x W tensor (channel 0 = real, channel 1 = imag).
Tensor pack_channels(const ComplexGrid& k);
ComplexGrid unpack_channels(const Tensor& t);

} // namespace mrprime
