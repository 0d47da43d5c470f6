#pragma once

#include "mrprime/tensor.hpp"

namespace mrprime::ops {

/// 3x3/1x1-style cross-correlation with zero same-padding. input N x Cin x H x W,
/// weight Cout x Cin x kh x kw (kh, kw odd), bias Cout. Output N x Cout x H x W.
Tensor conv2d(Tape* tape, const Tensor& input, const Tensor& weight, const Tensor& bias);

/// Elementwise max(0, x). Subgradient at 0 is 0.
Tensor relu(Tape* tape, const Tensor& input);

/// 2x2 non-overlapping max pooling; H and W must be even. Gradient routes to
/// the first maximum in row-major window order.
Tensor maxpool2(Tape* tape, const Tensor& input);

/// Bilinear x2 upsampling with half-pixel centers (no corner alignment).
Tensor upsample_bilinear2(Tape* tape, const Tensor& input);

/// Channel concatenation: a occupies [0, Ca), b occupies [Ca, Ca+Cb).
Tensor concat_channels(Tape* tape, const Tensor& a, const Tensor& b);

/// Elementwise sum of identically shaped tensors.
Tensor add(Tape* tape, const Tensor& a, const Tensor& b);

/// Mean absolute difference over all elements; subgradient 0 at exact ties.
/// target must not require gradients.
Tensor l1_loss(Tape* tape, const Tensor& pred, const Tensor& target);

} // namespace mrprime::ops
