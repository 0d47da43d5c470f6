#pragma once

#include <complex>

#include "mrprime/grid.hpp"

namespace mrprime {

/// Unnormalized 1D DFT, in place. inverse=false computes sum x_j e^{-2πi jk/n};
/// inverse=true uses e^{+2πi jk/n} with no 1/n factor. Radix-2 Cooley-Tukey for
/// powers of two, Bluestein's chirp-z otherwise.
void fft_1d(std::complex<double>* data, int n, bool inverse);

/// Centered orthonormal 2D DFT: fftshift(fft2(ifftshift(x))) / sqrt(HW).
/// DC lands at (floor(H/2), floor(W/2)).
ComplexGrid fft2c(const ComplexGrid& x);
ComplexGrid fft2c(const Image& x);

/// Exact inverse of fft2c under the same conventions.
ComplexGrid ifft2c(const ComplexGrid& k);

} // namespace mrprime
