#include "mrprime/fft.hpp"

#include <cmath>
#include <numbers>
#include <utility>
#include <vector>

namespace mrprime {

namespace {

using cplx = std::complex<double>;

bool is_pow2(int n) { return n > 0 && (n & (n - 1)) == 0; }

// Forward twiddles w[k] = e^{-2pi i k / n}, k < n/2.
std::vector<cplx> twiddle_table(int n) {
  std::vector<cplx> w(static_cast<std::size_t>(n / 2));
  const double step = -2.0 * std::numbers::pi / n;
  for (int k = 0; k < n / 2; ++k) w[static_cast<std::size_t>(k)] = std::polar(1.0, step * k);
  return w;
}

// In-place forward radix-2 FFT; w is the half-circle twiddle table for size n.
void fft_pow2(cplx* a, int n, const cplx* w) {
  for (int i = 1, j = 0; i < n; ++i) {
    int bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (int len = 2; len <= n; len <<= 1) {
    const int half = len / 2;
    const int stride = n / len;
    for (int i = 0; i < n; i += len)
      for (int k = 0; k < half; ++k) {
        const cplx t = a[i + k + half] * w[static_cast<std::size_t>(k) * stride];
        const cplx u = a[i + k];
        a[i + k] = u + t;
        a[i + k + half] = u - t;
      }
  }
}

void fft_any(cplx* a, int n, bool inverse);

// Bluestein chirp-z: forward DFT of arbitrary length via a power-of-two convolution.
void bluestein_forward(cplx* a, int n) {
  int m = 1;
  while (m < 2 * n - 1) m <<= 1;
  // Chirp with exact angle reduction: k^2 mod 2n keeps e^{-i pi k^2 / n} accurate.
  std::vector<cplx> chirp(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    const long long k2 = (static_cast<long long>(k) * k) % (2LL * n);
    chirp[static_cast<std::size_t>(k)] =
        std::polar(1.0, -std::numbers::pi * static_cast<double>(k2) / n);
  }
  std::vector<cplx> fa(static_cast<std::size_t>(m), cplx{0.0, 0.0});
  std::vector<cplx> fb(static_cast<std::size_t>(m), cplx{0.0, 0.0});
  for (int k = 0; k < n; ++k) fa[static_cast<std::size_t>(k)] = a[k] * chirp[static_cast<std::size_t>(k)];
  fb[0] = std::conj(chirp[0]);
  for (int k = 1; k < n; ++k) {
    const cplx c = std::conj(chirp[static_cast<std::size_t>(k)]);
    fb[static_cast<std::size_t>(k)] = c;
    fb[static_cast<std::size_t>(m - k)] = c;
  }
  fft_any(fa.data(), m, false);
  fft_any(fb.data(), m, false);
  for (int k = 0; k < m; ++k) fa[static_cast<std::size_t>(k)] *= fb[static_cast<std::size_t>(k)];
  fft_any(fa.data(), m, true);
  const double inv_m = 1.0 / m;
  for (int k = 0; k < n; ++k)
    a[k] = fa[static_cast<std::size_t>(k)] * inv_m * chirp[static_cast<std::size_t>(k)];
}

void fft_any(cplx* a, int n, bool inverse) {
  if (n == 1) return;
  if (inverse) {
    for (int i = 0; i < n; ++i) a[i] = std::conj(a[i]);
    fft_any(a, n, false);
    for (int i = 0; i < n; ++i) a[i] = std::conj(a[i]);
    return;
  }
  if (is_pow2(n)) {
    const auto w = twiddle_table(n);
    fft_pow2(a, n, w.data());
  } else {
    bluestein_forward(a, n);
  }
}

// Separable unnormalized 2D transform, rows then columns, shared twiddle plans.
void fft2_inplace(ComplexGrid& g, bool inverse) {
  const int H = g.height, W = g.width;
  if (inverse) {
    for (auto& z : g.v) z = std::conj(z);
    fft2_inplace(g, false);
    for (auto& z : g.v) z = std::conj(z);
    return;
  }
  std::vector<cplx> wrow, wcol;
  if (is_pow2(W)) wrow = twiddle_table(W);
  if (is_pow2(H)) wcol = twiddle_table(H);
  for (int y = 0; y < H; ++y) {
    cplx* row = g.v.data() + static_cast<std::size_t>(y) * W;
    if (is_pow2(W))
      fft_pow2(row, W, wrow.data());
    else
      bluestein_forward(row, W);
  }
  std::vector<cplx> col(static_cast<std::size_t>(H));
  for (int x = 0; x < W; ++x) {
    for (int y = 0; y < H; ++y) col[static_cast<std::size_t>(y)] = g.at(y, x);
    if (is_pow2(H))
      fft_pow2(col.data(), H, wcol.data());
    else
      bluestein_forward(col.data(), H);
    for (int y = 0; y < H; ++y) g.at(y, x) = col[static_cast<std::size_t>(y)];
  }
}

// fftshift: index 0 moves to floor(n/2). ifftshift is its exact inverse.
ComplexGrid shift2(const ComplexGrid& g, bool forward) {
  const int H = g.height, W = g.width;
  ComplexGrid out(H, W);
  const int sy = H / 2, sx = W / 2;
  for (int y = 0; y < H; ++y) {
    const int yy = forward ? (y + sy) % H : (y + H - sy) % H;
    for (int x = 0; x < W; ++x) {
      const int xx = forward ? (x + sx) % W : (x + W - sx) % W;
      out.at(yy, xx) = g.at(y, x);
    }
  }
  return out;
}

ComplexGrid fft2c_core(ComplexGrid g, bool inverse) {
  g = shift2(g, /*forward=*/false); // ifftshift
  fft2_inplace(g, inverse);
  g = shift2(g, /*forward=*/true); // fftshift
  const double s = 1.0 / std::sqrt(static_cast<double>(g.height) * g.width);
  for (auto& z : g.v) z *= s;
  return g;
}

} // namespace

void fft_1d(std::complex<double>* data, int n, bool inverse) {
  if (n < 1) throw std::invalid_argument("fft_1d: n must be >= 1");
  fft_any(data, n, inverse);
}

ComplexGrid fft2c(const ComplexGrid& x) { return fft2c_core(x, /*inverse=*/false); }

ComplexGrid fft2c(const Image& x) {
  ComplexGrid g(x.height, x.width);
  for (std::size_t i = 0; i < x.px.size(); ++i) g.v[i] = cplx{x.px[i], 0.0};
  return fft2c_core(std::move(g), /*inverse=*/false);
}

ComplexGrid ifft2c(const ComplexGrid& k) { return fft2c_core(k, /*inverse=*/true); }

} // namespace mrprime
