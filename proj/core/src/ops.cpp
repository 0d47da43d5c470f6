#include "mrprime/ops.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace mrprime::ops {

namespace {

std::string shape_str(const Tensor& t) {
  std::ostringstream os;
  os << '[';
  for (int i = 0; i < t.ndim(); ++i) {
    if (i) os << ", ";
    os << t.dim(i);
  }
  os << ']';
  return os.str();
}

[[noreturn]] void fail(const std::string& msg) { throw std::invalid_argument(msg); }

void require_4d(const Tensor& t, const char* what) {
  if (!t.defined() || t.ndim() != 4) fail(std::string(what) + " must be a 4-d tensor");
}

bool record(Tape* tape, std::initializer_list<const Tensor*> inputs) {
  if (!tape) return false;
  for (const Tensor* t : inputs)
    if (t->requires_grad()) return true;
  return false;
}

// col has K = C*kh*kw rows and P = H*W columns; one image, zero same-padding.
void im2col(const double* img, int C, int H, int W, int kh, int kw, double* col) {
  const int ph = kh / 2;
  const int pw = kw / 2;
  const std::int64_t P = static_cast<std::int64_t>(H) * W;
  std::int64_t row = 0;
  for (int c = 0; c < C; ++c) {
    const double* chan = img + static_cast<std::int64_t>(c) * P;
    for (int ky = 0; ky < kh; ++ky) {
      for (int kx = 0; kx < kw; ++kx, ++row) {
        double* dst = col + row * P;
        const int dy = ky - ph;
        const int dx = kx - pw;
        for (int y = 0; y < H; ++y) {
          double* drow = dst + static_cast<std::int64_t>(y) * W;
          const int yy = y + dy;
          if (yy < 0 || yy >= H) {
            std::memset(drow, 0, sizeof(double) * static_cast<std::size_t>(W));
            continue;
          }
          const double* srow = chan + static_cast<std::int64_t>(yy) * W;
          const int x0 = std::max(0, -dx);        // first valid output x
          const int x1 = std::min(W, W - dx);     // one past last valid output x
          if (x0 > 0) std::memset(drow, 0, sizeof(double) * static_cast<std::size_t>(x0));
          if (x1 > x0)
            std::memcpy(drow + x0, srow + x0 + dx, sizeof(double) * static_cast<std::size_t>(x1 - x0));
          if (x1 < W) std::memset(drow + x1, 0, sizeof(double) * static_cast<std::size_t>(W - x1));
        }
      }
    }
  }
}

// Scatter-add transpose of im2col: col (K x P) accumulated back into img (C x H x W).
void col2im_add(const double* col, int C, int H, int W, int kh, int kw, double* img) {
  const int ph = kh / 2;
  const int pw = kw / 2;
  const std::int64_t P = static_cast<std::int64_t>(H) * W;
  std::int64_t row = 0;
  for (int c = 0; c < C; ++c) {
    double* chan = img + static_cast<std::int64_t>(c) * P;
    for (int ky = 0; ky < kh; ++ky) {
      for (int kx = 0; kx < kw; ++kx, ++row) {
        const double* src = col + row * P;
        const int dy = ky - ph;
        const int dx = kx - pw;
        for (int y = 0; y < H; ++y) {
          const int yy = y + dy;
          if (yy < 0 || yy >= H) continue;
          const double* srow = src + static_cast<std::int64_t>(y) * W;
          double* drow = chan + static_cast<std::int64_t>(yy) * W;
          const int x0 = std::max(0, -dx);
          const int x1 = std::min(W, W - dx);
          for (int x = x0; x < x1; ++x) drow[x + dx] += srow[x];
        }
      }
    }
  }
}

// C[M x P] += A[M x K] * B[K x P]; axpy form, fixed i-k-j order.
void gemm_axpy(const double* A, const double* B, double* C, std::int64_t M, std::int64_t K,
               std::int64_t P) {
  for (std::int64_t i = 0; i < M; ++i) {
    double* crow = C + i * P;
    const double* arow = A + i * K;
    for (std::int64_t k = 0; k < K; ++k) {
      const double a = arow[k];
      const double* brow = B + k * P;
      for (std::int64_t j = 0; j < P; ++j) crow[j] += a * brow[j];
    }
  }
}

// Dot product with a fixed 8-lane accumulation pattern (deterministic and SIMD-friendly).
double dot_fixed(const double* a, const double* b, std::int64_t n) {
  double acc[8] = {0, 0, 0, 0, 0, 0, 0, 0};
  std::int64_t i = 0;
  for (; i + 8 <= n; i += 8)
    for (int l = 0; l < 8; ++l) acc[l] += a[i + l] * b[i + l];
  for (; i < n; ++i) acc[i & 7] += a[i] * b[i];
  const double s01 = acc[0] + acc[1];
  const double s23 = acc[2] + acc[3];
  const double s45 = acc[4] + acc[5];
  const double s67 = acc[6] + acc[7];
  return (s01 + s23) + (s45 + s67);
}

} // namespace

Tensor conv2d(Tape* tape, const Tensor& input, const Tensor& weight, const Tensor& bias) {
  require_4d(input, "conv2d input");
  require_4d(weight, "conv2d weight");
  if (!bias.defined() || bias.ndim() != 1) fail("conv2d bias must be a 1-d tensor");
  const int N = input.dim(0), Cin = input.dim(1), H = input.dim(2), W = input.dim(3);
  const int Cout = weight.dim(0), kh = weight.dim(2), kw = weight.dim(3);
  if (weight.dim(1) != Cin)
    fail("conv2d channel mismatch: input " + shape_str(input) + " vs weight " + shape_str(weight));
  if (kh % 2 == 0 || kw % 2 == 0) fail("conv2d kernel sizes must be odd, got " + shape_str(weight));
  if (bias.dim(0) != Cout)
    fail("conv2d bias shape " + shape_str(bias) + " does not match Cout=" + std::to_string(Cout));
  detail::check_finite(input, "conv2d");
  detail::check_finite(weight, "conv2d");
  detail::check_finite(bias, "conv2d");

  const std::int64_t P = static_cast<std::int64_t>(H) * W;
  const std::int64_t K = static_cast<std::int64_t>(Cin) * kh * kw;
  Tensor out({N, Cout, H, W});
  std::vector<double> col(static_cast<std::size_t>(K) * P);
  const double* bptr = bias.ptr();
  for (int n = 0; n < N; ++n) {
    im2col(input.ptr() + static_cast<std::int64_t>(n) * Cin * P, Cin, H, W, kh, kw, col.data());
    double* onp = out.ptr() + static_cast<std::int64_t>(n) * Cout * P;
    for (int co = 0; co < Cout; ++co) std::fill(onp + co * P, onp + (co + 1) * P, bptr[co]);
    gemm_axpy(weight.ptr(), col.data(), onp, Cout, K, P);
  }
  detail::check_finite(out, "conv2d");

  if (record(tape, {&input, &weight, &bias})) {
    out.set_requires_grad(true);
    tape->record([input, weight, bias, out, N, Cin, Cout, H, W, kh, kw]() mutable {
      if (!out.has_grad()) return;
      const std::int64_t P = static_cast<std::int64_t>(H) * W;
      const std::int64_t K = static_cast<std::int64_t>(Cin) * kh * kw;
      const double* dY = out.grad().data();
      const bool need_x = input.requires_grad();
      const bool need_w = weight.requires_grad();
      const bool need_b = bias.requires_grad();
      std::vector<double> col;
      if (need_w) col.resize(static_cast<std::size_t>(K) * P);
      std::vector<double> colg;
      if (need_x) colg.resize(static_cast<std::size_t>(K) * P);
      double* dW = need_w ? weight.grad().data() : nullptr;
      double* dB = need_b ? bias.grad().data() : nullptr;
      double* dX = need_x ? input.grad().data() : nullptr;
      for (int n = 0; n < N; ++n) {
        const double* dYn = dY + static_cast<std::int64_t>(n) * Cout * P;
        if (need_w) {
          im2col(input.ptr() + static_cast<std::int64_t>(n) * Cin * P, Cin, H, W, kh, kw,
                 col.data());
          for (int co = 0; co < Cout; ++co)
            for (std::int64_t k = 0; k < K; ++k)
              dW[co * K + k] += dot_fixed(dYn + co * P, col.data() + k * P, P);
        }
        if (need_b)
          for (int co = 0; co < Cout; ++co) {
            double s = 0.0;
            const double* row = dYn + co * P;
            for (std::int64_t j = 0; j < P; ++j) s += row[j];
            dB[co] += s;
          }
        if (need_x) {
          std::fill(colg.begin(), colg.end(), 0.0);
          // colg = W^T * dYn, axpy over output channels in fixed order.
          const double* Wp = weight.ptr();
          for (int co = 0; co < Cout; ++co) {
            const double* gyrow = dYn + co * P;
            for (std::int64_t k = 0; k < K; ++k) {
              const double w = Wp[co * K + k];
              double* crow = colg.data() + k * P;
              for (std::int64_t j = 0; j < P; ++j) crow[j] += w * gyrow[j];
            }
          }
          col2im_add(colg.data(), Cin, H, W, kh, kw, dX + static_cast<std::int64_t>(n) * Cin * P);
        }
      }
    });
  }
  return out;
}

Tensor relu(Tape* tape, const Tensor& input) {
  if (!input.defined()) fail("relu input is undefined");
  detail::check_finite(input, "relu");
  Tensor out(input.shape());
  const double* x = input.ptr();
  double* y = out.ptr();
  const std::int64_t n = input.numel();
  for (std::int64_t i = 0; i < n; ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;

  if (record(tape, {&input})) {
    out.set_requires_grad(true);
    tape->record([input, out]() mutable {
      if (!out.has_grad() || !input.requires_grad()) return;
      const double* x = input.ptr();
      const double* g = out.grad().data();
      double* dx = input.grad().data();
      const std::int64_t n = input.numel();
      for (std::int64_t i = 0; i < n; ++i)
        if (x[i] > 0.0) dx[i] += g[i];
    });
  }
  return out;
}

Tensor maxpool2(Tape* tape, const Tensor& input) {
  require_4d(input, "maxpool2 input");
  const int N = input.dim(0), C = input.dim(1), H = input.dim(2), W = input.dim(3);
  if (H % 2 != 0 || W % 2 != 0)
    fail("maxpool2 requires even spatial dims, got " + shape_str(input));
  detail::check_finite(input, "maxpool2");
  const int Ho = H / 2, Wo = W / 2;
  Tensor out({N, C, Ho, Wo});
  auto argmax = std::make_shared<std::vector<std::int64_t>>(out.numel());
  const double* x = input.ptr();
  double* y = out.ptr();
  std::int64_t o = 0;
  for (std::int64_t nc = 0; nc < static_cast<std::int64_t>(N) * C; ++nc) {
    const double* plane = x + nc * H * W;
    for (int oy = 0; oy < Ho; ++oy)
      for (int ox = 0; ox < Wo; ++ox, ++o) {
        // Window scanned in row-major order; ties keep the first occurrence.
        std::int64_t best = static_cast<std::int64_t>(2 * oy) * W + 2 * ox;
        double bv = plane[best];
        const std::int64_t cand[3] = {best + 1, best + W, best + W + 1};
        for (std::int64_t idx : cand)
          if (plane[idx] > bv) {
            bv = plane[idx];
            best = idx;
          }
        y[o] = bv;
        (*argmax)[o] = nc * H * W + best;
      }
  }

  if (record(tape, {&input})) {
    out.set_requires_grad(true);
    tape->record([input, out, argmax]() mutable {
      if (!out.has_grad() || !input.requires_grad()) return;
      const double* g = out.grad().data();
      double* dx = input.grad().data();
      const std::int64_t n = out.numel();
      for (std::int64_t i = 0; i < n; ++i) dx[(*argmax)[i]] += g[i];
    });
  }
  return out;
}

namespace {

// Source index pair and interpolation weight for 2x upsampling with half-pixel centers.
struct LerpIdx {
  int lo;
  int hi;
  double t;
};

std::vector<LerpIdx> lerp_table(int in, int out) {
  std::vector<LerpIdx> tab(static_cast<std::size_t>(out));
  for (int j = 0; j < out; ++j) {
    const double src = (j + 0.5) * (static_cast<double>(in) / out) - 0.5;
    double f = std::floor(src);
    double t = src - f;
    int lo = static_cast<int>(f);
    if (lo < 0) {
      lo = 0;
      t = 0.0;
    }
    int hi = lo + 1;
    if (hi > in - 1) {
      hi = in - 1;
      t = 0.0;
    }
    tab[static_cast<std::size_t>(j)] = {lo, hi, t};
  }
  return tab;
}

} // namespace

Tensor upsample_bilinear2(Tape* tape, const Tensor& input) {
  require_4d(input, "upsample_bilinear2 input");
  const int N = input.dim(0), C = input.dim(1), H = input.dim(2), W = input.dim(3);
  detail::check_finite(input, "upsample_bilinear2");
  const int Ho = 2 * H, Wo = 2 * W;
  const auto rows = lerp_table(H, Ho);
  const auto cols = lerp_table(W, Wo);
  Tensor out({N, C, Ho, Wo});
  const double* x = input.ptr();
  double* y = out.ptr();
  std::vector<double> tmp(static_cast<std::size_t>(H) * Wo); // horizontal pass buffer
  for (std::int64_t nc = 0; nc < static_cast<std::int64_t>(N) * C; ++nc) {
    const double* plane = x + nc * H * W;
    for (int r = 0; r < H; ++r) {
      const double* srow = plane + static_cast<std::int64_t>(r) * W;
      double* trow = tmp.data() + static_cast<std::int64_t>(r) * Wo;
      for (int j = 0; j < Wo; ++j) {
        const LerpIdx& c = cols[static_cast<std::size_t>(j)];
        const double a = srow[c.lo];
        trow[j] = a + c.t * (srow[c.hi] - a); // lerp form keeps constants exact
      }
    }
    double* oplane = y + nc * Ho * Wo;
    for (int i = 0; i < Ho; ++i) {
      const LerpIdx& r = rows[static_cast<std::size_t>(i)];
      const double* lo = tmp.data() + static_cast<std::int64_t>(r.lo) * Wo;
      const double* hi = tmp.data() + static_cast<std::int64_t>(r.hi) * Wo;
      double* orow = oplane + static_cast<std::int64_t>(i) * Wo;
      for (int j = 0; j < Wo; ++j) orow[j] = lo[j] + r.t * (hi[j] - lo[j]);
    }
  }

  if (record(tape, {&input})) {
    out.set_requires_grad(true);
    tape->record([input, out, rows, cols, N, C, H, W, Ho, Wo]() mutable {
      if (!out.has_grad() || !input.requires_grad()) return;
      const double* g = out.grad().data();
      double* dx = input.grad().data();
      std::vector<double> gtmp(static_cast<std::size_t>(H) * Wo);
      for (std::int64_t nc = 0; nc < static_cast<std::int64_t>(N) * C; ++nc) {
        std::fill(gtmp.begin(), gtmp.end(), 0.0);
        const double* gplane = g + nc * Ho * Wo;
        for (int i = 0; i < Ho; ++i) {
          const LerpIdx& r = rows[static_cast<std::size_t>(i)];
          const double* grow = gplane + static_cast<std::int64_t>(i) * Wo;
          double* lo = gtmp.data() + static_cast<std::int64_t>(r.lo) * Wo;
          double* hi = gtmp.data() + static_cast<std::int64_t>(r.hi) * Wo;
          for (int j = 0; j < Wo; ++j) {
            lo[j] += (1.0 - r.t) * grow[j];
            hi[j] += r.t * grow[j];
          }
        }
        double* dplane = dx + nc * H * W;
        for (int rr = 0; rr < H; ++rr) {
          const double* grow = gtmp.data() + static_cast<std::int64_t>(rr) * Wo;
          double* drow = dplane + static_cast<std::int64_t>(rr) * W;
          for (int j = 0; j < Wo; ++j) {
            const LerpIdx& c = cols[static_cast<std::size_t>(j)];
            drow[c.lo] += (1.0 - c.t) * grow[j];
            drow[c.hi] += c.t * grow[j];
          }
        }
      }
    });
  }
  return out;
}

Tensor concat_channels(Tape* tape, const Tensor& a, const Tensor& b) {
  require_4d(a, "concat_channels a");
  require_4d(b, "concat_channels b");
  if (a.dim(0) != b.dim(0) || a.dim(2) != b.dim(2) || a.dim(3) != b.dim(3))
    fail("concat_channels shape mismatch: " + shape_str(a) + " vs " + shape_str(b));
  const int N = a.dim(0), Ca = a.dim(1), Cb = b.dim(1), H = a.dim(2), W = a.dim(3);
  const std::int64_t P = static_cast<std::int64_t>(H) * W;
  Tensor out({N, Ca + Cb, H, W});
  for (int n = 0; n < N; ++n) {
    double* dst = out.ptr() + static_cast<std::int64_t>(n) * (Ca + Cb) * P;
    std::memcpy(dst, a.ptr() + static_cast<std::int64_t>(n) * Ca * P,
                sizeof(double) * static_cast<std::size_t>(Ca * P));
    std::memcpy(dst + static_cast<std::int64_t>(Ca) * P,
                b.ptr() + static_cast<std::int64_t>(n) * Cb * P,
                sizeof(double) * static_cast<std::size_t>(Cb * P));
  }

  if (record(tape, {&a, &b})) {
    out.set_requires_grad(true);
    tape->record([a, b, out, N, Ca, Cb, P]() mutable {
      if (!out.has_grad()) return;
      const double* g = out.grad().data();
      for (int n = 0; n < N; ++n) {
        const double* gn = g + static_cast<std::int64_t>(n) * (Ca + Cb) * P;
        if (a.requires_grad()) {
          double* da = a.grad().data() + static_cast<std::int64_t>(n) * Ca * P;
          for (std::int64_t i = 0; i < Ca * P; ++i) da[i] += gn[i];
        }
        if (b.requires_grad()) {
          double* db = b.grad().data() + static_cast<std::int64_t>(n) * Cb * P;
          const double* gb = gn + static_cast<std::int64_t>(Ca) * P;
          for (std::int64_t i = 0; i < Cb * P; ++i) db[i] += gb[i];
        }
      }
    });
  }
  return out;
}

Tensor add(Tape* tape, const Tensor& a, const Tensor& b) {
  if (!a.defined() || !b.defined()) fail("add inputs must be defined");
  if (a.shape() != b.shape())
    fail("add shape mismatch: " + shape_str(a) + " vs " + shape_str(b));
  Tensor out(a.shape());
  const double* pa = a.ptr();
  const double* pb = b.ptr();
  double* py = out.ptr();
  const std::int64_t n = a.numel();
  for (std::int64_t i = 0; i < n; ++i) py[i] = pa[i] + pb[i];

  if (record(tape, {&a, &b})) {
    out.set_requires_grad(true);
    tape->record([a, b, out]() mutable {
      if (!out.has_grad()) return;
      const double* g = out.grad().data();
      const std::int64_t n = out.numel();
      if (a.requires_grad()) {
        double* da = a.grad().data();
        for (std::int64_t i = 0; i < n; ++i) da[i] += g[i];
      }
      if (b.requires_grad()) {
        double* db = b.grad().data();
        for (std::int64_t i = 0; i < n; ++i) db[i] += g[i];
      }
    });
  }
  return out;
}

Tensor l1_loss(Tape* tape, const Tensor& pred, const Tensor& target) {
  if (!pred.defined() || !target.defined()) fail("l1_loss inputs must be defined");
  if (pred.shape() != target.shape())
    fail("l1_loss shape mismatch: " + shape_str(pred) + " vs " + shape_str(target));
  if (target.requires_grad()) fail("l1_loss target must not require gradients");
  detail::check_finite(pred, "l1_loss");
  detail::check_finite(target, "l1_loss");
  const std::int64_t n = pred.numel();
  if (n == 0) fail("l1_loss over an empty tensor");
  const double* p = pred.ptr();
  const double* t = target.ptr();
  double s = 0.0;
  for (std::int64_t i = 0; i < n; ++i) s += std::abs(p[i] - t[i]);
  Tensor out({1}, {s / static_cast<double>(n)});

  if (record(tape, {&pred})) {
    out.set_requires_grad(true);
    tape->record([pred, target, out]() mutable {
      if (!out.has_grad() || !pred.requires_grad()) return;
      const double g = out.grad()[0];
      const double* p = pred.ptr();
      const double* t = target.ptr();
      double* dp = pred.grad().data();
      const std::int64_t n = pred.numel();
      const double scale = g / static_cast<double>(n);
      for (std::int64_t i = 0; i < n; ++i) {
        const double d = p[i] - t[i];
        if (d > 0.0)
          dp[i] += scale;
        else if (d < 0.0)
          dp[i] -= scale; // ties contribute exactly zero
      }
    });
  }
  return out;
}

} // namespace mrprime::ops
