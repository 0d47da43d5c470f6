#include "mrprime/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace mrprime {

namespace {

void require_same_shape(const Image& a, const Image& b, const char* what) {
  if (a.height != b.height || a.width != b.width)
    throw std::invalid_argument(std::string(what) + ": image shapes differ");
}

double max_value(const Image& x) {
  double m = x.px.empty() ? 0.0 : x.px[0];
  for (double v : x.px) m = std::max(m, v);
  return m;
}

double mse(const Image& xhat, const Image& x) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.px.size(); ++i) {
    const double d = xhat.px[i] - x.px[i];
    s += d * d;
  }
  return s / static_cast<double>(x.px.size());
}

double psnr_with_range(const Image& xhat, const Image& x, double range) {
  if (!(range > 0.0)) throw std::invalid_argument("psnr: zero data range");
  const double m = mse(xhat, x);
  const double floor2 = (range / 1e5) * (range / 1e5);
  if (m < floor2) return 100.0;
  return 20.0 * std::log10(range / std::sqrt(m));
}

constexpr int kSsimWindow = 7;
constexpr double kSsimK1 = 0.01;
constexpr double kSsimK2 = 0.03;

double ssim_with_range(const Image& xhat, const Image& x, double range) {
  const int H = x.height, W = x.width, win = kSsimWindow;
  if (H < win || W < win)
    throw std::invalid_argument("ssim: image smaller than the 7x7 window");
  if (!(range > 0.0)) throw std::invalid_argument("ssim: zero data range");
  const double c1 = (kSsimK1 * range) * (kSsimK1 * range);
  const double c2 = (kSsimK2 * range) * (kSsimK2 * range);
  const double n = static_cast<double>(win) * win;
  const double cov_norm = n / (n - 1.0); // unbiased sample (co)variance
  double acc = 0.0;
  int count = 0;
  for (int y = 0; y + win <= H; ++y)
    for (int xw = 0; xw + win <= W; ++xw) {
      double sa = 0.0, sb = 0.0, saa = 0.0, sbb = 0.0, sab = 0.0;
      for (int dy = 0; dy < win; ++dy)
        for (int dx = 0; dx < win; ++dx) {
          const double a = xhat.at(y + dy, xw + dx);
          const double b = x.at(y + dy, xw + dx);
          sa += a;
          sb += b;
          saa += a * a;
          sbb += b * b;
          sab += a * b;
        }
      const double ma = sa / n, mb = sb / n;
      const double va = cov_norm * (saa / n - ma * ma);
      const double vb = cov_norm * (sbb / n - mb * mb);
      const double vab = cov_norm * (sab / n - ma * mb);
      acc += ((2.0 * ma * mb + c1) * (2.0 * vab + c2)) /
             ((ma * ma + mb * mb + c1) * (va + vb + c2));
      ++count;
    }
  return acc / static_cast<double>(count);
}

Image crop(const Image& img, const BBox& box) {
  Image out(box.height(), box.width());
  for (int y = 0; y < out.height; ++y)
    for (int x = 0; x < out.width; ++x) out.at(y, x) = img.at(box.y0 + y, box.x0 + x);
  return out;
}

} // namespace

std::string metrics_row_to_csv(const MetricsRow& row) {
  std::ostringstream os;
  os.precision(17);
  os << row.sample_id << ',' << row.pattern << ',' << row.r << ',' << row.family << ','
     << row.region << ',' << row.nmse << ',' << row.psnr << ',' << row.ssim;
  return os.str();
}

double nmse(const Image& xhat, const Image& x) {
  require_same_shape(xhat, x, "nmse");
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < x.px.size(); ++i) {
    const double d = xhat.px[i] - x.px[i];
    num += d * d;
    den += x.px[i] * x.px[i];
  }
  if (den == 0.0) throw std::invalid_argument("nmse: all-zero reference");
  return num / den;
}

double psnr(const Image& xhat, const Image& x) {
  require_same_shape(xhat, x, "psnr");
  return psnr_with_range(xhat, x, max_value(x));
}

double ssim(const Image& xhat, const Image& x) {
  require_same_shape(xhat, x, "ssim");
  return ssim_with_range(xhat, x, max_value(x));
}

RegionMetrics region_metrics(const Image& xhat, const Image& x, const BBox& box) {
  require_same_shape(xhat, x, "region_metrics");
  if (box.x0 < 0 || box.y0 < 0 || box.x1 > x.width || box.y1 > x.height)
    throw std::invalid_argument("region_metrics: box out of bounds");
  if (box.width() < 8 || box.height() < 8)
    throw std::invalid_argument("region_metrics: box must be at least 8x8");
  const Image ch = crop(xhat, box);
  const Image cx = crop(x, box);
  const double range = max_value(x); // global data range by design
  RegionMetrics rm;
  rm.nmse = nmse(ch, cx);
  rm.psnr = psnr_with_range(ch, cx, range);
  rm.ssim = ssim_with_range(ch, cx, range);
  return rm;
}

namespace {

// Continued fraction for the incomplete beta function (modified Lentz).
double betacf(double a, double b, double x) {
  constexpr int kMaxIter = 300;
  constexpr double kEps = 3e-16;
  constexpr double kFpMin = 1e-300;
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kFpMin) d = kFpMin;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::abs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::abs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) break;
  }
  return h;
}

} // namespace

double regularized_incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0)) throw std::invalid_argument("ibeta: a, b must be positive");
  if (x < 0.0 || x > 1.0) throw std::invalid_argument("ibeta: x must lie in [0, 1]");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const double bt = std::exp(std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                             a * std::log(x) + b * std::log1p(-x));
  if (x < (a + 1.0) / (a + b + 2.0)) return bt * betacf(a, b, x) / a;
  return 1.0 - bt * betacf(b, a, 1.0 - x) / b;
}

TTestResult paired_t_test(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw std::invalid_argument("t-test: length mismatch");
  const int n = static_cast<int>(a.size());
  if (n < 2) throw std::invalid_argument("t-test: need n >= 2");
  double mean = 0.0;
  for (int i = 0; i < n; ++i) mean += a[static_cast<std::size_t>(i)] - b[static_cast<std::size_t>(i)];
  mean /= n;
  double ss = 0.0;
  for (int i = 0; i < n; ++i) {
    const double d = (a[static_cast<std::size_t>(i)] - b[static_cast<std::size_t>(i)]) - mean;
    ss += d * d;
  }
  const double sd = std::sqrt(ss / (n - 1));
  TTestResult r;
  r.n = n;
  r.degrees_of_freedom = n - 1;
  if (sd == 0.0) {
    if (mean != 0.0)
      throw std::invalid_argument("t-test: zero variance with nonzero mean is degenerate");
    r.t_statistic = 0.0;
    r.p_value = 1.0;
    return r;
  }
  r.t_statistic = mean / (sd / std::sqrt(static_cast<double>(n)));
  const double t2 = r.t_statistic * r.t_statistic;
  const double df = static_cast<double>(r.degrees_of_freedom);
  r.p_value = regularized_incomplete_beta(df / 2.0, 0.5, df / (df + t2));
  return r;
}

MeanStd mean_std(const std::vector<double>& v) {
  MeanStd m;
  m.n = static_cast<int>(v.size());
  if (m.n == 0) return m;
  for (double x : v) m.mean += x;
  m.mean /= m.n;
  if (m.n < 2) return m;
  double ss = 0.0;
  for (double x : v) ss += (x - m.mean) * (x - m.mean);
  m.std = std::sqrt(ss / (m.n - 1));
  return m;
}

} // namespace mrprime
