#include <doctest.h>

#include <cmath>
#include <string>
#include <vector>

#include "mrprime/metrics.hpp"
#include "mrprime/phantom.hpp"
#include "mrprime/rng.hpp"

using namespace mrprime;

namespace {

Image random_image(int h, int w, std::uint64_t seed, double lo = 0.0, double hi = 1.0) {
  Image img(h, w);
  Rng rng(seed);
  for (auto& p : img.px) p = rng.uniform(lo, hi);
  return img;
}

// Straight-from-the-definition SSIM: 7x7 uniform windows fully inside the
// image, unbiased variance, data range = max of the reference.
double ssim_brute(const Image& xhat, const Image& x) {
  const int win = 7;
  double range = 0.0;
  for (double p : x.px) range = std::max(range, p);
  const double c1 = (0.01 * range) * (0.01 * range);
  const double c2 = (0.03 * range) * (0.03 * range);
  double acc = 0.0;
  int count = 0;
  for (int y0 = 0; y0 + win <= x.height; ++y0)
    for (int x0 = 0; x0 + win <= x.width; ++x0) {
      double mu_a = 0.0, mu_b = 0.0;
      for (int dy = 0; dy < win; ++dy)
        for (int dx = 0; dx < win; ++dx) {
          mu_a += xhat.at(y0 + dy, x0 + dx);
          mu_b += x.at(y0 + dy, x0 + dx);
        }
      const int n = win * win;
      mu_a /= n;
      mu_b /= n;
      double va = 0.0, vb = 0.0, cov = 0.0;
      for (int dy = 0; dy < win; ++dy)
        for (int dx = 0; dx < win; ++dx) {
          const double da = xhat.at(y0 + dy, x0 + dx) - mu_a;
          const double db = x.at(y0 + dy, x0 + dx) - mu_b;
          va += da * da;
          vb += db * db;
          cov += da * db;
        }
      va /= n - 1;
      vb /= n - 1;
      cov /= n - 1;
      acc += ((2 * mu_a * mu_b + c1) * (2 * cov + c2)) /
             ((mu_a * mu_a + mu_b * mu_b + c1) * (va + vb + c2));
      ++count;
    }
  return acc / count;
}

} // namespace

TEST_CASE("nmse definition and scale law") {
  Image x = random_image(16, 16, 1, 0.2, 1.0);
  CHECK(nmse(x, x) == 0.0);

  // xhat = c*x gives NMSE (c-1)^2 exactly.
  for (double c : {0.5, 0.9, 1.3}) {
    Image scaled = x;
    for (auto& p : scaled.px) p *= c;
    CHECK(nmse(scaled, x) == doctest::Approx((c - 1.0) * (c - 1.0)).epsilon(1e-12));
  }

  Image zero(8, 8, 0.0);
  CHECK_THROWS_AS(nmse(x, zero), std::invalid_argument);
  Image other(8, 16);
  CHECK_THROWS_AS(nmse(other, x), std::invalid_argument);
}

TEST_CASE("psnr analytic value and 100 dB cap") {
  Image x = random_image(16, 16, 2, 0.0, 1.0);
  double range = 0.0;
  for (double p : x.px) range = std::max(range, p);

  const double delta = 0.01;
  Image shifted = x;
  for (auto& p : shifted.px) p += delta;
  CHECK(psnr(shifted, x) == doctest::Approx(20.0 * std::log10(range / delta)).epsilon(1e-12));

  CHECK(psnr(x, x) == 100.0); // exact cap at zero error

  // Just below the cap threshold: MSE < (range/1e5)^2 clamps to 100.
  Image tiny = x;
  tiny.px[0] += range * 1e-6;
  CHECK(psnr(tiny, x) == 100.0);

  Image zero(8, 8, 0.0);
  CHECK_THROWS_AS(psnr(x, zero), std::invalid_argument);
}

TEST_CASE("ssim matches a brute-force reference implementation") {
  CHECK(ssim(random_image(16, 16, 3), random_image(16, 16, 3)) == doctest::Approx(1.0));
  for (std::uint64_t seed = 10; seed < 15; ++seed) {
    Image x = random_image(16, 16, seed, 0.1, 1.0);
    Image noisy = x;
    Rng rng(seed + 100);
    for (auto& p : noisy.px) p = std::clamp(p + rng.gaussian(0.0, 0.1), 0.0, 1.0);
    const double got = ssim(noisy, x);
    const double ref = ssim_brute(noisy, x);
    CHECK(got == doctest::Approx(ref).epsilon(1e-10));
    CHECK(got < 1.0);
    CHECK(got > 0.0);
  }
  CHECK_THROWS_AS(ssim(Image(6, 6, 0.5), Image(6, 6, 0.5)), std::invalid_argument);
}

TEST_CASE("higher distortion scores worse on every metric") {
  Image x = random_image(32, 32, 20, 0.1, 1.0);
  Image small_err = x, big_err = x;
  Rng rng(21);
  for (std::size_t i = 0; i < x.px.size(); ++i) {
    const double e = rng.gaussian(0.0, 1.0);
    small_err.px[i] = std::clamp(x.px[i] + 0.02 * e, 0.0, 1.0);
    big_err.px[i] = std::clamp(x.px[i] + 0.15 * e, 0.0, 1.0);
  }
  CHECK(nmse(small_err, x) < nmse(big_err, x));
  CHECK(psnr(small_err, x) > psnr(big_err, x));
  CHECK(ssim(small_err, x) > ssim(big_err, x));
}

TEST_CASE("region metrics crop the box but keep the full data range") {
  Image x = random_image(32, 32, 30, 0.1, 0.6);
  x.at(0, 0) = 1.0; // the global max lives outside the box
  Image xhat = x;
  BBox box{8, 8, 20, 20, "lesion"};
  for (int y = box.y0; y < box.y1; ++y)
    for (int x0 = box.x0; x0 < box.x1; ++x0) xhat.at(y, x0) += 0.05;

  RegionMetrics rm = region_metrics(xhat, x, box);

  Image crop_x(12, 12), crop_h(12, 12);
  for (int y = 0; y < 12; ++y)
    for (int c = 0; c < 12; ++c) {
      crop_x.at(y, c) = x.at(box.y0 + y, box.x0 + c);
      crop_h.at(y, c) = xhat.at(box.y0 + y, box.x0 + c);
    }
  CHECK(rm.nmse == doctest::Approx(nmse(crop_h, crop_x)).epsilon(1e-12));
  // Crop max is 0.6-ish but range stays 1.0 from the full reference: PSNR is
  // 20*log10(1.0/0.05).
  CHECK(rm.psnr == doctest::Approx(20.0 * std::log10(1.0 / 0.05)).epsilon(1e-12));

  CHECK_THROWS_AS(region_metrics(xhat, x, BBox{28, 28, 40, 40, ""}), std::invalid_argument);
  CHECK_THROWS_AS(region_metrics(xhat, x, BBox{0, 0, 7, 12, ""}), std::invalid_argument);
}

TEST_CASE("paired t-test oracle: diffs {1,2,3}") {
  // mean 2, sd 1, se 1/sqrt(3): t = 2*sqrt(3), df = 2,
  // p = 2*(1 - F(t)) with F(t) = 1/2 + t / (2*sqrt(2 + t^2)) for df = 2.
  TTestResult r = paired_t_test({1.0, 2.0, 3.0}, {0.0, 0.0, 0.0});
  CHECK(r.n == 3);
  CHECK(r.degrees_of_freedom == 2);
  CHECK(r.t_statistic == doctest::Approx(2.0 * std::sqrt(3.0)).epsilon(1e-12));
  const double t = 2.0 * std::sqrt(3.0);
  const double p_exact = 2.0 * (1.0 - (0.5 + t / (2.0 * std::sqrt(2.0 + t * t))));
  CHECK(r.p_value == doctest::Approx(p_exact).epsilon(1e-9));
  CHECK(r.p_value == doctest::Approx(0.0742).epsilon(2e-3));
}

TEST_CASE("paired t-test direction, symmetry, and degenerate cases") {
  std::vector<double> a = {3.0, 4.0, 5.0, 6.0};
  std::vector<double> b = {1.0, 2.5, 2.0, 4.0};
  TTestResult ab = paired_t_test(a, b);
  TTestResult ba = paired_t_test(b, a);
  CHECK(ab.t_statistic == doctest::Approx(-ba.t_statistic));
  CHECK(ab.p_value == doctest::Approx(ba.p_value));
  CHECK(ab.t_statistic > 0.0);

  TTestResult same = paired_t_test(a, a);
  CHECK(same.t_statistic == 0.0);
  CHECK(same.p_value == 1.0);

  CHECK_THROWS_AS(paired_t_test({1.0}, {0.0}), std::invalid_argument);
  CHECK_THROWS_AS(paired_t_test({1.0, 2.0}, {0.0}), std::invalid_argument);
  // Constant nonzero difference: zero variance, undefined t.
  CHECK_THROWS_AS(paired_t_test({2.0, 3.0}, {1.0, 2.0}), std::invalid_argument);
}

TEST_CASE("t-test p-value shrinks with larger consistent effects") {
  Rng rng(55);
  std::vector<double> base(40);
  for (auto& v : base) v = rng.uniform(0.0, 1.0);
  double last_p = 1.1;
  for (double effect : {0.01, 0.05, 0.2}) {
    std::vector<double> shifted = base;
    Rng jitter(56);
    for (auto& v : shifted) v += effect + 0.02 * jitter.gaussian();
    TTestResult r = paired_t_test(shifted, base);
    CHECK(r.p_value < last_p);
    last_p = r.p_value;
  }
  CHECK(last_p < 1e-6);
}

TEST_CASE("regularized incomplete beta oracles") {
  CHECK(regularized_incomplete_beta(1.0, 1.0, 0.0) == 0.0);
  CHECK(regularized_incomplete_beta(1.0, 1.0, 1.0) == 1.0);
  // I_x(1,1) = x.
  CHECK(regularized_incomplete_beta(1.0, 1.0, 0.37) == doctest::Approx(0.37).epsilon(1e-12));
  // I_x(2,2) = x^2 (3 - 2x).
  CHECK(regularized_incomplete_beta(2.0, 2.0, 0.25) ==
        doctest::Approx(0.25 * 0.25 * (3 - 0.5)).epsilon(1e-12));
  // Symmetry I_x(a,b) = 1 - I_{1-x}(b,a).
  CHECK(regularized_incomplete_beta(2.5, 1.5, 0.3) ==
        doctest::Approx(1.0 - regularized_incomplete_beta(1.5, 2.5, 0.7)).epsilon(1e-10));
  CHECK_THROWS_AS(regularized_incomplete_beta(0.0, 1.0, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(regularized_incomplete_beta(1.0, 1.0, 1.5), std::invalid_argument);
}

TEST_CASE("mean_std") {
  MeanStd ms = mean_std({1.0, 2.0, 3.0, 4.0});
  CHECK(ms.mean == doctest::Approx(2.5));
  CHECK(ms.std == doctest::Approx(std::sqrt(5.0 / 3.0)).epsilon(1e-12));
  CHECK(ms.n == 4);
  MeanStd one = mean_std({7.0});
  CHECK(one.mean == 7.0);
  CHECK(one.std == 0.0);
  CHECK(one.n == 1);
}

TEST_CASE("metrics CSV row format") {
  MetricsRow row;
  row.sample_id = "s0007";
  row.pattern = "random-r4-famA";
  row.r = 4;
  row.family = 'A';
  row.region = "full";
  row.nmse = 0.5;
  row.psnr = 32.25;
  row.ssim = 0.875;
  CHECK(std::string(kMetricsCsvHeader) == "sample_id,pattern,R,family,region,nmse,psnr,ssim");
  CHECK(metrics_row_to_csv(row) == "s0007,random-r4-famA,4,A,full,0.5,32.25,0.875");

  // Round-trip precision: 17 significant digits reproduce doubles exactly.
  row.nmse = 1.0 / 3.0;
  const std::string line = metrics_row_to_csv(row);
  const auto first = line.find(",full,") + 6;
  const auto comma = line.find(',', first);
  CHECK(std::stod(line.substr(first, comma - first)) == 1.0 / 3.0);
}
