#pragma once

#include <string>
#include <vector>

#include "mrprime/grid.hpp"
#include "mrprime/phantom.hpp"

namespace mrprime {

struct MetricsRow {
  std::string sample_id;
  std::string pattern; // scenario tags
  int r = 0;
  char family = 'A';
  std::string region = "full"; // "full" or box label
  double nmse = 0.0;
  double psnr = 0.0;
  double ssim = 0.0;
};

inline constexpr const char* kMetricsCsvHeader = "sample_id,pattern,R,family,region,nmse,psnr,ssim";

std::string metrics_row_to_csv(const MetricsRow& row);

/// ||xhat - x||^2 / ||x||^2. The reference x must not be all-zero.
double nmse(const Image& xhat, const Image& x);

/// 20*log10(max(x)/sqrt(MSE)), capped at 100 dB once MSE < (max(x)/1e5)^2.
/// Data range is the per-reference-image maximum, which must be positive.
double psnr(const Image& xhat, const Image& x);

/// Mean local SSIM: 7x7 uniform window, k1=0.01, k2=0.03, unbiased (n-1)
/// variance normalization, valid windows only, data range = max(x).
double ssim(const Image& xhat, const Image& x);

/// Metrics over a cropped box; PSNR/SSIM keep the full reference's data range.
struct RegionMetrics {
  double nmse = 0.0;
  double psnr = 0.0;
  double ssim = 0.0;
};
RegionMetrics region_metrics(const Image& xhat, const Image& x, const BBox& box);

struct TTestResult {
  double t_statistic = 0.0;
  int degrees_of_freedom = 0;
  double p_value = 1.0;
  int n = 0;
};

/// Two-sided paired Student's t-test on a - b. Zero variance with zero mean
/// yields t = 0, p = 1; zero variance with nonzero mean is an error.
TTestResult paired_t_test(const std::vector<double>& a, const std::vector<double>& b);

/// Regularized incomplete beta I_x(a, b) (exposed for oracle tests).
double regularized_incomplete_beta(double a, double b, double x);

struct MeanStd {
  double mean = 0.0;
  double std = 0.0; // sample std (n-1); 0 when n < 2
  int n = 0;
};
MeanStd mean_std(const std::vector<double>& v);

} // namespace mrprime
