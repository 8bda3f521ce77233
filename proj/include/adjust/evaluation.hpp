#pragma once

#include "adjust/common.hpp"

#include <iosfwd>
#include <limits>
#include <string>
#include <utility>
#include <vector>

namespace adjust {

/// Returned by psnr() when the two images are identical.
inline constexpr double kPsnrInfinity = std::numeric_limits<double>::infinity();
/// Value written to CSV files in place of an infinite PSNR.
inline constexpr double kPsnrSaturation = 99.0;

/// Squared Euclidean distance ||x - y||^2 (no division by the pixel count).
double mse(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& y);

/// 10 log10(max(gt)^2 / ||x - gt||^2); +inf when x == gt.
double psnr(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& gt);

/// ||x - y||^2 / N.
double mse_normalized(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& y);

/// 10 log10(max(gt)^2 / (||x - gt||^2 / N)); +inf when x == gt.
double psnr_normalized(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& gt);

/// Global SSIM with dynamic range L = 1: whole-image means, variances and
/// covariance, C1 = 0.01^2, C2 = 0.03^2.
double ssim(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& y);

struct PairMetrics {
  Index rec = 0;
  Index gt = 0;
  double error = 0.0;  ///< ||col_rec - col_gt||
  double mse = 0.0;
  double psnr = 0.0;
  double ssim = 0.0;
};

struct MetricAverages {
  double mse = 0.0;
  double psnr = 0.0;
  double ssim = 0.0;
};

struct MatchResult {
  /// In the order the greedy procedure picked them.
  std::vector<PairMetrics> pairs;
  MetricAverages averages;
};

/// Column error matrix E(i, j) = ||rec.col(i) - gt.col(j)||.
Matrix column_errors(const Eigen::Ref<const Matrix>& rec, const Eigen::Ref<const Matrix>& gt);

/// Repeatedly takes the smallest unmatched entry of the column error matrix,
/// breaking ties by smallest rec index and then smallest gt index, and scores
/// each pair. Averages are filled in.
MatchResult greedy_match(const Eigen::Ref<const Matrix>& rec, const Eigen::Ref<const Matrix>& gt);

/// Arithmetic means over the pairs. Throws on an empty matching.
MetricAverages aggregate(const MatchResult& match);

/// Averages with infinite PSNR replaced by kPsnrSaturation, for file output.
MetricAverages aggregate_saturated(const MatchResult& match);

/// Header `method,material_rec,material_gt,mse,psnr,ssim`.
void write_results_header(std::ostream& os);

/// One row per pair, then `method,avg,avg,...`. Material names default to
/// column indices when the name lists are empty.
void write_results_rows(std::ostream& os, const std::string& method, const MatchResult& match,
                        const std::vector<std::string>& rec_names = {},
                        const std::vector<std::string>& gt_names = {});

}  // namespace adjust
