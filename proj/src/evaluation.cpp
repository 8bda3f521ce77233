#include "adjust/evaluation.hpp"

#include <cmath>
#include <limits>
#include <ostream>

#include "adjust/io.hpp"

namespace adjust {

namespace {

void require_same_length(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& y,
                         const char* what) {
  require(x.size() == y.size(), std::string(what) + ": length mismatch (" +
                                    std::to_string(x.size()) + " vs " +
                                    std::to_string(y.size()) + ")");
  require(x.size() > 0, std::string(what) + ": empty input");
}

double psnr_from(double peak, double err) {
  if (err == 0.0) return kPsnrInfinity;
  return 10.0 * std::log10(peak * peak / err);
}

}  // namespace

double mse(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& y) {
  require_same_length(x, y, "mse");
  return (x - y).squaredNorm();
}

double psnr(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& gt) {
  require_same_length(x, gt, "psnr");
  return psnr_from(gt.maxCoeff(), (x - gt).squaredNorm());
}

double mse_normalized(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& y) {
  require_same_length(x, y, "mse_normalized");
  return (x - y).squaredNorm() / static_cast<double>(x.size());
}

double psnr_normalized(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& gt) {
  require_same_length(x, gt, "psnr_normalized");
  return psnr_from(gt.maxCoeff(), (x - gt).squaredNorm() / static_cast<double>(x.size()));
}

double ssim(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& y) {
  require_same_length(x, y, "ssim");
  constexpr double c1 = 0.01 * 0.01;
  constexpr double c2 = 0.03 * 0.03;
  const double n = static_cast<double>(x.size());
  const double mx = x.mean();
  const double my = y.mean();
  const auto dx = x.array() - mx;
  const auto dy = y.array() - my;
  const double vx = dx.square().sum() / n;
  const double vy = dy.square().sum() / n;
  const double cxy = (dx * dy).sum() / n;
  return ((2.0 * mx * my + c1) * (2.0 * cxy + c2)) /
         ((mx * mx + my * my + c1) * (vx + vy + c2));
}

Matrix column_errors(const Eigen::Ref<const Matrix>& rec, const Eigen::Ref<const Matrix>& gt) {
  require_shape(rec, gt.rows(), gt.cols(), "column_errors: reconstruction");
  Matrix E(rec.cols(), gt.cols());
  for (Index i = 0; i < rec.cols(); ++i)
    for (Index j = 0; j < gt.cols(); ++j) E(i, j) = (rec.col(i) - gt.col(j)).norm();
  return E;
}

MatchResult greedy_match(const Eigen::Ref<const Matrix>& rec, const Eigen::Ref<const Matrix>& gt) {
  require_shape(rec, gt.rows(), gt.cols(), "greedy_match: reconstruction");
  require(gt.rows() > 0 && gt.cols() > 0, "greedy_match: empty maps");
  require(rec.allFinite() && gt.allFinite(), "greedy_match: non-finite input");
  const Matrix E = column_errors(rec, gt);
  const Index m = gt.cols();
  std::vector<bool> rec_used(static_cast<std::size_t>(m), false);
  std::vector<bool> gt_used(static_cast<std::size_t>(m), false);

  MatchResult out;
  for (Index l = 0; l < m; ++l) {
    Index bi = -1;
    Index bj = -1;
    double best = std::numeric_limits<double>::infinity();
    // Row-major scan with strict comparison keeps the smallest (i, j) on ties.
    for (Index i = 0; i < m; ++i) {
      if (rec_used[static_cast<std::size_t>(i)]) continue;
      for (Index j = 0; j < m; ++j) {
        if (gt_used[static_cast<std::size_t>(j)]) continue;
        if (bi < 0 || E(i, j) < best) {
          best = E(i, j);
          bi = i;
          bj = j;
        }
      }
    }
    rec_used[static_cast<std::size_t>(bi)] = true;
    gt_used[static_cast<std::size_t>(bj)] = true;

    PairMetrics p;
    p.rec = bi;
    p.gt = bj;
    p.error = best;
    p.mse = mse(rec.col(bi), gt.col(bj));
    p.psnr = psnr(rec.col(bi), gt.col(bj));
    p.ssim = ssim(rec.col(bi), gt.col(bj));
    out.pairs.push_back(p);
  }
  out.averages = aggregate(out);
  return out;
}

namespace {

MetricAverages mean_of(const MatchResult& match, double psnr_cap) {
  require(!match.pairs.empty(), "aggregate: empty matching");
  MetricAverages avg;
  for (const auto& p : match.pairs) {
    avg.mse += p.mse;
    avg.psnr += std::isinf(p.psnr) ? psnr_cap : p.psnr;
    avg.ssim += p.ssim;
  }
  const double n = static_cast<double>(match.pairs.size());
  avg.mse /= n;
  avg.psnr /= n;
  avg.ssim /= n;
  return avg;
}

}  // namespace

MetricAverages aggregate(const MatchResult& match) { return mean_of(match, kPsnrInfinity); }

MetricAverages aggregate_saturated(const MatchResult& match) {
  return mean_of(match, kPsnrSaturation);
}

void write_results_header(std::ostream& os) {
  os << "method,material_rec,material_gt,mse,psnr,ssim\n";
}

void write_results_rows(std::ostream& os, const std::string& method, const MatchResult& match,
                        const std::vector<std::string>& rec_names,
                        const std::vector<std::string>& gt_names) {
  auto name = [](const std::vector<std::string>& names, Index i) {
    if (names.empty()) return std::to_string(i);
    require(i < static_cast<Index>(names.size()), "write_results_rows: too few material names");
    return names[static_cast<std::size_t>(i)];
  };
  for (const auto& p : match.pairs) {
    os << method << ',' << name(rec_names, p.rec) << ',' << name(gt_names, p.gt) << ','
       << format_double(p.mse) << ','
       << format_double(std::isinf(p.psnr) ? kPsnrSaturation : p.psnr) << ','
       << format_double(p.ssim) << '\n';
  }
  const MetricAverages avg = aggregate_saturated(match);
  os << method << ",avg,avg," << format_double(avg.mse) << ',' << format_double(avg.psnr) << ','
     << format_double(avg.ssim) << '\n';
}

}  // namespace adjust
