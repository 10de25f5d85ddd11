#include "henfd/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <boost/math/distributions/students_t.hpp>

namespace henfd {

std::vector<RocPoint> roc_points(std::span<const double> scores,
                                 std::span<const int> labels) {
  if (scores.size() != labels.size()) {
    throw std::invalid_argument("roc_points: scores and labels differ in length");
  }
  std::size_t n_pos = 0;
  std::size_t n_neg = 0;
  for (int y : labels) {
    if (y != 0 && y != 1) throw std::invalid_argument("roc_points: labels must be 0 or 1");
    if (y == 1) ++n_pos; else ++n_neg;
  }
  if (n_pos == 0 || n_neg == 0) {
    throw std::invalid_argument("roc_points: need at least one positive and one negative");
  }

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  std::vector<RocPoint> curve;
  curve.push_back({0.0, 0.0});
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t i = 0;
  while (i < order.size()) {
    // Consume the whole tie group before emitting a point, so ties advance
    // both coordinates at once.
    const double s = scores[order[i]];
    while (i < order.size() && scores[order[i]] == s) {
      if (labels[order[i]] == 1) ++tp; else ++fp;
      ++i;
    }
    curve.push_back({static_cast<double>(fp) / static_cast<double>(n_neg),
                     static_cast<double>(tp) / static_cast<double>(n_pos)});
  }
  return curve;
}

double partial_auc(const std::vector<RocPoint>& curve, double maxfpr) {
  if (maxfpr <= 0.0 || maxfpr > 1.0) {
    throw std::invalid_argument("partial_auc: maxfpr must lie in (0, 1]");
  }
  double area = 0.0;
  for (std::size_t i = 1; i < curve.size(); ++i) {
    const RocPoint& a = curve[i - 1];
    const RocPoint& b = curve[i];
    if (a.fpr >= maxfpr) break;
    if (b.fpr <= maxfpr) {
      area += 0.5 * (a.tpr + b.tpr) * (b.fpr - a.fpr);
    } else {
      // Cut the segment at FPR = maxfpr.
      const double t = (maxfpr - a.fpr) / (b.fpr - a.fpr);
      const double tpr_cut = a.tpr + t * (b.tpr - a.tpr);
      area += 0.5 * (a.tpr + tpr_cut) * (maxfpr - a.fpr);
      break;
    }
  }
  return area;
}

double spauc(std::span<const double> scores, std::span<const int> labels,
             double maxfpr) {
  if (maxfpr <= 0.0 || maxfpr > 1.0) {
    throw std::invalid_argument("spauc: maxfpr must lie in (0, 1]");
  }
  const double pauc = partial_auc(roc_points(scores, labels), maxfpr);
  const double minarea = 0.5 * maxfpr * maxfpr;
  const double maxarea = maxfpr;
  return 0.5 * (1.0 + (pauc - minarea) / (maxarea - minarea));
}

double auc(std::span<const double> scores, std::span<const int> labels) {
  return partial_auc(roc_points(scores, labels), 1.0);
}

MetricReport make_report(std::vector<double> trial_spauc,
                         std::vector<double> trial_auc, double maxfpr) {
  if (trial_spauc.empty() || trial_spauc.size() != trial_auc.size()) {
    throw std::invalid_argument("make_report: need matching, nonempty trial lists");
  }
  MetricReport r;
  r.maxfpr = maxfpr;
  r.trial_spauc = std::move(trial_spauc);
  r.trial_auc = std::move(trial_auc);
  if (r.trial_spauc.size() >= 2) {
    const MeanCi s = mean_ci(r.trial_spauc);
    const MeanCi a = mean_ci(r.trial_auc);
    r.spauc = s.mean;
    r.spauc_half_width = s.half_width;
    r.auc = a.mean;
    r.auc_half_width = a.half_width;
  } else {
    r.spauc = r.trial_spauc.front();
    r.auc = r.trial_auc.front();
  }
  return r;
}

MeanCi mean_ci(std::span<const double> values, double confidence) {
  if (values.size() < 2) {
    throw std::invalid_argument("mean_ci: need at least two values");
  }
  if (confidence <= 0.0 || confidence >= 1.0) {
    throw std::invalid_argument("mean_ci: confidence must lie in (0, 1)");
  }
  const double n = static_cast<double>(values.size());
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= n;
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / (n - 1.0));
  boost::math::students_t dist(n - 1.0);
  const double tq = boost::math::quantile(dist, 0.5 + 0.5 * confidence);
  return {mean, tq * sd / std::sqrt(n)};
}

}  // namespace henfd
