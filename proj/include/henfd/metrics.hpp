#pragma once

#include <span>
#include <vector>

namespace henfd {

struct RocPoint {
  double fpr = 0.0;
  double tpr = 0.0;
};

// Threshold sweep over unique scores, descending. Tied scores move FPR and
// TPR together (one point per unique score); the curve starts at (0,0) and
// ends at (1,1). Requires at least one sample of each class.
std::vector<RocPoint> roc_points(std::span<const double> scores,
                                 std::span<const int> labels);

// Trapezoidal area of the curve restricted to FPR <= maxfpr, with linear
// interpolation at the cut.
double partial_auc(const std::vector<RocPoint>& curve, double maxfpr);

// Standardized partial AUC: 0.5 * (1 + (pAUC - minarea) / (maxarea - minarea))
// with minarea = maxfpr^2 / 2 and maxarea = maxfpr. 0.5 is chance, 1 perfect.
double spauc(std::span<const double> scores, std::span<const int> labels,
             double maxfpr);

// Full trapezoidal AUC.
double auc(std::span<const double> scores, std::span<const int> labels);

struct MeanCi {
  double mean = 0.0;
  double half_width = 0.0;
};

// Student-t confidence interval with n-1 degrees of freedom.
MeanCi mean_ci(std::span<const double> values, double confidence = 0.95);

// Evaluation summary over one or more trials. With a single trial the mean
// is that value and the half-width is zero.
struct MetricReport {
  double spauc = 0.0;  // mean over trials
  double auc = 0.0;    // mean over trials
  double maxfpr = 0.01;
  std::vector<double> trial_spauc;
  std::vector<double> trial_auc;
  double spauc_half_width = 0.0;  // 95% CI
  double auc_half_width = 0.0;
};

MetricReport make_report(std::vector<double> trial_spauc,
                         std::vector<double> trial_auc, double maxfpr);

}  // namespace henfd
