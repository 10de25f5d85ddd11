#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "henfd/metrics.hpp"

using namespace henfd;

namespace {

// Independent O(P*N*T) oracle: for every candidate threshold (each unique
// score, plus one above all), count FP/TP rates, then integrate the polyline
// with the trapezoid rule up to maxfpr.
double brute_force_pauc(const std::vector<double>& scores,
                        const std::vector<int>& labels, double maxfpr) {
  std::vector<double> uniq = scores;
  std::sort(uniq.begin(), uniq.end(), std::greater<>());
  uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());

  double n_pos = 0, n_neg = 0;
  for (int y : labels) (y == 1 ? n_pos : n_neg) += 1.0;

  std::vector<double> fpr{0.0}, tpr{0.0};
  for (double th : uniq) {
    double fp = 0, tp = 0;
    for (size_t i = 0; i < scores.size(); ++i) {
      if (scores[i] >= th) (labels[i] == 1 ? tp : fp) += 1.0;
    }
    fpr.push_back(fp / n_neg);
    tpr.push_back(tp / n_pos);
  }

  double area = 0.0;
  for (size_t i = 1; i < fpr.size(); ++i) {
    double x0 = fpr[i - 1], x1 = fpr[i];
    double y0 = tpr[i - 1], y1 = tpr[i];
    if (x0 >= maxfpr) break;
    if (x1 > maxfpr) {  // clip the last segment at the cut
      const double t = (maxfpr - x0) / (x1 - x0);
      y1 = y0 + t * (y1 - y0);
      x1 = maxfpr;
    }
    area += 0.5 * (y0 + y1) * (x1 - x0);
  }
  return area;
}

double brute_force_spauc(const std::vector<double>& scores,
                         const std::vector<int>& labels, double maxfpr) {
  const double minarea = 0.5 * maxfpr * maxfpr;
  const double maxarea = maxfpr;
  const double p = brute_force_pauc(scores, labels, maxfpr);
  return 0.5 * (1.0 + (p - minarea) / (maxarea - minarea));
}

}  // namespace

TEST_CASE("spauc matches a brute-force threshold sweep on random score sets") {
  std::mt19937_64 rng(20240601);
  std::uniform_int_distribution<int> nd(10, 1000);
  std::uniform_real_distribution<double> sd(0.0, 1.0);
  std::uniform_real_distribution<double> fd(0.005, 0.5);
  for (int rep = 0; rep < 200; ++rep) {
    const int n = nd(rng);
    std::vector<double> scores(n);
    std::vector<int> labels(n);
    bool has_pos = false, has_neg = false;
    for (int i = 0; i < n; ++i) {
      // quantize some reps so that score ties actually occur
      double s = sd(rng);
      if (rep % 3 == 0) s = std::round(s * 8.0) / 8.0;
      scores[i] = s;
      labels[i] = sd(rng) < 0.3 ? 1 : 0;
      (labels[i] ? has_pos : has_neg) = true;
    }
    if (!has_pos) labels[0] = 1;
    if (!has_neg) labels[n > 1 ? 1 : 0] = 0;
    const double maxfpr = fd(rng);
    const double got = spauc(scores, labels, maxfpr);
    const double want = brute_force_spauc(scores, labels, maxfpr);
    CHECK(std::abs(got - want) <= 1e-12);
  }
}

TEST_CASE("full auc matches brute force") {
  std::mt19937_64 rng(7);
  for (int rep = 0; rep < 50; ++rep) {
    std::vector<double> scores;
    std::vector<int> labels;
    std::uniform_real_distribution<double> sd(0.0, 1.0);
    for (int i = 0; i < 200; ++i) {
      scores.push_back(std::round(sd(rng) * 16.0) / 16.0);
      labels.push_back(i % 5 == 0 ? 1 : 0);
    }
    CHECK(std::abs(auc(scores, labels) - brute_force_pauc(scores, labels, 1.0)) <=
          1e-12);
  }
}

TEST_CASE("spauc analytic anchors") {
  // perfect ranker: every positive above every negative
  std::vector<double> s{0.9, 0.8, 0.2, 0.1};
  std::vector<int> y{1, 1, 0, 0};
  CHECK(spauc(s, y, 0.01) == 1.0);
  CHECK(spauc(s, y, 0.5) == 1.0);

  // all scores tied: chance level, exactly 0.5
  std::vector<double> t{0.4, 0.4, 0.4, 0.4};
  CHECK(spauc(t, y, 0.01) == 0.5);
  CHECK(spauc(t, y, 1.0) == 0.5);

  // perfectly wrong ranker maps to <= 0.5
  std::vector<double> w{0.1, 0.2, 0.8, 0.9};
  CHECK(spauc(w, y, 0.3) <= 0.5);
}

TEST_CASE("hand-computed spauc anchor") {
  // scores desc: 0.9(+), 0.7(-), 0.6(+), 0.3(-); n_pos = n_neg = 2
  // curve: (0,0) -> (0,.5) -> (.5,.5) -> (.5,1) -> (1,1)
  // at maxfpr = 0.5: pauc = 0.5 * 0.5 = 0.25
  // spauc = 0.5 * (1 + (0.25 - 0.125) / (0.5 - 0.125)) = 0.5 * (1 + 1/3)
  std::vector<double> s{0.9, 0.7, 0.6, 0.3};
  std::vector<int> y{1, 0, 1, 0};
  CHECK(spauc(s, y, 0.5) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  // full auc of the same ranking: 0.75
  CHECK(auc(s, y) == doctest::Approx(0.75).epsilon(1e-12));
}

TEST_CASE("roc curve endpoints and tie handling") {
  std::vector<double> s{0.5, 0.5, 0.5, 0.9};
  std::vector<int> y{1, 0, 0, 1};
  auto curve = roc_points(s, y);
  REQUIRE(curve.size() >= 2);
  CHECK(curve.front().fpr == 0.0);
  CHECK(curve.front().tpr == 0.0);
  CHECK(curve.back().fpr == 1.0);
  CHECK(curve.back().tpr == 1.0);
  // the three tied 0.5 scores contribute a single point: (2/2, 2/2) jump
  // from (0, 1/2) directly, i.e. exactly 3 points on this curve
  CHECK(curve.size() == 3);
  CHECK(curve[1].fpr == 0.0);
  CHECK(curve[1].tpr == doctest::Approx(0.5));
}

TEST_CASE("degenerate inputs are rejected") {
  std::vector<double> s{0.1, 0.2};
  std::vector<int> all_pos{1, 1};
  std::vector<int> all_neg{0, 0};
  std::vector<int> ok{1, 0};
  CHECK_THROWS_AS((void)roc_points(s, all_pos), std::invalid_argument);
  CHECK_THROWS_AS((void)roc_points(s, all_neg), std::invalid_argument);
  CHECK_THROWS_AS((void)spauc(s, all_pos, 0.01), std::invalid_argument);
  CHECK_THROWS_AS((void)spauc(s, ok, 0.0), std::invalid_argument);
  CHECK_THROWS_AS((void)spauc(s, ok, 1.5), std::invalid_argument);
}

TEST_CASE("reversing score signs maps perfect to perfectly wrong") {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> sd(0.0, 1.0);
  std::vector<double> s;
  std::vector<int> y;
  for (int i = 0; i < 100; ++i) {
    y.push_back(i < 20 ? 1 : 0);
    s.push_back(y.back() ? 0.5 + 0.5 * sd(rng) : 0.49 * sd(rng));
  }
  CHECK(spauc(s, y, 0.2) == 1.0);
  std::vector<double> neg;
  for (double v : s) neg.push_back(-v);
  CHECK(spauc(neg, y, 0.2) <= 0.5);
}

TEST_CASE("student-t confidence interval anchor") {
  // n = 2, values {0, 2}: mean 1, sample sd sqrt(2), se = 1,
  // t_{0.975, df=1} = 12.706 -> half width 12.706
  std::vector<double> v{0.0, 2.0};
  MeanCi ci = mean_ci(v, 0.95);
  CHECK(ci.mean == doctest::Approx(1.0));
  CHECK(ci.half_width == doctest::Approx(12.706).epsilon(1e-3));

  // n = 3, values {1, 2, 3}: mean 2, sd 1, se = 1/sqrt(3),
  // t_{0.975, df=2} = 4.303 -> half width 4.303 / sqrt(3)
  std::vector<double> w{1.0, 2.0, 3.0};
  MeanCi ci3 = mean_ci(w, 0.95);
  CHECK(ci3.mean == doctest::Approx(2.0));
  CHECK(ci3.half_width == doctest::Approx(4.303 / std::sqrt(3.0)).epsilon(1e-3));
}

TEST_CASE("single-trial report is degenerate, mean_ci needs two points") {
  MetricReport rep = make_report({0.75}, {0.8}, 0.01);
  CHECK(rep.spauc == 0.75);
  CHECK(rep.auc == 0.8);
  CHECK(rep.spauc_half_width == 0.0);
  CHECK_THROWS_AS((void)mean_ci(std::vector<double>{0.75}), std::invalid_argument);
  CHECK_THROWS_AS((void)mean_ci(std::vector<double>{0.1, 0.2}, 1.5),
                  std::invalid_argument);
}

TEST_CASE("report aggregates trials") {
  MetricReport rep = make_report({0.8, 0.9}, {0.85, 0.95}, 0.01);
  CHECK(rep.spauc == doctest::Approx(0.85));
  CHECK(rep.auc == doctest::Approx(0.9));
  CHECK(rep.maxfpr == 0.01);
  CHECK(rep.trial_spauc.size() == 2);
  CHECK(rep.spauc_half_width > 0.0);

  CHECK_THROWS_AS((void)make_report({}, {}, 0.01), std::invalid_argument);
  CHECK_THROWS_AS((void)make_report({0.5}, {}, 0.01), std::invalid_argument);
}
