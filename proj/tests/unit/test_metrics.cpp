#include <gtest/gtest.h>

#include "rolecast/harness/metrics.hpp"
#include "rolecast/random.hpp"

using namespace rolecast;
using namespace rolecast::harness;

namespace {

using L = CollabLabel;

/// Direct definition: per-class precision/recall/F1 from counts, weighted by support.
std::array<double, 3> brute_force(const std::vector<L>& truth, const std::vector<L>& pred) {
  std::array<double, 3> out{};
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    const L label = label_from_index(c);
    double tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
      if (truth[i] == label && pred[i] == label) ++tp;
      if (truth[i] != label && pred[i] == label) ++fp;
      if (truth[i] == label && pred[i] != label) ++fn;
    }
    const double p = tp + fp > 0 ? tp / (tp + fp) : 0.0;
    const double r = tp + fn > 0 ? tp / (tp + fn) : 0.0;
    const double f = p + r > 0 ? 2 * p * r / (p + r) : 0.0;
    const double w = (tp + fn) / static_cast<double>(truth.size());
    out[0] += w * p;
    out[1] += w * r;
    out[2] += w * f;
  }
  return out;
}

}  // namespace

TEST(WeightedMetrics, PerfectPredictionIsOne) {
  const std::vector<L> y{L::E, L::S, L::P, L::NI, L::WI, L::S};
  const auto m = evaluate_weighted_metrics(y, y);
  EXPECT_DOUBLE_EQ(m.precision, 1.0);
  EXPECT_DOUBLE_EQ(m.recall, 1.0);
  EXPECT_DOUBLE_EQ(m.f1, 1.0);
}

TEST(WeightedMetrics, SmallExample) {
  const std::vector<L> truth{L::S, L::S, L::P}, pred{L::S, L::P, L::P};
  const auto m = evaluate_weighted_metrics(truth, pred);
  // S: p=1 r=.5 f=2/3, weight 2/3. P: p=.5 r=1 f=2/3, weight 1/3.
  EXPECT_NEAR(m.precision, 2.0 / 3 + 0.5 / 3, 1e-12);
  EXPECT_NEAR(m.recall, 2.0 / 3 * 0.5 + 1.0 / 3, 1e-12);
  EXPECT_NEAR(m.f1, 2.0 / 3, 1e-12);
  EXPECT_EQ(m.per_class[1].support, 2u);
  EXPECT_EQ(m.per_class[2].support, 1u);
}

TEST(WeightedMetrics, ClassesAbsentFromTruthWeighZero) {
  // WI is predicted but never true: its precision is 0 but its weight is 0 too.
  const std::vector<L> truth{L::S, L::S}, pred{L::S, L::WI};
  const auto m = evaluate_weighted_metrics(truth, pred);
  EXPECT_EQ(m.per_class[4].support, 0u);
  EXPECT_DOUBLE_EQ(m.precision, 1.0);
  EXPECT_DOUBLE_EQ(m.recall, 0.5);
}

TEST(WeightedMetrics, RejectsBadLengths) {
  const std::vector<L> a{L::S}, b{L::S, L::P}, none;
  EXPECT_THROW(evaluate_weighted_metrics(a, b), Error);
  EXPECT_THROW(evaluate_weighted_metrics(none, none), Error);
}

TEST(WeightedMetrics, MatchesBruteForceOnRandomVectors) {
  Rng rng(11);
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = uniform_int(rng, 1, 40);
    std::vector<L> truth, pred;
    for (int i = 0; i < n; ++i) {
      truth.push_back(label_from_index(static_cast<std::size_t>(uniform_int(rng, 0, 4))));
      pred.push_back(label_from_index(static_cast<std::size_t>(uniform_int(rng, 0, 4))));
    }
    const auto m = evaluate_weighted_metrics(truth, pred);
    const auto ref = brute_force(truth, pred);
    EXPECT_NEAR(m.precision, ref[0], 1e-12);
    EXPECT_NEAR(m.recall, ref[1], 1e-12);
    EXPECT_NEAR(m.f1, ref[2], 1e-12);
    for (double v : {m.precision, m.recall, m.f1}) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0 + 1e-12);
    }
  }
}
