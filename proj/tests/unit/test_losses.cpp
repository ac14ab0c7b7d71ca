#include <cmath>
#include <numeric>
#include <vector>

#include <gtest/gtest.h>

#include "rolecast/losses.hpp"
#include "rolecast/nn/grad_check.hpp"
#include "rolecast/nn/layers.hpp"
#include "test_util.hpp"

using namespace rolecast;
using rolecast::testing::random_tensor;

namespace {

ProbVector random_probs(Rng& rng) {
  std::vector<double> p(5);
  for (auto& v : p) v = 1e-3 + uniform01(rng);
  const double s = std::accumulate(p.begin(), p.end(), 0.0);
  for (auto& v : p) v /= s;
  return ProbVector(p);
}

const ProbVector kWorked({0.1, 0.2, 0.4, 0.2, 0.1});

}  // namespace

TEST(Softmax, Examples) {
  const std::vector<double> equal(5, 3.3);
  const ProbVector uniform = softmax(equal);
  for (double v : uniform.values()) EXPECT_NEAR(v, 0.2, 1e-15);
  const std::vector<double> big{1000, 0, 0, 0, 0};
  const ProbVector p = softmax(big);
  EXPECT_NEAR(p[0], 1.0, 1e-15);
  for (std::size_t i = 1; i < 5; ++i) EXPECT_LT(p[i], 1e-300);
  const std::vector<double> logs{std::log(1.0), std::log(2.0), std::log(3.0), std::log(4.0), std::log(10.0)};
  const std::vector<double> expected{0.05, 0.10, 0.15, 0.20, 0.50};
  const ProbVector q = softmax(logs);
  for (std::size_t i = 0; i < 5; ++i) EXPECT_NEAR(q[i], expected[i], 1e-15);
}

TEST(CrossEntropy, Examples) {
  EXPECT_EQ(categorical_cross_entropy(ProbVector({0, 0, 1, 0, 0}), OneHotLabel(2, 5)), 0.0);
  EXPECT_NEAR(categorical_cross_entropy(ProbVector({.2, .2, .2, .2, .2}), OneHotLabel(4, 5)), std::log(5.0), 1e-12);
  EXPECT_NEAR(categorical_cross_entropy(kWorked, OneHotLabel(0, 5)), 2.302585, 1e-6);
  // Zero probability is clamped rather than producing infinity.
  EXPECT_NEAR(categorical_cross_entropy(ProbVector({1, 0, 0, 0, 0}), OneHotLabel(1, 5)), -std::log(1e-12), 1e-9);
}

TEST(OrdinalCrossEntropy, WorkedValues) {
  EXPECT_EQ(ordinal_distance(kWorked, OneHotLabel(0, 5)), 2u);
  EXPECT_NEAR(ordinal_cross_entropy(kWorked, OneHotLabel(0, 5)), 6.907755, 1e-6);
  EXPECT_NEAR(ordinal_cross_entropy(kWorked, OneHotLabel(0, 5)), -3.0 * std::log(0.1), 1e-9);
  EXPECT_NEAR(ordinal_cross_entropy(kWorked, OneHotLabel(2, 5)), 0.916291, 1e-6);
  EXPECT_NEAR(ordinal_cross_entropy(kWorked, OneHotLabel(2, 5)), -std::log(0.4), 1e-9);
}

TEST(OrdinalCrossEntropy, ArgmaxTiesGoToLowestIndex) {
  const ProbVector tie({0.1, 0.35, 0.35, 0.1, 0.1});
  EXPECT_EQ(argmax(tie.values()), 1u);
  EXPECT_EQ(ordinal_distance(tie, OneHotLabel(4, 5)), 3u);
}

TEST(OrdinalCrossEntropy, DominatesCrossEntropyWithIntegerRatio) {
  Rng rng(1);
  for (int i = 0; i < 10000; ++i) {
    const ProbVector p = random_probs(rng);
    const OneHotLabel y(static_cast<std::size_t>(uniform_int(rng, 0, 4)), 5);
    const double ce = categorical_cross_entropy(p, y);
    const double oce = ordinal_cross_entropy(p, y);
    EXPECT_GE(oce, ce);
    const bool match = argmax(p.values()) == y.index();
    EXPECT_EQ(oce == ce, match);
    const double ratio = oce / ce;
    EXPECT_NEAR(ratio, std::round(ratio), 1e-12);
    EXPECT_GE(ratio, 1.0 - 1e-12);
    EXPECT_LE(ratio, 5.0 + 1e-12);
  }
}

TEST(LogitGradient, OceReducesToCeWhenCorrect) {
  const std::vector<double> logits{0.1, 2.0, -1.0, 0.3, 0.0};
  const OneHotLabel y(1, 5);
  EXPECT_EQ(oce_logit_gradient(logits, y, 0.7), ce_logit_gradient(logits, y, 0.7));
}

TEST(LogitGradient, OceScalesByDistance) {
  const std::vector<double> logits{std::log(0.1), std::log(0.2), std::log(0.4), std::log(0.2), std::log(0.1)};
  const auto oce = oce_logit_gradient(logits, OneHotLabel(0, 5), 1.0);
  const auto ce = ce_logit_gradient(logits, OneHotLabel(0, 5), 1.0);
  for (std::size_t i = 0; i < 5; ++i) EXPECT_EQ(oce[i], 3.0 * ce[i]);
}

TEST(LogitGradient, MatchesFiniteDifferencesInsideConstantWeightRegion) {
  Rng rng(2);
  int checked = 0;
  while (checked < 100) {
    Tensor z = random_tensor({5}, rng, 3.0);
    std::vector<double> sorted(z.values().begin(), z.values().end());
    std::sort(sorted.rbegin(), sorted.rend());
    if (sorted[0] - sorted[1] <= 0.1) continue;
    const OneHotLabel y(static_cast<std::size_t>(uniform_int(rng, 0, 4)), 5);
    const double w = 0.25 + uniform01(rng);
    auto f = [&] { return w * ordinal_cross_entropy(softmax(z.values()), y); };
    const auto g = oce_logit_gradient(z.values(), y, w);
    EXPECT_LT(nn::grad_check(f, z, Tensor({5}, g)), 1e-6);
    ++checked;
  }
}

TEST(LogitGradient, DenseSoftmaxCrossEntropyChain) {
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    nn::Dense head(4, 5);
    head.weight = random_tensor({4, 5}, rng);
    head.bias = random_tensor({5}, rng);
    const Tensor x = random_tensor({1, 4}, rng);
    const OneHotLabel y(static_cast<std::size_t>(uniform_int(rng, 0, 4)), 5);
    auto f = [&] { return categorical_cross_entropy(softmax(head.forward(x).values()), y); };
    const Tensor logits = head.forward(x);
    head.zero_grad();
    head.backward(Tensor({1, 5}, ce_logit_gradient(logits.values(), y, 1.0)));
    const Tensor dw = head.weight_grad, db = head.bias_grad;
    EXPECT_LT(nn::grad_check(f, head.weight, dw), 1e-6);
    EXPECT_LT(nn::grad_check(f, head.bias, db), 1e-6);
  }
}

TEST(ClassBalance, Examples) {
  auto labels_for = [](std::vector<int> counts) {
    std::vector<CollabLabel> out;
    for (std::size_t c = 0; c < counts.size(); ++c)
      for (int i = 0; i < counts[c]; ++i) out.push_back(label_from_index(c));
    return out;
  };
  for (double w : class_balance_weights(labels_for({10, 10, 10, 10, 10}))) EXPECT_DOUBLE_EQ(w, 1.0);
  const auto w = class_balance_weights(labels_for({30, 10, 5, 3, 2}));
  const std::vector<double> expected{1.0 / 3.0, 1.0, 2.0, 10.0 / 3.0, 5.0};
  for (std::size_t c = 0; c < 5; ++c) EXPECT_NEAR(w[c], expected[c], 1e-12);

  const auto labels = labels_for({0, 7, 3, 0, 10});
  const auto absent = class_balance_weights(labels);
  EXPECT_EQ(absent[0], 0.0);
  EXPECT_EQ(absent[3], 0.0);
  double total = 0.0;
  for (auto l : labels) total += absent[index_of(l)];
  EXPECT_NEAR(total / static_cast<double>(labels.size()), 1.0, 1e-12);
  EXPECT_THROW(class_balance_weights(std::vector<CollabLabel>{}), Error);
}

TEST(ClassBalance, WeightsSumToSampleCount) {
  Rng rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<CollabLabel> labels;
    for (std::size_t c = 0; c < 5; ++c)
      for (int i = uniform_int(rng, 1, 40); i > 0; --i) labels.push_back(label_from_index(c));
    const auto w = class_balance_weights(labels);
    double total = 0.0;
    for (auto l : labels) total += w[index_of(l)];
    EXPECT_NEAR(total, static_cast<double>(labels.size()), 1e-6);
  }
}

TEST(BatchLoss, MatchesPerSampleFormulas) {
  Rng rng(5);
  const Tensor logits = random_tensor({4, 5}, rng, 2.0);
  const std::vector<std::size_t> targets{0, 3, 4, 1};
  const std::vector<double> weights{1.0, 0.5, 2.0, 1.5};
  for (LossKind kind : {LossKind::ce, LossKind::oce}) {
    const BatchLoss bl = batch_loss(kind, logits, targets, weights);
    double expect = 0.0;
    for (std::size_t i = 0; i < 4; ++i) {
      std::span<const double> row(logits.data() + i * 5, 5);
      const OneHotLabel y(targets[i], 5);
      expect += weights[i] * loss_value(kind, softmax(row), y);
      const auto g = kind == LossKind::oce ? oce_logit_gradient(row, y, weights[i]) : ce_logit_gradient(row, y, weights[i]);
      for (std::size_t j = 0; j < 5; ++j) EXPECT_NEAR(bl.logit_grad.at(i, j), g[j] / 4.0, 1e-15);
      EXPECT_EQ(bl.predictions[i], argmax(row));
    }
    EXPECT_NEAR(bl.loss, expect / 4.0, 1e-12);
  }
}

TEST(ProbVectorInvariant, RejectsInvalidDistributions) {
  EXPECT_THROW(ProbVector({0.5, 0.6}), Error);
  EXPECT_THROW(ProbVector({1.5, -0.5}), Error);
  EXPECT_THROW(OneHotLabel(5, 5), Error);
}
