#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "rolecast/nn/optim.hpp"
#include "test_util.hpp"

using namespace rolecast;
using namespace rolecast::nn;

namespace {

struct Single {
  Tensor value{{1}}, grad{{1}};
  std::vector<ParamSlot> slots() { return {{"p", &value, &grad}}; }
};

// Largest |m_hat| / sqrt(v_hat) any gradient history of length t can produce
// (Cauchy-Schwarz over the exponential weights).
double ratio_bound(long t, double b1 = 0.9, double b2 = 0.999) {
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(t));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(t));
  double s = 0.0;
  for (long i = 1; i <= t; ++i) {
    const double a = (1.0 - b1) * std::pow(b1, static_cast<double>(t - i)) / c1;
    const double c = (1.0 - b2) * std::pow(b2, static_cast<double>(t - i)) / c2;
    s += a * a / c;
  }
  return std::sqrt(s);
}

}  // namespace

TEST(Adam, ZeroGradientLeavesParamsAndDecaysMoments) {
  Single p;
  p.value[0] = 0.7;
  Adam adam;
  p.grad[0] = 2.0;
  adam.step(p.slots());
  const double m1 = adam.first_moments()[0][0], v1 = adam.second_moments()[0][0];
  p.grad[0] = 0.0;
  adam.step(p.slots());
  // With zero gradient the bias-corrected update is still driven by the old moment,
  // so the parameter keeps moving; only the moments are guaranteed to decay.
  EXPECT_NEAR(adam.first_moments()[0][0], 0.9 * m1, 1e-15);
  EXPECT_NEAR(adam.second_moments()[0][0], 0.999 * v1, 1e-18);
  EXPECT_EQ(adam.step_count(), 2);

  Single fresh;
  fresh.value[0] = 0.7;
  Adam idle;
  for (int i = 0; i < 5; ++i) idle.step(fresh.slots());
  EXPECT_EQ(fresh.value[0], 0.7);
  EXPECT_EQ(idle.first_moments()[0][0], 0.0);
}

TEST(Adam, FirstStepMovesBySignTimesLearningRate) {
  for (double g : {3.0, -0.02, 1e-3, -250.0}) {
    Single p;
    Adam adam(AdamOptions{0.01});
    p.grad[0] = g;
    adam.step(p.slots());
    const double expected = -0.01 * g / (std::abs(g) + 1e-7);
    EXPECT_NEAR(p.value[0], expected, 1e-15);
    EXPECT_NEAR(p.value[0], -0.01 * (g > 0 ? 1.0 : -1.0), 0.01 * 1e-4);
  }
}

TEST(Adam, ConstantGradientUpdateNeverExceedsLearningRate) {
  Single p;
  Adam adam;
  p.grad[0] = 0.37;
  for (int t = 0; t < 2000; ++t) {
    const double before = p.value[0];
    adam.step(p.slots());
    EXPECT_LE(std::abs(p.value[0] - before), 1e-3 * (1.0 + 1e-12));
  }
}

TEST(Adam, UpdateBoundedByWeightedRatio) {
  // A blanket |update| <= lr bound does not hold for arbitrary gradient histories:
  // a large gradient after a long quiet run moves by about 3.16 lr.
  {
    Single p;
    Adam adam;
    for (int t = 0; t < 10000; ++t) adam.step(p.slots());
    p.grad[0] = 1.0;
    const double before = p.value[0];
    adam.step(p.slots());
    const double update = std::abs(p.value[0] - before);
    EXPECT_GT(update, 3.0e-3);
    EXPECT_LE(update, 1e-3 * ratio_bound(adam.step_count()));
  }
  Rng rng(1);
  for (int trial = 0; trial < 50; ++trial) {
    Single p;
    Adam adam;
    const int steps = uniform_int(rng, 1, 300);
    for (int t = 0; t < steps; ++t) {
      p.grad[0] = (2.0 * uniform01(rng) - 1.0) * std::pow(10.0, uniform_int(rng, -3, 3));
      const double before = p.value[0];
      adam.step(p.slots());
      EXPECT_LE(std::abs(p.value[0] - before), 1e-3 * ratio_bound(adam.step_count()) * (1.0 + 1e-12));
    }
  }
}

TEST(Adam, RejectsNonFiniteGradients) {
  Single p;
  Adam adam;
  p.grad[0] = std::nan("");
  try {
    adam.step(p.slots());
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.category(), ErrorCategory::numeric);
  }
  p.grad[0] = INFINITY;
  EXPECT_THROW(adam.step(p.slots()), Error);
  EXPECT_EQ(adam.step_count(), 0);
}

TEST(Adam, MomentsMatchParameterShapes) {
  Tensor a({2, 3}), ga({2, 3}, 1.0), b({4}), gb({4}, -1.0);
  std::vector<ParamSlot> slots{{"a", &a, &ga}, {"b", &b, &gb}};
  Adam adam;
  adam.step(slots);
  ASSERT_EQ(adam.first_moments().size(), 2u);
  EXPECT_EQ(adam.first_moments()[0].shape(), a.shape());
  EXPECT_EQ(adam.second_moments()[1].shape(), b.shape());
}

TEST(ReduceLrOnPlateau, DecreasingLossesKeepRate) {
  std::vector<double> losses;
  for (int i = 0; i < 50; ++i) losses.push_back(10.0 - 0.1 * i);
  EXPECT_EQ(reduce_lr_on_plateau(losses, 1e-3, 10, 1e-5), 1e-3);
}

TEST(ReduceLrOnPlateau, ConstantLossesHalveAfterPatience) {
  const std::vector<double> ten(10, 1.0), eleven(11, 1.0), twentyone(21, 1.0);
  EXPECT_EQ(reduce_lr_on_plateau(ten, 1e-3, 10, 1e-5), 1e-3);
  EXPECT_EQ(reduce_lr_on_plateau(eleven, 1e-3, 10, 1e-5), 5e-4);
  EXPECT_EQ(reduce_lr_on_plateau(twentyone, 1e-3, 10, 1e-5), 2.5e-4);
}

TEST(ReduceLrOnPlateau, FloorsAtMinimum) {
  const std::vector<double> flat(200, 1.0);
  EXPECT_EQ(reduce_lr_on_plateau(flat, 1e-4, 3, 1e-4), 1e-4);
  EXPECT_EQ(reduce_lr_on_plateau(flat, 1e-3, 3, 1e-4), 1e-4);
}

TEST(ReduceLrOnPlateau, TinyImprovementsDoNotCount) {
  std::vector<double> losses;
  for (int i = 0; i < 11; ++i) losses.push_back(1.0 - 9e-6 * i);
  EXPECT_EQ(reduce_lr_on_plateau(losses, 1e-3, 10, 1e-5), 5e-4);
  EXPECT_THROW(PlateauScheduler(0, 1e-4), Error);
  EXPECT_THROW(PlateauScheduler(3, 0.0), Error);
}
