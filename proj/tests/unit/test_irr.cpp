#include <vector>

#include <gtest/gtest.h>

#include "rolecast/irr.hpp"
#include "test_util.hpp"

using namespace rolecast;
using L = CollabLabel;

TEST(CohenKappa, HandExample) {
  const std::vector<L> a{L::S, L::S, L::P, L::P};
  const std::vector<L> b{L::S, L::P, L::P, L::P};
  EXPECT_NEAR(cohen_kappa(a, b), 0.5, 1e-9);
  EXPECT_NEAR(cohen_kappa(b, a), 0.5, 1e-9);
}

TEST(CohenKappa, IdenticalNonConstantIsOne) {
  Rng rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<int> a(static_cast<std::size_t>(uniform_int(rng, 2, 40)));
    for (auto& v : a) v = uniform_int(rng, 0, 4);
    a[0] = 0;
    a[1] = 1;
    EXPECT_DOUBLE_EQ(cohen_kappa(a, a), 1.0);
  }
}

TEST(CohenKappa, ConstantAgreementIsOne) {
  const std::vector<int> a(6, 2);
  EXPECT_EQ(cohen_kappa(a, a), 1.0);
}

TEST(CohenKappa, SymmetricAndBounded) {
  Rng rng(6);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<int> a(20), b(20);
    for (std::size_t i = 0; i < a.size(); ++i) {
      a[i] = uniform_int(rng, 0, 4);
      b[i] = uniform_int(rng, 0, 4);
    }
    const double k = cohen_kappa(a, b);
    EXPECT_DOUBLE_EQ(k, cohen_kappa(b, a));
    EXPECT_GE(k, -1.0);
    EXPECT_LE(k, 1.0);
  }
}

TEST(CohenKappa, IndependentRatersApproachZero) {
  Rng rng(7);
  std::vector<int> a(200000), b(200000);
  for (std::size_t i = 0; i < a.size(); ++i) {
    a[i] = uniform_int(rng, 0, 4);
    b[i] = uniform_int(rng, 0, 4);
  }
  EXPECT_NEAR(cohen_kappa(a, b), 0.0, 0.01);
}

TEST(CohenKappa, RejectsLengthMismatch) {
  EXPECT_THROW(cohen_kappa(std::vector<int>{1, 2}, std::vector<int>{1}), Error);
  EXPECT_THROW(cohen_kappa(std::vector<int>{}, std::vector<int>{}), Error);
}

TEST(AveragePairwiseAgreement, Examples) {
  const std::vector<int> x{1, 2, 3, 4};
  EXPECT_EQ(average_pairwise_agreement<int>({x, x, x}), 1.0);
  EXPECT_NEAR(average_pairwise_agreement<int>({x, x, std::vector<int>{0, 0, 0, 0}}), 1.0 / 3.0, 1e-12);
  EXPECT_THROW(average_pairwise_agreement<int>({x, x, std::vector<int>{1}}), Error);
}

TEST(CorpusIrr, NoiselessCopiesAgreePerfectly) {
  Rng rng(8);
  std::vector<TaskSample> samples;
  for (int t = 0; t < 10; ++t) {
    const B2Matrix m = rolecast::testing::random_matrix(rng, uniform_int(rng, 2, 24), 4);
    const L label = label_from_index(static_cast<std::size_t>(t % 5));
    for (const char* c : {"c2", "c1", "c3"})
      samples.push_back(rolecast::testing::make_sample("g", "t" + std::to_string(t), c, m, label, label));
  }
  const IrrSummary irr = corpus_irr(samples);
  EXPECT_EQ(irr.tasks, 10u);
  EXPECT_EQ(irr.label_agreement, 1.0);
  EXPECT_EQ(irr.label_kappa, 1.0);
  EXPECT_EQ(irr.role_agreement, 1.0);
  EXPECT_EQ(irr.role_kappa, 1.0);
}

TEST(CorpusIrr, RequiresThreeCoders) {
  const B2Matrix m = rolecast::testing::filled_matrix(3, 3, RoleCode::C);
  std::vector<TaskSample> samples{rolecast::testing::make_sample("g", "t", "c1", m, L::S, L::S),
                                  rolecast::testing::make_sample("g", "t", "c2", m, L::S, L::S)};
  EXPECT_THROW(corpus_irr(samples), Error);
}
