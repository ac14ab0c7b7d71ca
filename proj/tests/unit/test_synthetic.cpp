#include <array>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "rolecast/irr.hpp"
#include "rolecast/synthetic.hpp"

using namespace rolecast;
using namespace rolecast::synthetic;

TEST(SampleTask, PointMassProfileFillsWithOneRole) {
  GenProfile p;
  p.phase1 = {0, 1, 0, 0, 0, 0, 0};
  Rng rng(1);
  for (int i = 0; i < 20; ++i) {
    const auto task = sample_task(p, 4, rng);
    EXPECT_FALSE(task.change_minute.has_value());
    for (int m = 0; m < 24; ++m)
      for (int s = 0; s < 5; ++s) {
        const bool inside = m < task.matrix.duration_minutes() && s < 4;
        EXPECT_EQ(task.matrix.at(m, s), inside ? RoleCode::C : RoleCode::Empty);
      }
    EXPECT_GE(task.matrix.duration_minutes(), 5);
  }
}

TEST(SampleTask, TwoPhaseChangeMinuteInRange) {
  const auto profiles = default_profiles();
  Rng rng(2);
  for (int i = 0; i < 500; ++i) {
    const auto task = sample_task(profiles[index_of(CollabLabel::NI)], 3, rng);
    ASSERT_TRUE(task.change_minute.has_value());
    EXPECT_GE(*task.change_minute, 2);
    EXPECT_LE(*task.change_minute, task.matrix.duration_minutes() - 1);
  }
}

TEST(SampleTask, CellFrequenciesMatchProfile) {
  const GenProfile e = default_profiles()[0];
  GenProfile fixed = e;
  fixed.min_duration = fixed.max_duration = 10;
  Rng rng(42);
  std::array<double, 7> counts{};
  double total = 0.0;
  for (int i = 0; i < 200; ++i) {  // 200 tasks x 10 minutes x 5 students = 10,000 cells
    const auto task = sample_task(fixed, 5, rng);
    for (int m = 0; m < 10; ++m)
      for (int s = 0; s < 5; ++s) {
        counts[value_of(task.matrix.at(m, s)) - 1] += 1.0;
        total += 1.0;
      }
  }
  ASSERT_EQ(total, 10000.0);
  for (std::size_t r = 0; r < 7; ++r) EXPECT_NEAR(counts[r] / total, e.phase1[r], 0.02) << "role " << r;
}

TEST(GenerateDataset, DefaultShape) {
  const GenConfig cfg;
  const auto corpus = generate_dataset(cfg);
  EXPECT_EQ(corpus.samples.size(), 351u);
  EXPECT_EQ(corpus.change_minutes.size(), 117u);
  std::set<std::string> groups;
  std::array<int, 6> sizes{};
  for (const auto& s : corpus.samples) {
    groups.insert(s.group_id);
    // Coders may nudge an effective task to S, but nobody outside group 0 ever sees E.
    if (s.group_id == "g00") EXPECT_LE(index_of(s.label), 1u);
    if (s.group_id != "g00") EXPECT_NE(s.label, CollabLabel::E);
    if (s.ground_truth == CollabLabel::E) EXPECT_EQ(s.group_id, "g00");
    EXPECT_EQ(s.histogram, build_histogram(s.matrix));
    EXPECT_GE(s.matrix.duration_minutes(), 5);
  }
  EXPECT_EQ(groups.size(), 15u);
  for (int g = 0; g < 15; ++g) ++sizes[cfg.group_sizes[g]];
  EXPECT_EQ(sizes[4], 13);
  EXPECT_EQ(sizes[3], 1);
  EXPECT_EQ(sizes[5], 1);
}

TEST(GenerateDataset, BitIdenticalPerSeed) {
  GenConfig cfg;
  const auto a = generate_dataset(cfg);
  const auto b = generate_dataset(cfg);
  std::ostringstream ra, rb, la, lb;
  write_roles_csv(ra, a.samples);
  write_roles_csv(rb, b.samples);
  write_labels_csv(la, a.samples);
  write_labels_csv(lb, b.samples);
  EXPECT_EQ(ra.str(), rb.str());
  EXPECT_EQ(la.str(), lb.str());
  cfg.seed = 43;
  std::ostringstream rc;
  write_roles_csv(rc, generate_dataset(cfg).samples);
  EXPECT_NE(ra.str(), rc.str());
}

TEST(GenerateDataset, NoiselessCodersAgreeExactly) {
  GenConfig cfg;
  cfg.coder_cell_noise = 0.0;
  cfg.coder_label_adjacent_noise = 0.0;
  const auto corpus = generate_dataset(cfg);
  for (std::size_t i = 0; i < corpus.samples.size(); i += 3) {
    EXPECT_EQ(corpus.samples[i].matrix, corpus.samples[i + 1].matrix);
    EXPECT_EQ(corpus.samples[i].matrix, corpus.samples[i + 2].matrix);
  }
  const auto irr = corpus_irr(corpus.samples);
  EXPECT_EQ(irr.label_kappa, 1.0);
  EXPECT_EQ(irr.role_kappa, 1.0);
}

TEST(GenerateDataset, LabelAgreementInCalibratedBand) {
  const auto irr = corpus_irr(generate_dataset(GenConfig{}).samples);
  EXPECT_GE(irr.label_agreement, 0.55);
  EXPECT_LE(irr.label_agreement, 0.85);
}

TEST(GenerateDataset, ImbalancedMarginals) {
  std::array<int, 5> counts{};
  for (const auto& s : generate_dataset(GenConfig{}).samples) ++counts[index_of(s.ground_truth)];
  EXPECT_GT(counts[0], 0);
  EXPECT_LE(counts[0], 7 * 3);  // effective group only
  for (int c = 1; c < 5; ++c) EXPECT_GT(counts[c], counts[0]);
}

TEST(GenerateDataset, ChangeMinutesOnlyForTwoPhaseTasks) {
  const auto corpus = generate_dataset(GenConfig{});
  for (std::size_t t = 0; t < corpus.change_minutes.size(); ++t) {
    const auto& first = corpus.samples[3 * t];
    const auto& cm = corpus.change_minutes[t];
    EXPECT_EQ(cm.group_id, first.group_id);
    EXPECT_EQ(cm.task_id, first.task_id);
    if (cm.change_minute) {
      EXPECT_GE(*cm.change_minute, 2);
      EXPECT_LT(*cm.change_minute, first.matrix.duration_minutes());
    }
  }
}

TEST(GenerateDataset, RejectsInconsistentConfig) {
  GenConfig cfg;
  cfg.num_groups = 14;
  EXPECT_THROW(generate_dataset(cfg), Error);
  cfg = GenConfig{};
  cfg.group_sizes[3] = 6;
  EXPECT_THROW(generate_dataset(cfg), Error);
  cfg = GenConfig{};
  cfg.coder_cell_noise = 1.5;
  EXPECT_THROW(generate_dataset(cfg), Error);
  cfg = GenConfig{};
  cfg.profiles[2].phase2[0] += 0.1;
  EXPECT_THROW(generate_dataset(cfg), Error);
  cfg = GenConfig{};
  cfg.profiles[1].min_duration = 3;
  EXPECT_THROW(generate_dataset(cfg), Error);
}

TEST(ChangeMinutesCsv, RoundTrip) {
  const auto corpus = generate_dataset(GenConfig{});
  std::ostringstream os;
  write_change_minutes_csv(os, corpus.change_minutes);
  std::istringstream is(os.str());
  const auto back = read_change_minutes_csv(is);
  ASSERT_EQ(back.size(), corpus.change_minutes.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    EXPECT_EQ(back[i].group_id, corpus.change_minutes[i].group_id);
    EXPECT_EQ(back[i].change_minute, corpus.change_minutes[i].change_minute);
  }
}

TEST(PerturbLabel, StaysAdjacentAndAvoidsEffective) {
  Rng rng(9);
  for (int i = 0; i < 1000; ++i) {
    const auto l = label_from_index(static_cast<std::size_t>(uniform_int(rng, 1, 4)));
    const auto p = synthetic::detail::perturb_label(rng, l, false);
    EXPECT_EQ(std::abs(static_cast<int>(index_of(p)) - static_cast<int>(index_of(l))), 1);
    EXPECT_NE(p, CollabLabel::E);
  }
  EXPECT_EQ(synthetic::detail::perturb_label(rng, CollabLabel::E, true), CollabLabel::S);
}
