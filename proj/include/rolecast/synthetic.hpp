#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <span>
#include <numeric>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "rolecast/data_model.hpp"
#include "rolecast/error.hpp"
#include "rolecast/random.hpp"

namespace rolecast::synthetic {

using RoleProbs = std::array<double, kNumRoles>;

/// Role dynamics for one collaboration class.
struct GenProfile {
  CollabLabel label = CollabLabel::S;
  RoleProbs phase1{};
  RoleProbs phase2{};
  bool two_phase = false;
  int min_duration = 5;
  int max_duration = 24;

  void validate() const {
    auto check = [&](const RoleProbs& p, const char* which) {
      double sum = 0.0;
      for (double v : p) {
        require(v >= 0.0, ErrorCategory::config, std::string(which) + " probabilities must be non-negative");
        sum += v;
      }
      require(std::abs(sum - 1.0) <= 1e-9, ErrorCategory::config,
              std::string("profile ") + std::string(to_token(label)) + ": " + which + " probabilities must sum to 1");
    };
    check(phase1, "phase1");
    if (two_phase) check(phase2, "phase2");
    require(min_duration >= 5 && max_duration <= 24 && min_duration <= max_duration, ErrorCategory::config,
            "profile durations must lie within [5, 24] minutes");
  }
};

/// Default per-class profiles: role quality degrades monotonically from E to WI.
inline std::array<GenProfile, kNumClasses> default_profiles() {
  constexpr double r = 0.05 / 3.0;
  const RoleProbs e{.2, .45, .15, .15, r, r, r};
  const RoleProbs s{.15, .35, .30, .05, .05, .05, .05};
  const RoleProbs p2{.05, .20, .35, 0, .10, .15, .15};
  const RoleProbs ni2{0, .05, .15, 0, .25, .35, .20};
  const RoleProbs wi{0, .05, .10, 0, 0, .15, .70};
  return {{
      {CollabLabel::E, e, {}, false},
      {CollabLabel::S, s, {}, false},
      {CollabLabel::P, s, p2, true},
      {CollabLabel::NI, p2, ni2, true},
      {CollabLabel::WI, wi, {}, false},
  }};
}

struct GenConfig {
  std::uint64_t seed = 42;
  int num_groups = 15;
  std::vector<int> group_sizes = {4, 4, 4, 4, 4, 4, 4, 3, 4, 4, 4, 5, 4, 4, 4};
  std::vector<int> tasks_per_group = {7, 8, 8, 8, 8, 8, 8, 7, 8, 8, 8, 8, 8, 8, 7};
  double coder_cell_noise = 0.15;
  double coder_label_adjacent_noise = 0.2;
  int effective_group_index = 0;
  /// Latent label priors; E is reserved for the effective group, so only S..WI are drawn elsewhere.
  std::array<double, kNumClasses> class_priors = {.06, .28, .33, .22, .11};
  std::array<GenProfile, kNumClasses> profiles = default_profiles();

  int total_tasks() const { return std::accumulate(tasks_per_group.begin(), tasks_per_group.end(), 0); }

  void validate() const {
    require(num_groups >= 1, ErrorCategory::config, "num_groups must be positive");
    require(static_cast<int>(group_sizes.size()) == num_groups, ErrorCategory::config,
            "group_sizes has " + std::to_string(group_sizes.size()) + " entries for " +
                std::to_string(num_groups) + " groups");
    require(static_cast<int>(tasks_per_group.size()) == num_groups, ErrorCategory::config,
            "tasks_per_group has " + std::to_string(tasks_per_group.size()) + " entries for " +
                std::to_string(num_groups) + " groups");
    for (int s : group_sizes) require(s >= 3 && s <= 5, ErrorCategory::config, "group_sizes must be in {3,4,5}");
    for (int t : tasks_per_group) require(t >= 1, ErrorCategory::config, "tasks_per_group must be positive");
    require(coder_cell_noise >= 0 && coder_cell_noise <= 1, ErrorCategory::config,
            "coder_cell_noise must be a probability");
    require(coder_label_adjacent_noise >= 0 && coder_label_adjacent_noise <= 1, ErrorCategory::config,
            "coder_label_adjacent_noise must be a probability");
    require(effective_group_index >= 0 && effective_group_index < num_groups, ErrorCategory::config,
            "effective_group_index out of range");
    double rest = 0.0;
    for (std::size_t c = 0; c < kNumClasses; ++c) {
      require(class_priors[c] >= 0, ErrorCategory::config, "class_priors must be non-negative");
      if (c > 0) rest += class_priors[c];
    }
    require(rest > 0, ErrorCategory::config, "class_priors must give mass to some non-E class");
    for (std::size_t c = 0; c < kNumClasses; ++c) {
      profiles[c].validate();
      require(profiles[c].label == label_from_index(c), ErrorCategory::config, "profiles must be in label order");
    }
  }
};

struct SampledTask {
  B2Matrix matrix;
  std::optional<int> change_minute;
};

inline const RoleProbs& active_phase(const GenProfile& p, std::optional<int> change, int minute) {
  return (p.two_phase && change && minute >= *change) ? p.phase2 : p.phase1;
}

inline RoleCode draw_role(Rng& rng, const RoleProbs& probs) {
  return static_cast<RoleCode>(sample_categorical(rng, probs) + 1);
}

/// Draws a latent (noise-free) task matrix for one group.
inline SampledTask sample_task(const GenProfile& profile, int group_size, Rng& rng) {
  const int duration = uniform_int(rng, profile.min_duration, profile.max_duration);
  std::optional<int> change;
  if (profile.two_phase) change = uniform_int(rng, 2, duration - 1);
  B2Matrix::Grid grid{};
  for (int m = 0; m < duration; ++m)
    for (int s = 0; s < group_size; ++s) grid[m][s] = draw_role(rng, active_phase(profile, change, m));
  return {B2Matrix(grid, duration, group_size), change};
}

struct ChangeMinute {
  std::string group_id;
  std::string task_id;
  std::optional<int> change_minute;
};

struct SyntheticCorpus {
  std::vector<TaskSample> samples;
  std::vector<ChangeMinute> change_minutes;
};

inline std::string group_name(int g) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "g%02d", g);
  return buf;
}

inline std::string task_name(int t) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "t%02d", t);
  return buf;
}

namespace detail {

inline CollabLabel perturb_label(Rng& rng, CollabLabel label, bool allow_effective) {
  const int l = static_cast<int>(index_of(label));
  std::vector<int> options;
  if (l - 1 >= (allow_effective ? 0 : 1)) options.push_back(l - 1);
  if (l + 1 < static_cast<int>(kNumClasses)) options.push_back(l + 1);
  if (options.empty()) return label;
  return label_from_index(static_cast<std::size_t>(options[uniform_int(rng, 0, static_cast<int>(options.size()) - 1)]));
}

}  // namespace detail

/// Full corpus: three noisy coder copies of every latent task. Each group
/// draws from its own stream seeded with seed ^ group_index.
inline SyntheticCorpus generate_dataset(const GenConfig& config) {
  config.validate();
  SyntheticCorpus out;
  out.samples.reserve(static_cast<std::size_t>(config.total_tasks()) * 3);

  std::array<double, kNumClasses> rest_priors = config.class_priors;
  rest_priors[0] = 0.0;
  const double rest_sum = std::accumulate(rest_priors.begin(), rest_priors.end(), 0.0);
  for (auto& p : rest_priors) p /= rest_sum;

  for (int g = 0; g < config.num_groups; ++g) {
    Rng rng(config.seed ^ static_cast<std::uint64_t>(g));
    const bool effective = g == config.effective_group_index;
    const int size = config.group_sizes[g];
    for (int t = 0; t < config.tasks_per_group[g]; ++t) {
      const CollabLabel truth =
          effective ? CollabLabel::E : label_from_index(sample_categorical(rng, rest_priors));
      const GenProfile& profile = config.profiles[index_of(truth)];
      const SampledTask latent = sample_task(profile, size, rng);

      std::array<CollabLabel, 3> coder_labels{};
      std::vector<TaskSample> copies;
      for (int c = 0; c < 3; ++c) {
        B2Matrix::Grid grid = latent.matrix.cells();
        for (int m = 0; m < latent.matrix.duration_minutes(); ++m)
          for (int s = 0; s < size; ++s)
            if (uniform01(rng) < config.coder_cell_noise)
              grid[m][s] = draw_role(rng, active_phase(profile, latent.change_minute, m));
        CollabLabel label = truth;
        if (uniform01(rng) < config.coder_label_adjacent_noise)
          label = detail::perturb_label(rng, truth, effective);
        coder_labels[c] = label;
        B2Matrix matrix(grid, latent.matrix.duration_minutes(), size);
        copies.push_back(TaskSample{group_name(g), task_name(t), "c" + std::to_string(c + 1), matrix,
                                    build_histogram(matrix), label, label});
      }
      const CollabLabel resolved = resolve_ground_truth(coder_labels);
      for (auto& s : copies) {
        s.ground_truth = resolved;
        out.samples.push_back(std::move(s));
      }
      out.change_minutes.push_back({group_name(g), task_name(t), latent.change_minute});
    }
  }
  return out;
}

inline constexpr std::string_view kChangeMinutesHeader = "group_id,task_id,change_minute";

/// Tasks without a phase change get an empty change_minute field.
inline void write_change_minutes_csv(std::ostream& out, std::span<const ChangeMinute> rows) {
  out << kChangeMinutesHeader << '\n';
  for (const auto& r : rows) {
    out << r.group_id << ',' << r.task_id << ',';
    if (r.change_minute) out << *r.change_minute;
    out << '\n';
  }
}

inline std::vector<ChangeMinute> read_change_minutes_csv(std::istream& in) {
  std::vector<ChangeMinute> rows;
  for (auto& [lineno, f] : rolecast::detail::read_csv(in, kChangeMinutesHeader, "change_minutes")) {
    ChangeMinute row{f[0], f[1], std::nullopt};
    if (!f[2].empty())
      row.change_minute = rolecast::detail::parse_index(f[2], "change_minutes line " + std::to_string(lineno));
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace rolecast::synthetic
