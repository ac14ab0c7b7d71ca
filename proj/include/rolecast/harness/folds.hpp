#pragma once

#include <algorithm>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "rolecast/data_model.hpp"
#include "rolecast/error.hpp"

namespace rolecast::harness {

struct Fold {
  std::string test_group;
  std::vector<std::string> train_groups;
};

/// Groups that are the only carrier of some ground-truth class. Holding one of them
/// out would leave that class absent from training, so they are always trained on.
inline std::vector<std::string> pinned_groups(std::span<const TaskSample> samples) {
  std::map<CollabLabel, std::set<std::string>> carriers;
  for (const auto& s : samples) carriers[s.ground_truth].insert(s.group_id);
  std::set<std::string> pinned;
  for (const auto& [label, groups] : carriers)
    if (groups.size() == 1) pinned.insert(*groups.begin());
  return {pinned.begin(), pinned.end()};
}

/// Leave-one-group-out folds in sorted group order, skipping pinned groups.
inline std::vector<Fold> logo_folds(std::span<const TaskSample> samples) {
  std::set<std::string> groups;
  for (const auto& s : samples) groups.insert(s.group_id);
  require(groups.size() >= 2, ErrorCategory::config, "leave-one-group-out needs at least 2 groups");
  const auto pinned = pinned_groups(samples);
  std::vector<Fold> folds;
  for (const auto& g : groups) {
    if (std::find(pinned.begin(), pinned.end(), g) != pinned.end()) continue;
    Fold f{g, {}};
    for (const auto& other : groups)
      if (other != g) f.train_groups.push_back(other);
    folds.push_back(std::move(f));
  }
  require(!folds.empty(), ErrorCategory::config, "every group is the sole carrier of some class; no fold can be held out");
  return folds;
}

/// Splits samples into train and test pointers for one fold.
inline std::pair<std::vector<const TaskSample*>, std::vector<const TaskSample*>> split_fold(
    std::span<const TaskSample> samples, const Fold& fold) {
  std::pair<std::vector<const TaskSample*>, std::vector<const TaskSample*>> out;
  for (const auto& s : samples) (s.group_id == fold.test_group ? out.second : out.first).push_back(&s);
  return out;
}

}  // namespace rolecast::harness
