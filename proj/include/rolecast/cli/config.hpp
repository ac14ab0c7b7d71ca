#pragma once

#include <fstream>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "rolecast/error.hpp"
#include "rolecast/harness/train.hpp"
#include "rolecast/synthetic.hpp"

namespace rolecast::cli {

/// The single structured document every command reads: {"generator": ..., "train": ...}.
struct RunConfig {
  synthetic::GenConfig generator;
  harness::TrainConfig train;
};

inline nlohmann::json to_json(const synthetic::GenProfile& p) {
  nlohmann::json j = {{"phase1", p.phase1}, {"two_phase", p.two_phase}, {"duration_range", {p.min_duration, p.max_duration}}};
  if (p.two_phase) j["phase2"] = p.phase2;
  return j;
}

inline nlohmann::json to_json(const synthetic::GenConfig& g) {
  nlohmann::json profiles = nlohmann::json::object();
  for (const auto& p : g.profiles) profiles[std::string(to_token(p.label))] = to_json(p);
  return {{"seed", g.seed},
          {"num_groups", g.num_groups},
          {"group_sizes", g.group_sizes},
          {"tasks_per_group", g.tasks_per_group},
          {"coder_cell_noise", g.coder_cell_noise},
          {"coder_label_adjacent_noise", g.coder_label_adjacent_noise},
          {"effective_group_index", g.effective_group_index},
          {"class_priors", g.class_priors},
          {"profiles", profiles}};
}

inline nlohmann::json to_json(const RunConfig& c) {
  return {{"generator", to_json(c.generator)}, {"train", harness::to_json(c.train)}};
}

namespace detail {

template <class T>
void read_field(const nlohmann::json& j, const std::string& prefix, const char* key, T& dst) {
  if (!j.contains(key)) return;
  try {
    j.at(key).get_to(dst);
  } catch (const nlohmann::json::exception&) {
    fail(ErrorCategory::config, prefix + key + ": wrong type");
  }
}

inline void reject_unknown(const nlohmann::json& j, const std::string& prefix, std::initializer_list<const char*> known) {
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (const char* k : known) ok = ok || key == k;
    require(ok, ErrorCategory::config, prefix + key + ": unknown field");
  }
}

}  // namespace detail

inline synthetic::GenConfig gen_config_from_json(const nlohmann::json& j) {
  require(j.is_object(), ErrorCategory::config, "generator: must be an object");
  detail::reject_unknown(j, "generator.",
                         {"seed", "num_groups", "group_sizes", "tasks_per_group", "coder_cell_noise",
                          "coder_label_adjacent_noise", "effective_group_index", "class_priors", "profiles"});
  synthetic::GenConfig g;
  const std::string p = "generator.";
  detail::read_field(j, p, "seed", g.seed);
  detail::read_field(j, p, "num_groups", g.num_groups);
  detail::read_field(j, p, "group_sizes", g.group_sizes);
  detail::read_field(j, p, "tasks_per_group", g.tasks_per_group);
  detail::read_field(j, p, "coder_cell_noise", g.coder_cell_noise);
  detail::read_field(j, p, "coder_label_adjacent_noise", g.coder_label_adjacent_noise);
  detail::read_field(j, p, "effective_group_index", g.effective_group_index);
  detail::read_field(j, p, "class_priors", g.class_priors);
  if (j.contains("profiles")) {
    const auto& profiles = j.at("profiles");
    require(profiles.is_object(), ErrorCategory::config, "generator.profiles: must be an object keyed by label");
    for (const auto& [key, pj] : profiles.items()) {
      const auto label = label_from_token(key);
      require(label.has_value(), ErrorCategory::config, "generator.profiles." + key + ": unknown label");
      const std::string pp = "generator.profiles." + key + ".";
      detail::reject_unknown(pj, pp, {"phase1", "phase2", "two_phase", "duration_range"});
      auto& prof = g.profiles[index_of(*label)];
      detail::read_field(pj, pp, "phase1", prof.phase1);
      detail::read_field(pj, pp, "phase2", prof.phase2);
      detail::read_field(pj, pp, "two_phase", prof.two_phase);
      std::array<int, 2> range{prof.min_duration, prof.max_duration};
      detail::read_field(pj, pp, "duration_range", range);
      prof.min_duration = range[0];
      prof.max_duration = range[1];
    }
  }
  // Keep the default per-group layout in step when only num_groups is overridden.
  if (j.contains("num_groups") && !j.contains("group_sizes")) g.group_sizes.assign(static_cast<std::size_t>(std::max(g.num_groups, 0)), 4);
  if (j.contains("num_groups") && !j.contains("tasks_per_group")) g.tasks_per_group.assign(static_cast<std::size_t>(std::max(g.num_groups, 0)), 8);
  g.validate();
  return g;
}

/// Accepts a config document or a run manifest (whose "config" member is used).
inline RunConfig run_config_from_json(const nlohmann::json& doc) {
  require(doc.is_object(), ErrorCategory::config, "config must be a JSON object");
  const nlohmann::json& j = doc.contains("manifest_version") ? doc.at("config") : doc;
  detail::reject_unknown(j, "", {"generator", "train"});
  RunConfig c;
  if (j.contains("generator")) c.generator = gen_config_from_json(j.at("generator"));
  if (j.contains("train")) c.train = harness::train_config_from_json(j.at("train"));
  return c;
}

inline RunConfig load_run_config(const std::optional<std::string>& path) {
  if (!path) return {};
  std::ifstream in(*path);
  require(in.good(), ErrorCategory::io, "cannot open config " + *path);
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorCategory::config, "config " + *path + " is not valid JSON: " + e.what());
  }
  return run_config_from_json(doc);
}

}  // namespace rolecast::cli
