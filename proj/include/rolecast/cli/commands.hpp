#pragma once

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include "rolecast/cli/config.hpp"
#include "rolecast/data_model.hpp"
#include "rolecast/explain/gradcam.hpp"
#include "rolecast/explain/heatmap.hpp"
#include "rolecast/harness/cross_validation.hpp"
#include "rolecast/irr.hpp"
#include "rolecast/models/model.hpp"
#include "rolecast/synthetic.hpp"

namespace rolecast::cli {

namespace fs = std::filesystem;

inline constexpr const char* kVersion = "0.1.0";
inline constexpr int kManifestVersion = 1;
inline constexpr const char* kRolesFile = "roles.csv";
inline constexpr const char* kLabelsFile = "labels.csv";
inline constexpr const char* kChangeMinutesFile = "change_minutes.csv";

inline std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorCategory::io, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  require(EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) == 1, ErrorCategory::internal,
          "sha256 failed");
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
  return os.str();
}

inline std::string file_sha256(const fs::path& path) { return sha256_hex(read_file(path)); }

inline void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  require(!ec && fs::is_directory(dir), ErrorCategory::io, "cannot create output directory " + dir.string());
}

/// Accumulates one run's provenance and writes it as `<out>/manifest.json`.
class Manifest {
 public:
  Manifest(std::string command, const RunConfig& config, std::uint64_t seed)
      : doc_({{"manifest_version", kManifestVersion},
              {"command", std::move(command)},
              {"config", to_json(config)},
              {"seed", seed},
              {"arguments", nlohmann::json::object()},
              {"inputs", nlohmann::json::array()},
              {"outputs", nlohmann::json::array()},
              {"versions",
               {{"rolecast", kVersion},
                {"checkpoint_format", models::kCheckpointVersion},
                {"report_format", harness::kReportFormat}}}}) {}

  void argument(const std::string& key, nlohmann::json value) { doc_["arguments"][key] = std::move(value); }
  void input(const fs::path& p) { doc_["inputs"].push_back({{"path", p.string()}, {"sha256", file_sha256(p)}}); }
  void output(const fs::path& p) { doc_["outputs"].push_back({{"path", p.string()}, {"sha256", file_sha256(p)}}); }
  const nlohmann::json& json() const { return doc_; }

  fs::path write(const fs::path& out_dir) const {
    const fs::path path = out_dir / "manifest.json";
    explain::write_text_file(path.string(), doc_.dump(2) + "\n");
    return path;
  }

 private:
  nlohmann::json doc_;
};

struct CorpusFiles {
  fs::path roles, labels, change_minutes;
};

inline CorpusFiles corpus_files(const fs::path& dir) {
  return {dir / kRolesFile, dir / kLabelsFile, dir / kChangeMinutesFile};
}

inline std::vector<TaskSample> load_corpus(const fs::path& dir) {
  const auto files = corpus_files(dir);
  return parse_annotation_files(files.roles.string(), files.labels.string());
}

// ---------------------------------------------------------------- generate

struct GenerateOptions {
  std::optional<std::string> config;
  std::optional<std::uint64_t> seed;
  std::string out;
};

inline nlohmann::json cmd_generate(const GenerateOptions& o) {
  RunConfig config = load_run_config(o.config);
  if (o.seed) config.generator.seed = *o.seed;
  const fs::path out(o.out);
  ensure_dir(out);
  const auto corpus = synthetic::generate_dataset(config.generator);
  const auto files = corpus_files(out);
  {
    std::ostringstream roles, labels, changes;
    write_roles_csv(roles, corpus.samples);
    write_labels_csv(labels, corpus.samples);
    synthetic::write_change_minutes_csv(changes, corpus.change_minutes);
    explain::write_text_file(files.roles.string(), roles.str());
    explain::write_text_file(files.labels.string(), labels.str());
    explain::write_text_file(files.change_minutes.string(), changes.str());
  }
  Manifest m("generate", config, config.generator.seed);
  if (o.config) m.input(*o.config);
  m.argument("out", o.out);
  for (const auto& p : {files.roles, files.labels, files.change_minutes}) m.output(p);
  m.write(out);
  std::set<std::string> groups;
  for (const auto& s : corpus.samples) groups.insert(s.group_id);
  return {{"samples", corpus.samples.size()}, {"groups", groups.size()}, {"tasks", corpus.change_minutes.size()}};
}

// --------------------------------------------------------- ingest-validate

struct ValidateOptions {
  std::string data;
  std::string out;
};

inline nlohmann::json corpus_summary(std::span<const TaskSample> samples) {
  std::array<std::size_t, kNumClasses> counts{};
  std::set<std::string> groups;
  for (const auto& s : samples) {
    ++counts[index_of(s.ground_truth)];
    groups.insert(s.group_id);
  }
  nlohmann::json dist = nlohmann::json::object();
  for (std::size_t c = 0; c < kNumClasses; ++c) dist[std::string(to_token(label_from_index(c)))] = counts[c];
  const auto irr = corpus_irr(samples);
  return {{"samples", samples.size()},
          {"groups", groups.size()},
          {"tasks", irr.tasks},
          {"ground_truth_distribution", dist},
          {"pinned_groups", harness::pinned_groups(samples)},
          {"irr",
           {{"level_a", {{"average_agreement", irr.label_agreement}, {"cohen_kappa", irr.label_kappa}}},
            {"level_b2", {{"average_agreement", irr.role_agreement}, {"cohen_kappa", irr.role_kappa}}}}}};
}

inline nlohmann::json cmd_ingest_validate(const ValidateOptions& o) {
  const fs::path data(o.data), out(o.out);
  const auto samples = load_corpus(data);
  ensure_dir(out);
  const nlohmann::json summary = corpus_summary(samples);
  const fs::path summary_path = out / "validation.json";
  explain::write_text_file(summary_path.string(), summary.dump(2) + "\n");
  Manifest m("ingest-validate", RunConfig{}, 0);
  const auto files = corpus_files(data);
  m.input(files.roles);
  m.input(files.labels);
  m.argument("data", o.data);
  m.argument("out", o.out);
  m.output(summary_path);
  m.write(out);
  return summary;
}

// ------------------------------------------------------------------- train

struct TrainOptions {
  std::string data;
  std::optional<std::string> config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<std::string> test_group;
};

/// Trains one model; the held-out group defaults to the first leave-one-group-out fold.
inline nlohmann::json cmd_train(const TrainOptions& o) {
  RunConfig config = load_run_config(o.config);
  if (o.seed) config.train.seed = *o.seed;
  const fs::path data(o.data), out(o.out);
  const auto samples = load_corpus(data);
  const auto folds = harness::logo_folds(samples);
  harness::Fold fold = folds.front();
  if (o.test_group) {
    auto it = std::find_if(folds.begin(), folds.end(), [&](const auto& f) { return f.test_group == *o.test_group; });
    require(it != folds.end(), ErrorCategory::usage,
            "test group '" + *o.test_group + "' is unknown or pinned to training");
    fold = *it;
  }
  ensure_dir(out);
  const auto [train, test] = harness::split_fold(samples, fold);
  auto result = harness::train_model(train, test, config.train, config.train.seed);
  const fs::path ckpt = out / "model.ckpt";
  models::save_checkpoint(result.model, ckpt.string(), {{"held_out_group", fold.test_group}});
  nlohmann::json history = nlohmann::json::array();
  for (const auto& e : result.history)
    history.push_back({{"epoch", e.epoch}, {"train_loss", e.train_loss}, {"test_loss", e.test_loss}, {"learning_rate", e.learning_rate}});
  const auto fr = harness::evaluate_fold(result.model, test);
  const nlohmann::json summary = {{"held_out_group", fold.test_group},
                                  {"best_epoch", result.best_epoch},
                                  {"best_test_loss", result.best_test_loss},
                                  {"final_lr", result.final_lr},
                                  {"metrics", harness::metrics_json(fr.metrics)},
                                  {"history", history}};
  const fs::path summary_path = out / "train_history.json";
  explain::write_text_file(summary_path.string(), summary.dump(2) + "\n");
  Manifest m("train", config, config.train.seed);
  const auto files = corpus_files(data);
  m.input(files.roles);
  m.input(files.labels);
  if (o.config) m.input(*o.config);
  m.argument("data", o.data);
  m.argument("out", o.out);
  m.argument("test_group", fold.test_group);
  m.output(ckpt);
  m.output(summary_path);
  m.write(out);
  return {{"held_out_group", fold.test_group}, {"best_epoch", result.best_epoch},
          {"weighted_f1", fr.metrics.f1}, {"checkpoint", ckpt.string()}};
}

// ---------------------------------------------------------------------- cv

struct CvCommandOptions {
  std::string data;
  std::optional<std::string> config;
  std::optional<std::uint64_t> seed;
  std::string out;
  int folds_parallel = 1;
};

/// Worker count after applying the ROLECAST_THREADS cap.
inline int capped_workers(int requested) {
  int workers = std::max(1, requested);
  if (const char* env = std::getenv("ROLECAST_THREADS")) {
    const int cap = std::atoi(env);
    if (cap >= 1) workers = std::min(workers, cap);
  }
  return workers;
}

inline nlohmann::json cmd_cv(const CvCommandOptions& o) {
  RunConfig config = load_run_config(o.config);
  if (o.seed) config.train.seed = *o.seed;
  const fs::path data(o.data), out(o.out);
  const auto samples = load_corpus(data);
  ensure_dir(out);
  const fs::path ckpt_root = out / "checkpoints";
  ensure_dir(ckpt_root);

  const bool grid = !config.train.grid_patience.empty() || !config.train.grid_min_lr.empty();
  std::vector<fs::path> checkpoints;
  fs::path current_dir = ckpt_root;
  harness::CvOptions cv_opts;
  cv_opts.workers = capped_workers(o.folds_parallel);
  cv_opts.on_fold_done = [&](std::size_t, const harness::Fold& fold, harness::TrainResult& r) {
    const fs::path p = current_dir / (fold.test_group + ".ckpt");
    models::save_checkpoint(r.model, p.string(), {{"held_out_group", fold.test_group}});
    checkpoints.push_back(p);
  };

  nlohmann::json report;
  if (!grid) {
    report = harness::to_json(harness::run_cross_validation(samples, config.train, cv_opts));
  } else {
    // Each grid point keeps its own checkpoint directory.
    std::vector<int> patiences = config.train.grid_patience.empty() ? std::vector<int>{config.train.patience}
                                                                    : config.train.grid_patience;
    std::vector<double> min_lrs = config.train.grid_min_lr.empty() ? std::vector<double>{config.train.min_lr}
                                                                    : config.train.grid_min_lr;
    nlohmann::json points = nlohmann::json::array();
    double best_f1 = -1.0;
    for (int p : patiences)
      for (double lr : min_lrs) {
        harness::TrainConfig c = config.train;
        c.patience = p;
        c.min_lr = lr;
        c.grid_patience.clear();
        c.grid_min_lr.clear();
        char name[64];
        std::snprintf(name, sizeof name, "patience%d_minlr%g", p, lr);
        current_dir = ckpt_root / name;
        ensure_dir(current_dir);
        auto r = harness::run_cross_validation(samples, c, cv_opts);
        points.push_back({{"patience", p}, {"min_lr", lr}, {"weighted_f1", {{"mean", r.f1.mean}, {"std", r.f1.std}}},
                          {"checkpoints", current_dir.string()}});
        if (r.f1.mean > best_f1) {
          best_f1 = r.f1.mean;
          report = harness::to_json(r);
        }
      }
    report["grid"] = points;
  }
  std::sort(checkpoints.begin(), checkpoints.end());

  const fs::path report_path = out / "cv_report.json";
  explain::write_text_file(report_path.string(), report.dump(2) + "\n");
  Manifest m("cv", config, config.train.seed);
  const auto files = corpus_files(data);
  m.input(files.roles);
  m.input(files.labels);
  if (o.config) m.input(*o.config);
  m.argument("data", o.data);
  m.argument("out", o.out);
  m.argument("folds_parallel", o.folds_parallel);
  m.output(report_path);
  for (const auto& p : checkpoints) m.output(p);
  m.write(out);
  return report;
}

// ----------------------------------------------------------------- gradcam

struct GradcamOptions {
  std::string checkpoint;
  std::string data;
  std::string out;
  std::vector<std::string> select;   ///< "group:task:coder"
  std::vector<std::string> classes;  ///< label tokens or "all"; empty = predicted class
  bool csv_only = false;
};

inline std::vector<std::size_t> resolve_classes(const std::vector<std::string>& tokens) {
  std::vector<std::size_t> out;
  for (const auto& t : tokens) {
    if (t == "all") {
      for (std::size_t c = 0; c < kNumClasses; ++c) out.push_back(c);
      continue;
    }
    auto l = label_from_token(t);
    require(l.has_value(), ErrorCategory::usage, "--class: unknown label '" + t + "' (use E, S, P, NI, WI or all)");
    out.push_back(index_of(*l));
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

inline nlohmann::json cmd_gradcam(const GradcamOptions& o) {
  auto loaded = models::load_checkpoint(o.checkpoint);
  require(loaded.model.resnet() != nullptr, ErrorCategory::usage,
          "gradcam: temporal models only; this checkpoint holds a histogram model");
  const fs::path data(o.data), out(o.out);
  const auto samples = load_corpus(data);
  const auto classes = resolve_classes(o.classes);

  std::vector<const TaskSample*> chosen;
  if (!o.select.empty()) {
    for (const auto& sel : o.select) {
      const auto parts = rolecast::detail::split_csv_line([&] {
        std::string s = sel;
        std::replace(s.begin(), s.end(), ':', ',');
        return s;
      }());
      require(parts.size() == 3, ErrorCategory::usage, "--select expects group:task:coder, got '" + sel + "'");
      auto it = std::find_if(samples.begin(), samples.end(), [&](const TaskSample& s) {
        return s.group_id == parts[0] && s.task_id == parts[1] && s.coder_id == parts[2];
      });
      require(it != samples.end(), ErrorCategory::usage, "--select: no sample " + sel);
      chosen.push_back(&*it);
    }
  } else {
    const auto& extra = loaded.metadata.value("extra", nlohmann::json::object());
    require(extra.contains("held_out_group"), ErrorCategory::usage,
            "gradcam: checkpoint names no held-out group; pass --select group:task:coder");
    const auto group = extra.at("held_out_group").get<std::string>();
    for (const auto& s : samples)
      if (s.group_id == group) chosen.push_back(&s);
  }

  ensure_dir(out);
  Manifest m("gradcam", RunConfig{}, loaded.model.seed());
  m.input(o.checkpoint);
  const auto files = corpus_files(data);
  m.input(files.roles);
  m.input(files.labels);
  m.argument("checkpoint", o.checkpoint);
  m.argument("data", o.data);
  m.argument("out", o.out);
  m.argument("select", o.select);
  m.argument("class", o.classes);
  m.argument("csv_only", o.csv_only);

  nlohmann::json maps = nlohmann::json::array();
  for (const auto* s : chosen) {
    std::vector<std::size_t> targets = classes;
    if (targets.empty()) targets.push_back(explain::predicted_class(loaded.model, *s));
    for (auto c : targets) {
      const auto map = explain::grad_cam_temporal(loaded.model, *s, c);
      const std::string stem = s->group_id + "_" + s->task_id + "_" + s->coder_id + "_" + std::string(to_token(map.target_class));
      const std::string title = s->group_id + " " + s->task_id + " " + s->coder_id + " (truth " +
                                std::string(to_token(s->ground_truth)) + ")";
      for (const auto& p : explain::emit_heatmap(map, s->matrix, (out / stem).string(), o.csv_only, title)) m.output(p);
      maps.push_back({{"sample", s->group_id + ":" + s->task_id + ":" + s->coder_id},
                      {"target", to_token(map.target_class)},
                      {"predicted", to_token(map.predicted_class)},
                      {"files", stem}});
    }
  }
  m.write(out);
  return {{"maps", maps}};
}

// ------------------------------------------------------------------ report

struct ReportOptions {
  std::vector<std::string> reports;
  std::string out;
};

inline std::string cmd_report(const ReportOptions& o) {
  require(!o.reports.empty(), ErrorCategory::usage, "report: give at least one cv_report.json");
  std::vector<harness::ReportRow> rows;
  for (const auto& path : o.reports) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(read_file(path));
    } catch (const nlohmann::json::parse_error& e) {
      fail(ErrorCategory::parse, path + ": " + e.what());
    }
    rows.push_back(harness::report_row_from_json(j));
  }
  std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.feature < b.feature; });
  const std::string table = harness::render_table(rows);
  const fs::path out(o.out);
  ensure_dir(out);
  const fs::path table_path = out / "table.md";
  explain::write_text_file(table_path.string(), table);
  Manifest m("report", RunConfig{}, 0);
  for (const auto& p : o.reports) m.input(p);
  m.argument("reports", o.reports);
  m.argument("out", o.out);
  m.output(table_path);
  m.write(out);
  return table;
}

}  // namespace rolecast::cli
