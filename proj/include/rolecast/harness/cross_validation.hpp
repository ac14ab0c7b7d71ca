#pragma once

#include <atomic>
#include <cmath>
#include <exception>
#include <functional>
#include <mutex>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "rolecast/data_model.hpp"
#include "rolecast/error.hpp"
#include "rolecast/harness/folds.hpp"
#include "rolecast/harness/metrics.hpp"
#include "rolecast/harness/train.hpp"

namespace rolecast::harness {

struct Prediction {
  std::string group_id, task_id, coder_id;
  CollabLabel truth;
  CollabLabel predicted;
};

struct FoldReport {
  std::string held_out_group;
  WeightedMetrics metrics;
  int best_epoch = 0;
  double best_test_loss = 0.0;
  double final_lr = 0.0;
  std::size_t train_size = 0;
  std::size_t test_size = 0;
  std::vector<Prediction> predictions;
};

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;
};

/// Arithmetic mean and population (N-denominator) standard deviation.
inline MeanStd mean_std(std::span<const double> v) {
  MeanStd out;
  if (v.empty()) return out;
  for (double x : v) out.mean += x;
  out.mean /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - out.mean) * (x - out.mean);
  out.std = std::sqrt(ss / static_cast<double>(v.size()));
  return out;
}

struct CVReport {
  TrainConfig config;
  std::vector<FoldReport> folds;
  std::vector<std::string> pinned_groups;
  MeanStd precision, recall, f1;
};

struct CvOptions {
  int workers = 1;
  /// Called once per finished fold, serialized under a lock, in completion order.
  std::function<void(std::size_t fold_index, const Fold&, TrainResult&)> on_fold_done;
};

inline FoldReport evaluate_fold(models::Model& model, std::span<const TaskSample* const> test) {
  FoldReport report;
  std::vector<CollabLabel> truth, pred;
  const Tensor x = models::encode_batch(test, model.spec());
  const Tensor logits = model.forward(x, nn::Mode::infer);
  const std::size_t c = logits.dim(1);
  for (std::size_t i = 0; i < test.size(); ++i) {
    const auto cls = argmax(std::span<const double>(logits.data() + i * c, c));
    truth.push_back(test[i]->ground_truth);
    pred.push_back(label_from_index(cls));
    report.predictions.push_back({test[i]->group_id, test[i]->task_id, test[i]->coder_id, truth.back(), pred.back()});
  }
  report.metrics = evaluate_weighted_metrics(truth, pred);
  report.test_size = test.size();
  return report;
}

inline void aggregate(CVReport& r) {
  std::vector<double> p, rc, f;
  for (const auto& fold : r.folds) {
    p.push_back(fold.metrics.precision);
    rc.push_back(fold.metrics.recall);
    f.push_back(fold.metrics.f1);
  }
  r.precision = mean_std(p);
  r.recall = mean_std(rc);
  r.f1 = mean_std(f);
}

/// Leave-one-group-out CV. Fold i trains with seed config.seed ^ i, so results do
/// not depend on how many workers run the folds.
inline CVReport run_cross_validation(std::span<const TaskSample> samples, const TrainConfig& config,
                                     const CvOptions& options = {}) {
  config.validate();
  const auto folds = logo_folds(samples);
  CVReport report;
  report.config = config;
  report.pinned_groups = pinned_groups(samples);
  report.folds.resize(folds.size());

  std::atomic<std::size_t> next{0};
  std::mutex mu;
  std::exception_ptr first_error;
  auto worker = [&] {
    for (std::size_t i = next++; i < folds.size(); i = next++) {
      {
        std::lock_guard lock(mu);
        if (first_error) return;
      }
      try {
        const auto [train, test] = split_fold(samples, folds[i]);
        TrainResult result = train_model(train, test, config, config.seed ^ static_cast<std::uint64_t>(i));
        FoldReport fr = evaluate_fold(result.model, test);
        fr.held_out_group = folds[i].test_group;
        fr.best_epoch = result.best_epoch;
        fr.best_test_loss = result.best_test_loss;
        fr.final_lr = result.final_lr;
        fr.train_size = train.size();
        std::lock_guard lock(mu);
        report.folds[i] = std::move(fr);
        if (options.on_fold_done) options.on_fold_done(i, folds[i], result);
      } catch (const Error& e) {
        std::lock_guard lock(mu);
        if (!first_error)
          first_error = std::make_exception_ptr(Error(e.category(), "fold " + folds[i].test_group + ": " + e.what()));
      } catch (const std::exception& e) {
        std::lock_guard lock(mu);
        if (!first_error)
          first_error =
              std::make_exception_ptr(Error(ErrorCategory::internal, "fold " + folds[i].test_group + ": " + e.what()));
      }
    }
  };
  const int workers = std::max(1, std::min<int>(options.workers, static_cast<int>(folds.size())));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (first_error) std::rethrow_exception(first_error);
  aggregate(report);
  return report;
}

struct GridPoint {
  int patience;
  double min_lr;
  CVReport report;
};

struct GridResult {
  std::vector<GridPoint> points;
  std::size_t best = 0;  ///< highest mean weighted F1; first wins ties
};

/// Cross-validates every (patience, min_lr) pair of the config's grid.
inline GridResult run_grid_search(std::span<const TaskSample> samples, const TrainConfig& config,
                                  const CvOptions& options = {}) {
  std::vector<int> patiences = config.grid_patience.empty() ? std::vector<int>{config.patience} : config.grid_patience;
  std::vector<double> min_lrs = config.grid_min_lr.empty() ? std::vector<double>{config.min_lr} : config.grid_min_lr;
  GridResult out;
  for (int p : patiences)
    for (double m : min_lrs) {
      TrainConfig c = config;
      c.patience = p;
      c.min_lr = m;
      c.grid_patience.clear();
      c.grid_min_lr.clear();
      out.points.push_back({p, m, run_cross_validation(samples, c, options)});
      if (out.points.back().report.f1.mean > out.points[out.best].report.f1.mean) out.best = out.points.size() - 1;
    }
  return out;
}

inline constexpr int kReportFormat = 1;

inline nlohmann::json metrics_json(const WeightedMetrics& m) {
  nlohmann::json per_class = nlohmann::json::array();
  for (std::size_t c = 0; c < kNumClasses; ++c)
    per_class.push_back({{"label", to_token(label_from_index(c))},
                         {"precision", m.per_class[c].precision},
                         {"recall", m.per_class[c].recall},
                         {"f1", m.per_class[c].f1},
                         {"support", m.per_class[c].support}});
  return {{"weighted_precision", m.precision}, {"weighted_recall", m.recall}, {"weighted_f1", m.f1},
          {"per_class", per_class}};
}

inline nlohmann::json to_json(const CVReport& r) {
  nlohmann::json folds = nlohmann::json::array();
  for (const auto& f : r.folds) {
    nlohmann::json preds = nlohmann::json::array();
    for (const auto& p : f.predictions)
      preds.push_back({p.group_id, p.task_id, p.coder_id, to_token(p.truth), to_token(p.predicted)});
    folds.push_back({{"held_out_group", f.held_out_group},
                     {"train_size", f.train_size},
                     {"test_size", f.test_size},
                     {"best_epoch", f.best_epoch},
                     {"best_test_loss", f.best_test_loss},
                     {"final_lr", f.final_lr},
                     {"metrics", metrics_json(f.metrics)},
                     {"predictions", preds}});
  }
  auto ms = [](const MeanStd& m) { return nlohmann::json{{"mean", m.mean}, {"std", m.std}}; };
  return {{"report_format", kReportFormat},
          {"variant",
           {{"feature", r.config.model_spec().feature_name()}, {"classifier", r.config.variant_name()}}},
          {"config", to_json(r.config)},
          {"seed", r.config.seed},
          {"metadata",
           {{"std", "population"},
            {"model_selection", r.config.selection == Selection::test_loss ? "lowest_test_loss" : "last_epoch"},
            {"selection_uses_test_split", r.config.selection == Selection::test_loss},
            {"pinned_groups", r.pinned_groups},
            {"fold_seed", "seed xor fold_index"}}},
          {"folds", folds},
          {"aggregate",
           {{"folds", r.folds.size()},
            {"weighted_precision", ms(r.precision)},
            {"weighted_recall", ms(r.recall)},
            {"weighted_f1", ms(r.f1)}}}};
}

/// One row of the cross-run comparison table, read back from a report document.
struct ReportRow {
  std::string feature;
  std::string classifier;
  MeanStd precision, recall, f1;
};

inline ReportRow report_row_from_json(const nlohmann::json& j) {
  try {
    require(j.at("report_format").get<int>() == kReportFormat, ErrorCategory::parse, "unsupported report format");
    const auto& a = j.at("aggregate");
    auto ms = [](const nlohmann::json& m) { return MeanStd{m.at("mean").get<double>(), m.at("std").get<double>()}; };
    return {j.at("variant").at("feature").get<std::string>(), j.at("variant").at("classifier").get<std::string>(),
            ms(a.at("weighted_precision")), ms(a.at("weighted_recall")), ms(a.at("weighted_f1"))};
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCategory::parse, std::string("malformed CV report: ") + e.what());
  }
}

/// Plain-text table with mean+-std in percent.
inline std::string render_table(std::span<const ReportRow> rows) {
  std::string out = "| Feature | Classifier | Weighted Precision | Weighted Recall | Weighted F1-Score |\n"
                    "|---|---|---|---|---|\n";
  char buf[64];
  auto cell = [&](const MeanStd& m) {
    std::snprintf(buf, sizeof buf, "%.2f+-%.2f", 100.0 * m.mean, 100.0 * m.std);
    return std::string(buf);
  };
  for (const auto& r : rows)
    out += "| " + r.feature + " | " + r.classifier + " | " + cell(r.precision) + " | " + cell(r.recall) + " | " +
           cell(r.f1) + " |\n";
  return out;
}

}  // namespace rolecast::harness
