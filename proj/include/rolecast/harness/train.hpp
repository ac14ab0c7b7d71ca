#pragma once

#include <cmath>
#include <cstdint>
#include <algorithm>
#include <limits>
#include <numeric>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rolecast/data_model.hpp"
#include "rolecast/error.hpp"
#include "rolecast/losses.hpp"
#include "rolecast/models/model.hpp"
#include "rolecast/nn/optim.hpp"
#include "rolecast/random.hpp"

namespace rolecast::harness {

using models::Encoding;
using models::FeatureKind;

enum class Selection { test_loss, last_epoch };

struct TrainConfig {
  int epochs = 500;
  int batch_divisor = 10;
  int patience = 10;
  double min_lr = 1e-4;
  double initial_lr = 1e-3;
  LossKind loss = LossKind::oce;
  bool class_balance = true;
  FeatureKind feature = FeatureKind::temporal_b2;
  Encoding encoding = Encoding::raw_integer;
  std::uint64_t seed = 42;
  Selection selection = Selection::test_loss;
  /// Optional (patience, min_lr) search grid; empty means a single run.
  std::vector<int> grid_patience;
  std::vector<double> grid_min_lr;

  models::ModelSpec model_spec() const { return {feature, encoding, kNumClasses}; }
  std::string_view model_kind() const { return feature == FeatureKind::temporal_b2 ? "resnet" : "mlp"; }

  /// Row label in the style "ResNet - Ordinal-Cross-Entropy Loss + Class-Balancing".
  std::string variant_name() const {
    std::string name(model_spec().classifier_name());
    name += loss == LossKind::ce ? " - Cross-Entropy Loss" : " - Ordinal-Cross-Entropy Loss";
    if (class_balance) name += " + Class-Balancing";
    return name;
  }

  void validate() const {
    require(epochs >= 1, ErrorCategory::config, "train.epochs must be >= 1");
    require(batch_divisor >= 1, ErrorCategory::config, "train.batch_divisor must be >= 1");
    require(patience >= 1, ErrorCategory::config, "train.patience must be >= 1");
    require(min_lr > 0, ErrorCategory::config, "train.min_lr must be > 0");
    require(initial_lr > 0, ErrorCategory::config, "train.initial_lr must be > 0");
    for (int p : grid_patience) require(p >= 1, ErrorCategory::config, "train.grid.patience entries must be >= 1");
    for (double m : grid_min_lr) require(m > 0, ErrorCategory::config, "train.grid.min_lr entries must be > 0");
  }
};

inline nlohmann::json to_json(const TrainConfig& c) {
  return {{"epochs", c.epochs},
          {"batch_divisor", c.batch_divisor},
          {"patience", c.patience},
          {"min_lr", c.min_lr},
          {"initial_lr", c.initial_lr},
          {"loss", to_string(c.loss)},
          {"class_balance", c.class_balance},
          {"feature_kind", models::to_string(c.feature)},
          {"model_kind", c.model_kind()},
          {"encoding", models::to_string(c.encoding)},
          {"seed", c.seed},
          {"selection", c.selection == Selection::test_loss ? "test_loss" : "last_epoch"},
          {"monitor_split", "test"},
          {"grid", {{"patience", c.grid_patience}, {"min_lr", c.grid_min_lr}}}};
}

/// Reads a training config, keeping defaults for absent keys. Errors name the field.
inline TrainConfig train_config_from_json(const nlohmann::json& j) {
  TrainConfig c;
  require(j.is_object(), ErrorCategory::config, "train config must be an object");
  static const std::vector<std::string> known = {"epochs", "batch_divisor", "patience", "min_lr", "initial_lr",
                                                 "loss", "class_balance", "feature_kind", "model_kind", "encoding",
                                                 "seed", "selection", "monitor_split", "grid"};
  for (const auto& [key, value] : j.items())
    require(std::find(known.begin(), known.end(), key) != known.end(), ErrorCategory::config,
            "train." + key + ": unknown field");
  auto field = [&](const char* key, auto& dst) {
    if (!j.contains(key)) return;
    try {
      j.at(key).get_to(dst);
    } catch (const nlohmann::json::exception&) {
      fail(ErrorCategory::config, std::string("train.") + key + ": wrong type");
    }
  };
  field("epochs", c.epochs);
  field("batch_divisor", c.batch_divisor);
  field("patience", c.patience);
  field("min_lr", c.min_lr);
  field("initial_lr", c.initial_lr);
  field("class_balance", c.class_balance);
  field("seed", c.seed);
  std::string s;
  if (j.contains("loss")) {
    field("loss", s);
    require(s == "ce" || s == "oce", ErrorCategory::config, "train.loss: expected 'ce' or 'oce'");
    c.loss = s == "ce" ? LossKind::ce : LossKind::oce;
  }
  if (j.contains("feature_kind")) {
    field("feature_kind", s);
    try {
      c.feature = models::feature_kind_from(s);
    } catch (const Error&) {
      fail(ErrorCategory::config, "train.feature_kind: expected 'temporal_b2' or 'histogram'");
    }
  }
  if (j.contains("model_kind")) {
    field("model_kind", s);
    require(s == "resnet" || s == "mlp", ErrorCategory::config, "train.model_kind: expected 'resnet' or 'mlp'");
    require(s == c.model_kind(), ErrorCategory::config,
            "train.model_kind: '" + s + "' does not match feature_kind (temporal_b2 uses resnet, histogram uses mlp)");
  }
  if (j.contains("encoding")) {
    field("encoding", s);
    try {
      c.encoding = models::encoding_from(s);
    } catch (const Error&) {
      fail(ErrorCategory::config, "train.encoding: expected 'raw_integer' or 'one_hot_roles'");
    }
  }
  if (j.contains("selection")) {
    field("selection", s);
    require(s == "test_loss" || s == "last_epoch", ErrorCategory::config,
            "train.selection: expected 'test_loss' or 'last_epoch'");
    c.selection = s == "test_loss" ? Selection::test_loss : Selection::last_epoch;
  }
  if (j.contains("monitor_split")) {
    field("monitor_split", s);
    require(s == "test", ErrorCategory::config, "train.monitor_split: only 'test' is supported");
  }
  if (j.contains("grid")) {
    const auto& g = j.at("grid");
    require(g.is_object(), ErrorCategory::config, "train.grid: must be an object");
    try {
      if (g.contains("patience")) g.at("patience").get_to(c.grid_patience);
      if (g.contains("min_lr")) g.at("min_lr").get_to(c.grid_min_lr);
    } catch (const nlohmann::json::exception&) {
      fail(ErrorCategory::config, "train.grid: patience must be integers and min_lr numbers");
    }
  }
  c.validate();
  return c;
}

struct EpochRecord {
  int epoch = 0;  ///< 1-based
  double train_loss = 0.0;
  double test_loss = 0.0;
  double learning_rate = 0.0;
};

struct TrainResult {
  models::Model model;  ///< parameters from the selected epoch
  std::vector<EpochRecord> history;
  int best_epoch = 0;
  double best_test_loss = 0.0;
  double final_lr = 0.0;
};

inline std::size_t batch_size_for(std::size_t n_train, int divisor) {
  return (n_train + static_cast<std::size_t>(divisor) - 1) / static_cast<std::size_t>(divisor);
}

/// Per-sample loss weights from class balancing (all ones when disabled).
inline std::vector<double> sample_weights(std::span<const TaskSample* const> samples, bool balance) {
  std::vector<double> w(samples.size(), 1.0);
  if (!balance) return w;
  std::vector<CollabLabel> labels;
  for (const auto* s : samples) labels.push_back(s->ground_truth);
  const auto per_class = class_balance_weights(labels);
  for (std::size_t i = 0; i < samples.size(); ++i) w[i] = per_class[index_of(samples[i]->ground_truth)];
  return w;
}

/// Unweighted mean loss of `model` over pre-encoded inputs, in infer mode.
inline double evaluate_loss(models::Model& model, const Tensor& inputs, std::span<const std::size_t> targets,
                            LossKind kind) {
  const Tensor logits = model.forward(inputs, nn::Mode::infer);
  const std::vector<double> ones(targets.size(), 1.0);
  return batch_loss(kind, logits, targets, ones).loss;
}

namespace detail {

inline Tensor gather_rows(const Tensor& all, std::span<const std::size_t> rows) {
  Tensor::Shape shape = all.shape();
  const std::size_t per = all.size() / shape[0];
  shape[0] = rows.size();
  Tensor out(shape);
  for (std::size_t i = 0; i < rows.size(); ++i)
    std::copy_n(all.data() + rows[i] * per, per, out.data() + i * per);
  return out;
}

}  // namespace detail

/// Mini-batch Adam training. After every epoch the held-out loss is measured and,
/// under Selection::test_loss, the parameters with the lowest one are kept. The
/// learning-rate plateau schedule monitors the training loss.
inline TrainResult train_model(std::span<const TaskSample* const> train, std::span<const TaskSample* const> test,
                               const TrainConfig& config, std::uint64_t seed) {
  config.validate();
  require(!train.empty() && !test.empty(), ErrorCategory::config, "train_model needs non-empty train and test splits");
  {
    std::set<CollabLabel> classes;
    for (const auto* s : train) classes.insert(s->ground_truth);
    require(classes.size() >= 2, ErrorCategory::config, "training set must contain at least two classes");
  }
  const models::ModelSpec spec = config.model_spec();
  models::Model model(spec, seed);
  Rng rng(seed ^ 0x9e3779b97f4a7c15ULL);

  const Tensor train_x = models::encode_batch(train, spec);
  const Tensor test_x = models::encode_batch(test, spec);
  std::vector<std::size_t> train_y, test_y;
  for (const auto* s : train) train_y.push_back(index_of(s->ground_truth));
  for (const auto* s : test) test_y.push_back(index_of(s->ground_truth));
  const std::vector<double> weights = sample_weights(train, config.class_balance);

  const std::size_t batch = batch_size_for(train.size(), config.batch_divisor);
  nn::Adam adam(nn::AdamOptions{config.initial_lr});
  nn::PlateauScheduler plateau(config.patience, config.min_lr);
  auto params = model.parameters();

  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  TrainResult result{model, {}, 0, std::numeric_limits<double>::infinity(), config.initial_lr};
  std::vector<std::size_t> rows;
  std::vector<std::size_t> batch_y;
  std::vector<double> batch_w;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    rolecast::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t end = std::min(order.size(), start + batch);
      rows.assign(order.begin() + static_cast<long>(start), order.begin() + static_cast<long>(end));
      batch_y.clear();
      batch_w.clear();
      for (auto r : rows) {
        batch_y.push_back(train_y[r]);
        batch_w.push_back(weights[r]);
      }
      const Tensor logits = model.forward(detail::gather_rows(train_x, rows), nn::Mode::train);
      const BatchLoss bl = batch_loss(config.loss, logits, batch_y, batch_w);
      model.zero_grad();
      model.backward(bl.logit_grad);
      adam.step(params);
      epoch_loss += bl.loss * static_cast<double>(rows.size());
    }
    epoch_loss /= static_cast<double>(order.size());
    require(std::isfinite(epoch_loss), ErrorCategory::numeric,
            "non-finite training loss at epoch " + std::to_string(epoch));
    const double test_loss = evaluate_loss(model, test_x, test_y, config.loss);
    require(std::isfinite(test_loss), ErrorCategory::numeric, "non-finite test loss at epoch " + std::to_string(epoch));
    result.history.push_back({epoch, epoch_loss, test_loss, adam.learning_rate()});

    const bool take = config.selection == Selection::last_epoch ? epoch == config.epochs
                                                                : test_loss < result.best_test_loss;
    if (take) {
      result.best_test_loss = test_loss;
      result.best_epoch = epoch;
      result.model.load_state_from(model);
    }
    adam.set_learning_rate(plateau.update(epoch_loss, adam.learning_rate()));
  }
  result.final_lr = adam.learning_rate();
  return result;
}

}  // namespace rolecast::harness
