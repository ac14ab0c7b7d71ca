#pragma once

#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "rolecast/error.hpp"
#include "rolecast/nn/layers.hpp"
#include "rolecast/tensor.hpp"

namespace rolecast::nn {

struct AdamOptions {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-7;
};

/// Adam with bias-corrected moments. Moments are allocated lazily to match the slots.
class Adam {
 public:
  explicit Adam(AdamOptions options = {}) : opt_(options) {}

  double learning_rate() const { return opt_.learning_rate; }
  void set_learning_rate(double lr) { opt_.learning_rate = lr; }
  const AdamOptions& options() const { return opt_; }
  long step_count() const { return t_; }
  const std::vector<Tensor>& first_moments() const { return m_; }
  const std::vector<Tensor>& second_moments() const { return v_; }

  void step(std::span<const ParamSlot> params) {
    if (m_.empty()) {
      for (const auto& p : params) {
        m_.emplace_back(p.value->shape());
        v_.emplace_back(p.value->shape());
      }
    }
    require(m_.size() == params.size(), ErrorCategory::shape, "adam: parameter list changed between steps");
    for (std::size_t i = 0; i < params.size(); ++i) {
      require(m_[i].shape() == params[i].value->shape() && params[i].grad->shape() == params[i].value->shape(),
              ErrorCategory::shape, "adam: shape mismatch for " + params[i].name);
      for (double g : params[i].grad->values())
        require(std::isfinite(g), ErrorCategory::numeric, "adam: non-finite gradient in " + params[i].name);
    }
    ++t_;
    const double b1 = opt_.beta1, b2 = opt_.beta2;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
      double* w = params[i].value->data();
      const double* g = params[i].grad->data();
      double* m = m_[i].data();
      double* v = v_[i].data();
      for (std::size_t j = 0, n = m_[i].size(); j < n; ++j) {
        m[j] = b1 * m[j] + (1.0 - b1) * g[j];
        v[j] = b2 * v[j] + (1.0 - b2) * g[j] * g[j];
        w[j] -= opt_.learning_rate * (m[j] / c1) / (std::sqrt(v[j] / c2) + opt_.epsilon);
      }
    }
  }

 private:
  AdamOptions opt_;
  std::vector<Tensor> m_, v_;
  long t_ = 0;
};

/// Halves (by `factor`) the learning rate once the monitored loss has failed to improve
/// by more than min_delta for `patience` consecutive epochs.
class PlateauScheduler {
 public:
  PlateauScheduler(int patience, double min_lr, double factor = 0.5, double min_delta = 1e-4)
      : patience_(patience), min_lr_(min_lr), factor_(factor), min_delta_(min_delta) {
    require(patience >= 1, ErrorCategory::config, "patience must be >= 1");
    require(min_lr > 0, ErrorCategory::config, "min_lr must be positive");
  }

  /// Feeds one epoch's loss and returns the learning rate to use next.
  double update(double loss, double lr) {
    if (loss < best_ - min_delta_) {
      best_ = loss;
      wait_ = 0;
      return lr;
    }
    if (++wait_ >= patience_) {
      wait_ = 0;
      return std::max(lr * factor_, min_lr_);
    }
    return lr;
  }

 private:
  int patience_;
  double min_lr_, factor_, min_delta_;
  double best_ = std::numeric_limits<double>::infinity();
  int wait_ = 0;
};

/// Replays a whole loss history through a fresh scheduler.
inline double reduce_lr_on_plateau(std::span<const double> history, double initial_lr, int patience,
                                   double min_lr, double factor = 0.5) {
  PlateauScheduler s(patience, min_lr, factor);
  double lr = initial_lr;
  for (double loss : history) lr = s.update(loss, lr);
  return lr;
}

}  // namespace rolecast::nn
