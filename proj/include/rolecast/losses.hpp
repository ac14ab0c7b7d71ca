#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdlib>
#include <span>
#include <string_view>
#include <vector>

#include "rolecast/data_model.hpp"
#include "rolecast/error.hpp"
#include "rolecast/tensor.hpp"

namespace rolecast {

inline constexpr double kProbabilityFloor = 1e-12;

/// Probability distribution over classes; entries in (0, 1], summing to 1.
class ProbVector {
 public:
  explicit ProbVector(std::vector<double> p) : p_(std::move(p)) {
    require(!p_.empty(), ErrorCategory::numeric, "empty probability vector");
    double sum = 0.0;
    for (double v : p_) {
      require(v >= 0.0 && v <= 1.0, ErrorCategory::numeric, "probabilities must lie in [0, 1]");
      sum += v;
    }
    require(std::abs(sum - 1.0) <= 1e-9, ErrorCategory::numeric, "probabilities must sum to 1");
  }

  std::size_t size() const { return p_.size(); }
  double operator[](std::size_t i) const { return p_[i]; }
  std::span<const double> values() const { return p_; }

 private:
  std::vector<double> p_;
};

/// One-hot target, stored by its hot index.
class OneHotLabel {
 public:
  OneHotLabel(std::size_t index, std::size_t num_classes) : index_(index), classes_(num_classes) {
    require(index < num_classes, ErrorCategory::numeric, "one-hot index out of range");
  }
  explicit OneHotLabel(CollabLabel l) : OneHotLabel(index_of(l), kNumClasses) {}

  std::size_t index() const { return index_; }
  std::size_t size() const { return classes_; }
  double operator[](std::size_t i) const { return i == index_ ? 1.0 : 0.0; }

 private:
  std::size_t index_;
  std::size_t classes_;
};

enum class LossKind { ce, oce };

inline std::string_view to_string(LossKind k) { return k == LossKind::ce ? "ce" : "oce"; }

/// First index of the maximum; ties go to the lowest index.
inline std::size_t argmax(std::span<const double> v) {
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

inline ProbVector softmax(std::span<const double> logits) {
  const double top = *std::max_element(logits.begin(), logits.end());
  std::vector<double> p(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) sum += p[i] = std::exp(logits[i] - top);
  for (auto& v : p) v /= sum;
  return ProbVector(std::move(p));
}

inline double categorical_cross_entropy(const ProbVector& p, const OneHotLabel& y) {
  require(p.size() == y.size(), ErrorCategory::shape, "cross entropy: class count mismatch");
  return -std::log(std::max(p[y.index()], kProbabilityFloor));
}

/// Ordinal distance between the predicted and true classes.
inline std::size_t ordinal_distance(const ProbVector& p, const OneHotLabel& y) {
  const std::size_t pred = argmax(p.values());
  return pred > y.index() ? pred - y.index() : y.index() - pred;
}

/// Cross entropy scaled by (1 + |argmax(y) - argmax(p)|).
inline double ordinal_cross_entropy(const ProbVector& p, const OneHotLabel& y) {
  return (1.0 + static_cast<double>(ordinal_distance(p, y))) * categorical_cross_entropy(p, y);
}

inline double loss_value(LossKind kind, const ProbVector& p, const OneHotLabel& y) {
  return kind == LossKind::ce ? categorical_cross_entropy(p, y) : ordinal_cross_entropy(p, y);
}

/// d(weight * OCE)/d(logits), holding the ordinal weight constant.
inline std::vector<double> oce_logit_gradient(std::span<const double> logits, const OneHotLabel& y,
                                              double sample_weight) {
  const ProbVector p = softmax(logits);
  const double scale = sample_weight * (1.0 + static_cast<double>(ordinal_distance(p, y)));
  std::vector<double> g(p.size());
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = scale * (p[i] - y[i]);
  return g;
}

inline std::vector<double> ce_logit_gradient(std::span<const double> logits, const OneHotLabel& y,
                                             double sample_weight) {
  const ProbVector p = softmax(logits);
  std::vector<double> g(p.size());
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = sample_weight * (p[i] - y[i]);
  return g;
}

/// Per-class weights N / (C_present * n_c); absent classes get weight 0.
inline std::vector<double> class_balance_weights(std::span<const CollabLabel> labels,
                                                 std::size_t num_classes = kNumClasses) {
  require(!labels.empty(), ErrorCategory::numeric, "class_balance_weights: empty label list");
  std::vector<double> counts(num_classes, 0.0);
  for (auto l : labels) counts.at(index_of(l)) += 1.0;
  const double present = static_cast<double>(std::count_if(counts.begin(), counts.end(), [](double c) { return c > 0; }));
  const double n = static_cast<double>(labels.size());
  std::vector<double> w(num_classes, 0.0);
  for (std::size_t c = 0; c < num_classes; ++c)
    if (counts[c] > 0) w[c] = n / (present * counts[c]);
  return w;
}

struct BatchLoss {
  double loss = 0.0;      ///< mean of per-sample weighted losses
  Tensor logit_grad;      ///< [N, C], already divided by N
  std::vector<std::size_t> predictions;
};

/// Weighted mean loss over a batch of logits and its gradient w.r.t. the logits.
inline BatchLoss batch_loss(LossKind kind, const Tensor& logits, std::span<const std::size_t> targets,
                            std::span<const double> sample_weights) {
  require(logits.rank() == 2 && logits.dim(0) == targets.size() && sample_weights.size() == targets.size(),
          ErrorCategory::shape, "batch_loss: logits/targets/weights disagree");
  const std::size_t n = logits.dim(0), c = logits.dim(1);
  BatchLoss out{0.0, Tensor({n, c}), {}};
  out.predictions.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::span<const double> row(logits.data() + i * c, c);
    const ProbVector p = softmax(row);
    const OneHotLabel y(targets[i], c);
    const double scale =
        sample_weights[i] * (kind == LossKind::oce ? 1.0 + static_cast<double>(ordinal_distance(p, y)) : 1.0);
    out.loss += scale * categorical_cross_entropy(p, y);
    for (std::size_t j = 0; j < c; ++j) out.logit_grad.at(i, j) = scale * (p[j] - y[j]) / static_cast<double>(n);
    out.predictions.push_back(argmax(p.values()));
  }
  out.loss /= static_cast<double>(n);
  require(std::isfinite(out.loss), ErrorCategory::numeric, "non-finite loss");
  return out;
}

}  // namespace rolecast
