#pragma once

#include <array>
#include <span>

#include "rolecast/data_model.hpp"
#include "rolecast/error.hpp"

namespace rolecast::harness {

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;
};

struct WeightedMetrics {
  std::array<ClassMetrics, kNumClasses> per_class{};
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t count = 0;
};

/// Per-class precision/recall/F1 (0 when a denominator is 0) and their
/// support-weighted averages.
inline WeightedMetrics evaluate_weighted_metrics(std::span<const CollabLabel> truth, std::span<const CollabLabel> pred) {
  require(truth.size() == pred.size(), ErrorCategory::shape, "metrics: truth and prediction lengths differ");
  require(!truth.empty(), ErrorCategory::shape, "metrics: empty label vectors");
  std::array<std::array<std::size_t, kNumClasses>, kNumClasses> confusion{};
  for (std::size_t i = 0; i < truth.size(); ++i) ++confusion[index_of(truth[i])][index_of(pred[i])];

  WeightedMetrics out;
  out.count = truth.size();
  const double n = static_cast<double>(truth.size());
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    std::size_t tp = confusion[c][c], actual = 0, predicted = 0;
    for (std::size_t k = 0; k < kNumClasses; ++k) {
      actual += confusion[c][k];
      predicted += confusion[k][c];
    }
    auto& m = out.per_class[c];
    m.support = actual;
    m.precision = predicted ? static_cast<double>(tp) / static_cast<double>(predicted) : 0.0;
    m.recall = actual ? static_cast<double>(tp) / static_cast<double>(actual) : 0.0;
    m.f1 = (m.precision + m.recall) > 0 ? 2.0 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
    const double w = static_cast<double>(actual) / n;
    out.precision += w * m.precision;
    out.recall += w * m.recall;
    out.f1 += w * m.f1;
  }
  return out;
}

}  // namespace rolecast::harness
