#pragma once

#include <algorithm>
#include <array>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "rolecast/data_model.hpp"
#include "rolecast/error.hpp"

namespace rolecast {

/// Cohen's kappa between two raters over the same items.
template <class T>
double cohen_kappa(std::span<const T> a, std::span<const T> b) {
  require(a.size() == b.size(), ErrorCategory::shape, "cohen_kappa: sequences differ in length");
  require(!a.empty(), ErrorCategory::shape, "cohen_kappa: empty sequences");
  const double n = static_cast<double>(a.size());
  std::map<T, double> freq_a, freq_b;
  double agree = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    agree += a[i] == b[i];
    freq_a[a[i]] += 1.0;
    freq_b[b[i]] += 1.0;
  }
  const double p_o = agree / n;
  double p_e = 0.0;
  for (const auto& [label, count] : freq_a) {
    auto it = freq_b.find(label);
    if (it != freq_b.end()) p_e += (count / n) * (it->second / n);
  }
  if (p_e >= 1.0) return p_o >= 1.0 ? 1.0 : 0.0;
  return (p_o - p_e) / (1.0 - p_e);
}

template <class T>
double cohen_kappa(const std::vector<T>& a, const std::vector<T>& b) {
  return cohen_kappa(std::span<const T>(a), std::span<const T>(b));
}

/// Mean over the three rater pairs of the fraction of matching positions.
template <class T>
double average_pairwise_agreement(const std::array<std::vector<T>, 3>& seqs) {
  const std::size_t n = seqs[0].size();
  require(seqs[1].size() == n && seqs[2].size() == n, ErrorCategory::shape,
          "average_pairwise_agreement: sequences differ in length");
  require(n > 0, ErrorCategory::shape, "average_pairwise_agreement: empty sequences");
  constexpr std::array<std::pair<int, int>, 3> pairs{{{0, 1}, {0, 2}, {1, 2}}};
  double total = 0.0;
  for (auto [i, j] : pairs) {
    std::size_t same = 0;
    for (std::size_t k = 0; k < n; ++k) same += seqs[i][k] == seqs[j][k];
    total += static_cast<double>(same) / static_cast<double>(n);
  }
  return total / 3.0;
}

template <class T>
double mean_pairwise_kappa(const std::array<std::vector<T>, 3>& seqs) {
  return (cohen_kappa(seqs[0], seqs[1]) + cohen_kappa(seqs[0], seqs[2]) + cohen_kappa(seqs[1], seqs[2])) / 3.0;
}

struct IrrSummary {
  double label_agreement = 0.0;
  double label_kappa = 0.0;
  double role_agreement = 0.0;
  double role_kappa = 0.0;
  std::size_t tasks = 0;
};

/// Corpus-level reliability for both coding levels. Coders are matched per task in
/// sorted coder_id order. Role sequences cover every cell inside the union of the
/// coders' coded regions, with Empty counted as its own category.
inline IrrSummary corpus_irr(std::span<const TaskSample> samples) {
  std::map<std::pair<std::string, std::string>, std::vector<const TaskSample*>> by_task;
  for (const auto& s : samples) by_task[{s.group_id, s.task_id}].push_back(&s);

  std::array<std::vector<CollabLabel>, 3> labels;
  std::array<std::vector<RoleCode>, 3> roles;
  for (auto& [key, coders] : by_task) {
    require(coders.size() == 3, ErrorCategory::parse,
            "group " + key.first + " task " + key.second + ": IRR needs exactly 3 coders");
    std::sort(coders.begin(), coders.end(),
              [](const TaskSample* x, const TaskSample* y) { return x->coder_id < y->coder_id; });
    int duration = 0, students = 0;
    for (const auto* c : coders) {
      duration = std::max(duration, c->matrix.duration_minutes());
      students = std::max(students, c->matrix.num_students());
    }
    for (int k = 0; k < 3; ++k) {
      labels[k].push_back(coders[k]->label);
      for (int m = 0; m < duration; ++m)
        for (int s = 0; s < students; ++s) roles[k].push_back(coders[k]->matrix.at(m, s));
    }
  }
  IrrSummary out;
  out.tasks = by_task.size();
  if (out.tasks == 0) return out;
  out.label_agreement = average_pairwise_agreement(labels);
  out.label_kappa = mean_pairwise_kappa(labels);
  out.role_agreement = average_pairwise_agreement(roles);
  out.role_kappa = mean_pairwise_kappa(roles);
  return out;
}

}  // namespace rolecast
