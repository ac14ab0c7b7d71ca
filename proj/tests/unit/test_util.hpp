#pragma once

#include <sstream>
#include <string>
#include <vector>

#include "rolecast/data_model.hpp"
#include "rolecast/random.hpp"
#include "rolecast/tensor.hpp"

namespace rolecast::testing {

/// Grid with `minutes` x `students` cells all set to `role`.
inline B2Matrix filled_matrix(int minutes, int students, RoleCode role) {
  B2Matrix::Grid g{};
  for (int m = 0; m < minutes; ++m)
    for (int s = 0; s < students; ++s) g[m][s] = role;
  return B2Matrix(g, minutes, students);
}

inline B2Matrix random_matrix(Rng& rng, int minutes, int students) {
  B2Matrix::Grid g{};
  for (int m = 0; m < minutes; ++m)
    for (int s = 0; s < students; ++s) g[m][s] = static_cast<RoleCode>(uniform_int(rng, 1, 7));
  return B2Matrix(g, minutes, students);
}

inline TaskSample make_sample(std::string group, std::string task, std::string coder, const B2Matrix& m,
                              CollabLabel label, CollabLabel truth) {
  return TaskSample{std::move(group), std::move(task), std::move(coder), m, build_histogram(m), label, truth};
}

inline Tensor random_tensor(Tensor::Shape shape, Rng& rng, double scale = 1.0) {
  Tensor t(std::move(shape));
  for (auto& v : t.values()) v = (2.0 * uniform01(rng) - 1.0) * scale;
  return t;
}

/// Sum of elementwise products; used as a scalar probe loss in gradient checks.
inline double dot(const Tensor& a, const Tensor& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace rolecast::testing
