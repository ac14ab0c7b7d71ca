#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>

#include "rolecast/tensor.hpp"

namespace rolecast::nn {

/// Relative error with a magnitude floor: entries whose gradient is below `floor` are
/// compared absolutely, since central differences carry ~1e-11 roundoff there.
inline double relative_error(double analytic, double numeric, double floor = 1e-5) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

/// Central-difference check of `analytic` against f over every entry of `params`.
/// Returns the worst relative error.
inline double grad_check(const std::function<double()>& f, Tensor& params, const Tensor& analytic,
                         double h = 1e-5) {
  double worst = 0.0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double saved = params[i];
    params[i] = saved + h;
    const double up = f();
    params[i] = saved - h;
    const double down = f();
    params[i] = saved;
    worst = std::max(worst, relative_error(analytic[i], (up - down) / (2.0 * h)));
  }
  return worst;
}

}  // namespace rolecast::nn
