#pragma once

#include <algorithm>
#include <concepts>
#include <cstddef>
#include <vector>

#include "rolecast/data_model.hpp"
#include "rolecast/error.hpp"
#include "rolecast/losses.hpp"
#include "rolecast/models/model.hpp"
#include "rolecast/tensor.hpp"

namespace rolecast::explain {

/// Anything exposing a final temporal feature map [L, K] and the gradient of a
/// class logit with respect to it.
template <class M>
concept TemporalFeatureModel = requires(M& m, const Tensor& x, std::size_t c) {
  { m.feature_map(x) } -> std::convertible_to<Tensor>;
  { m.feature_map_gradient(c) } -> std::convertible_to<Tensor>;
  { m.last_logits() } -> std::convertible_to<const Tensor&>;
};

struct GradCamMap {
  std::vector<double> weights;  ///< normalized to [0, 1], one per minute
  std::vector<double> raw;      ///< before normalization, after resampling
  CollabLabel target_class = CollabLabel::E;
  CollabLabel predicted_class = CollabLabel::E;
};

/// Min-max rescale to [0, 1]; a constant input maps to all zeros.
inline std::vector<double> normalize_map(std::span<const double> raw) {
  for (double v : raw) require(v >= 0.0, ErrorCategory::numeric, "normalize_map: negative input");
  std::vector<double> out(raw.size(), 0.0);
  if (raw.empty()) return out;
  const auto [lo, hi] = std::minmax_element(raw.begin(), raw.end());
  if (*hi == *lo) return out;
  for (std::size_t i = 0; i < raw.size(); ++i) out[i] = (raw[i] - *lo) / (*hi - *lo);
  return out;
}

/// Linear resampling of `v` onto `length` evenly spaced points (endpoints aligned).
inline std::vector<double> resample_linear(std::span<const double> v, std::size_t length) {
  if (v.size() == length) return {v.begin(), v.end()};
  std::vector<double> out(length);
  if (v.size() == 1 || length == 1) {
    std::fill(out.begin(), out.end(), v[0]);
    return out;
  }
  const double scale = static_cast<double>(v.size() - 1) / static_cast<double>(length - 1);
  for (std::size_t i = 0; i < length; ++i) {
    const double pos = static_cast<double>(i) * scale;
    const auto lo = std::min(static_cast<std::size_t>(pos), v.size() - 2);
    const double frac = pos - static_cast<double>(lo);
    out[i] = v[lo] * (1.0 - frac) + v[lo + 1] * frac;
  }
  return out;
}

/// ReLU(sum_k alpha_k A[:, k]) with alpha_k the temporal mean of d(score)/dA[:, k].
inline std::vector<double> gradcam_raw(const Tensor& activations, const Tensor& gradients) {
  require(activations.rank() == 2 && activations.shape() == gradients.shape(), ErrorCategory::shape,
          "grad-cam: activations and gradients must both be [L, K]");
  const std::size_t len = activations.dim(0), k = activations.dim(1);
  const Eigen::RowVectorXd alpha = gradients.matrix(len, k).colwise().mean();
  std::vector<double> raw(len);
  for (std::size_t t = 0; t < len; ++t)
    raw[t] = std::max(0.0, activations.matrix(len, k).row(static_cast<Eigen::Index>(t)).dot(alpha));
  return raw;
}

/// Grad-CAM over the model's final temporal feature map for one encoded sample [L, C].
template <TemporalFeatureModel M>
GradCamMap grad_cam_temporal(M& model, const Tensor& sample, std::size_t class_index,
                             std::size_t target_length = kMaxMinutes) {
  const Tensor activations = model.feature_map(sample);
  const Tensor gradients = model.feature_map_gradient(class_index);
  GradCamMap out;
  out.raw = resample_linear(gradcam_raw(activations, gradients), target_length);
  out.weights = normalize_map(out.raw);
  out.target_class = label_from_index(class_index);
  out.predicted_class = label_from_index(argmax(model.last_logits().values()));
  return out;
}

/// Convenience overload for a built model; only temporal models carry a feature map.
inline GradCamMap grad_cam_temporal(models::Model& model, const TaskSample& sample, std::size_t class_index) {
  auto* net = model.resnet();
  require(net != nullptr, ErrorCategory::usage, "Grad-CAM supports temporal models only (no convolutional layers)");
  Tensor x = models::encode_sample(sample, model.spec());
  return grad_cam_temporal(*net, x.reshaped({x.dim(1), x.dim(2)}), class_index);
}

/// Predicted class for the sample under the model (infer mode).
inline std::size_t predicted_class(models::Model& model, const TaskSample& sample) {
  return argmax(models::predict_proba(model, sample).values());
}

}  // namespace rolecast::explain
