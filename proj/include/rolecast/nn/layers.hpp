#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "rolecast/error.hpp"
#include "rolecast/random.hpp"
#include "rolecast/tensor.hpp"

namespace rolecast::nn {

enum class Mode { train, infer };

/// Non-owning handle to a learnable tensor and its gradient accumulator.
struct ParamSlot {
  std::string name;
  Tensor* value;
  Tensor* grad;
};

/// Non-owning handle to any persisted tensor (parameters and running statistics).
struct StateSlot {
  std::string name;
  Tensor* value;
};

/// Glorot-uniform fill: limit = sqrt(6 / (fan_in + fan_out)).
inline void glorot_uniform(Tensor& w, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (auto& v : w.values()) v = (2.0 * uniform01(rng) - 1.0) * limit;
}

/// 1D convolution with zero "same" padding; the extra pad for even kernels goes left.
/// Input and output are [N, L, C]; weights are [k, Cin, Cout].
class Conv1D {
 public:
  Conv1D() = default;
  Conv1D(std::size_t kernel, std::size_t in_ch, std::size_t out_ch)
      : weight({kernel, in_ch, out_ch}),
        bias({out_ch}),
        weight_grad({kernel, in_ch, out_ch}),
        bias_grad({out_ch}) {}

  std::size_t kernel() const { return weight.dim(0); }
  std::size_t in_channels() const { return weight.dim(1); }
  std::size_t out_channels() const { return weight.dim(2); }
  std::size_t left_pad() const { return kernel() / 2; }

  void init(Rng& rng) {
    glorot_uniform(weight, kernel() * in_channels(), kernel() * out_channels(), rng);
    bias.fill(0.0);
  }

  Tensor forward(const Tensor& x) {
    require(x.rank() == 3 && x.dim(2) == in_channels(), ErrorCategory::shape,
            "conv1d: expected [N, L, " + std::to_string(in_channels()) + "] input, got " +
                Tensor::describe(x.shape()));
    n_ = x.dim(0);
    len_ = x.dim(1);
    im2col(x);
    Tensor out({n_, len_, out_channels()});
    auto out_m = out.matrix(n_ * len_, out_channels());
    out_m.noalias() = cols_.matrix(n_ * len_, kernel() * in_channels()) *
                      weight.matrix(kernel() * in_channels(), out_channels());
    out_m.rowwise() += bias.matrix(1, out_channels()).row(0);
    return out;
  }

  /// Accumulates weight/bias gradients and returns the input gradient.
  Tensor backward(const Tensor& grad_out) {
    require_shape(grad_out, {n_, len_, out_channels()}, "conv1d backward");
    const std::size_t rows = n_ * len_;
    const std::size_t kc = kernel() * in_channels();
    auto g = grad_out.matrix(rows, out_channels());
    weight_grad.matrix(kc, out_channels()).noalias() += cols_.matrix(rows, kc).transpose() * g;
    bias_grad.matrix(1, out_channels()) += g.colwise().sum();

    Tensor dcols({rows, kc});
    dcols.matrix(rows, kc).noalias() = g * weight.matrix(kc, out_channels()).transpose();
    Tensor dx({n_, len_, in_channels()});
    const std::size_t cin = in_channels();
    const long pad = static_cast<long>(left_pad());
    for (std::size_t n = 0; n < n_; ++n)
      for (std::size_t t = 0; t < len_; ++t) {
        const double* row = dcols.data() + (n * len_ + t) * kc;
        for (std::size_t tau = 0; tau < kernel(); ++tau) {
          const long src = static_cast<long>(t + tau) - pad;
          if (src < 0 || src >= static_cast<long>(len_)) continue;
          double* dst = dx.data() + (n * len_ + static_cast<std::size_t>(src)) * cin;
          const double* from = row + tau * cin;
          for (std::size_t i = 0; i < cin; ++i) dst[i] += from[i];
        }
      }
    return dx;
  }

  void zero_grad() {
    weight_grad.fill(0.0);
    bias_grad.fill(0.0);
  }

  std::size_t parameter_count() const { return weight.size() + bias.size(); }

  Tensor weight, bias, weight_grad, bias_grad;

 private:
  void im2col(const Tensor& x) {
    const std::size_t cin = in_channels();
    const std::size_t kc = kernel() * cin;
    const long pad = static_cast<long>(left_pad());
    cols_ = Tensor({n_ * len_, kc});
    for (std::size_t n = 0; n < n_; ++n)
      for (std::size_t t = 0; t < len_; ++t) {
        double* row = cols_.data() + (n * len_ + t) * kc;
        for (std::size_t tau = 0; tau < kernel(); ++tau) {
          const long src = static_cast<long>(t + tau) - pad;
          if (src < 0 || src >= static_cast<long>(len_)) continue;
          const double* from = x.data() + (n * len_ + static_cast<std::size_t>(src)) * cin;
          std::copy(from, from + cin, row + tau * cin);
        }
      }
  }

  Tensor cols_;
  std::size_t n_ = 0, len_ = 0;
};

/// Per-channel batch normalization over every axis but the last.
class BatchNorm {
 public:
  BatchNorm() = default;
  explicit BatchNorm(std::size_t channels, double epsilon = 1e-3, double momentum = 0.99)
      : gamma({channels}, 1.0),
        beta({channels}, 0.0),
        running_mean({channels}, 0.0),
        running_var({channels}, 1.0),
        gamma_grad({channels}),
        beta_grad({channels}),
        epsilon_(epsilon),
        momentum_(momentum) {}

  std::size_t channels() const { return gamma.size(); }
  double epsilon() const { return epsilon_; }
  double momentum() const { return momentum_; }

  Tensor forward(const Tensor& x, Mode mode) {
    const std::size_t c = channels();
    require(x.size() % c == 0 && x.shape().back() == c, ErrorCategory::shape,
            "batch_norm: trailing dimension must be " + std::to_string(c));
    rows_ = x.size() / c;
    mode_ = mode;
    inv_std_ = Tensor({c});
    if (mode == Mode::train) {
      auto xm = x.matrix(rows_, c);
      const Eigen::RowVectorXd mean = xm.colwise().mean();
      const Eigen::RowVectorXd var = (xm.rowwise() - mean).array().square().colwise().mean();
      for (std::size_t j = 0; j < c; ++j) {
        inv_std_[j] = 1.0 / std::sqrt(var[j] + epsilon_);
        running_mean[j] = momentum_ * running_mean[j] + (1.0 - momentum_) * mean[j];
        running_var[j] = momentum_ * running_var[j] + (1.0 - momentum_) * var[j];
      }
      xhat_ = Tensor(x.shape());
      auto xh = xhat_.matrix(rows_, c);
      xh = (xm.rowwise() - mean).array().rowwise() * inv_std_.matrix(1, c).row(0).array();
      Tensor out(x.shape());
      out.matrix(rows_, c) = (xh.array().rowwise() * gamma.matrix(1, c).row(0).array()).rowwise() +
                             beta.matrix(1, c).row(0).array();
      return out;
    }
    for (std::size_t j = 0; j < c; ++j) inv_std_[j] = 1.0 / std::sqrt(running_var[j] + epsilon_);
    Tensor out(x.shape());
    const double* in = x.data();
    double* o = out.data();
    for (std::size_t r = 0; r < rows_; ++r)
      for (std::size_t j = 0; j < c; ++j, ++in, ++o)
        *o = gamma[j] * (*in - running_mean[j]) * inv_std_[j] + beta[j];
    return out;
  }

  /// Train mode differentiates through the batch statistics; infer mode is affine.
  Tensor backward(const Tensor& grad_out) {
    const std::size_t c = channels();
    require(grad_out.size() == rows_ * c, ErrorCategory::shape, "batch_norm backward: shape mismatch");
    auto g = grad_out.matrix(rows_, c);
    Tensor dx(grad_out.shape());
    auto dxm = dx.matrix(rows_, c);
    const auto gamma_row = gamma.matrix(1, c).row(0).array();
    const auto inv_row = inv_std_.matrix(1, c).row(0).array();
    if (mode_ == Mode::infer) {
      dxm = g.array().rowwise() * (gamma_row * inv_row);
      return dx;
    }
    auto xh = xhat_.matrix(rows_, c);
    const Eigen::RowVectorXd sum_g = g.colwise().sum();
    const Eigen::RowVectorXd sum_gx = (g.array() * xh.array()).colwise().sum();
    gamma_grad.matrix(1, c) += sum_gx;
    beta_grad.matrix(1, c) += sum_g;
    const double m = static_cast<double>(rows_);
    // dx = gamma * inv_std / m * (m*g - sum(g) - xhat * sum(g*xhat))
    dxm = ((g.array() * m).rowwise() - sum_g.array() - xh.array().rowwise() * sum_gx.array()).rowwise() *
          (gamma_row * inv_row / m);
    return dx;
  }

  void zero_grad() {
    gamma_grad.fill(0.0);
    beta_grad.fill(0.0);
  }

  std::size_t parameter_count() const { return gamma.size() + beta.size(); }

  Tensor gamma, beta, running_mean, running_var, gamma_grad, beta_grad;

 private:
  double epsilon_ = 1e-3;
  double momentum_ = 0.99;
  Mode mode_ = Mode::infer;
  std::size_t rows_ = 0;
  Tensor xhat_, inv_std_;
};

/// Fully connected layer on [N, in] -> [N, out]; W is [in, out].
class Dense {
 public:
  Dense() = default;
  Dense(std::size_t in, std::size_t out) : weight({in, out}), bias({out}), weight_grad({in, out}), bias_grad({out}) {}

  std::size_t in_features() const { return weight.dim(0); }
  std::size_t out_features() const { return weight.dim(1); }

  void init(Rng& rng) {
    glorot_uniform(weight, in_features(), out_features(), rng);
    bias.fill(0.0);
  }

  Tensor forward(const Tensor& x) {
    require(x.rank() == 2 && x.dim(1) == in_features(), ErrorCategory::shape,
            "dense: expected [N, " + std::to_string(in_features()) + "] input, got " + Tensor::describe(x.shape()));
    input_ = x;
    const std::size_t n = x.dim(0);
    Tensor out({n, out_features()});
    auto o = out.matrix(n, out_features());
    o.noalias() = x.matrix(n, in_features()) * weight.matrix(in_features(), out_features());
    o.rowwise() += bias.matrix(1, out_features()).row(0);
    return out;
  }

  Tensor backward(const Tensor& grad_out) {
    const std::size_t n = input_.dim(0);
    require_shape(grad_out, {n, out_features()}, "dense backward");
    auto g = grad_out.matrix(n, out_features());
    weight_grad.matrix(in_features(), out_features()).noalias() +=
        input_.matrix(n, in_features()).transpose() * g;
    bias_grad.matrix(1, out_features()) += g.colwise().sum();
    return backward_input(grad_out);
  }

  /// Input gradient only; parameter gradients are left untouched.
  Tensor backward_input(const Tensor& grad_out) const {
    const std::size_t n = grad_out.dim(0);
    Tensor dx({n, in_features()});
    dx.matrix(n, in_features()).noalias() =
        grad_out.matrix(n, out_features()) * weight.matrix(in_features(), out_features()).transpose();
    return dx;
  }

  void zero_grad() {
    weight_grad.fill(0.0);
    bias_grad.fill(0.0);
  }

  std::size_t parameter_count() const { return weight.size() + bias.size(); }

  Tensor weight, bias, weight_grad, bias_grad;

 private:
  Tensor input_;
};

inline Tensor relu(const Tensor& x) {
  Tensor out = x;
  for (auto& v : out.values()) v = std::max(v, 0.0);
  return out;
}

/// Masks grad by the sign of the forward output (or input; identical for ReLU).
inline Tensor relu_backward(const Tensor& activation, const Tensor& grad_out) {
  require(activation.shape() == grad_out.shape(), ErrorCategory::shape, "relu backward: shape mismatch");
  Tensor dx = grad_out;
  for (std::size_t i = 0; i < dx.size(); ++i)
    if (activation[i] <= 0.0) dx[i] = 0.0;
  return dx;
}

inline Tensor residual_add(const Tensor& a, const Tensor& b) {
  require(a.shape() == b.shape(), ErrorCategory::shape,
          "residual_add: " + Tensor::describe(a.shape()) + " vs " + Tensor::describe(b.shape()));
  Tensor out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += b[i];
  return out;
}

/// Temporal mean: [N, L, C] -> [N, C].
inline Tensor global_average_pool(const Tensor& x) {
  require(x.rank() == 3, ErrorCategory::shape, "gap: expected [N, L, C] input");
  const std::size_t n = x.dim(0), len = x.dim(1), c = x.dim(2);
  Tensor out({n, c});
  for (std::size_t i = 0; i < n; ++i) {
    auto block = x.matrix(n * len, c).middleRows(static_cast<Eigen::Index>(i * len), static_cast<Eigen::Index>(len));
    out.matrix(n, c).row(static_cast<Eigen::Index>(i)) = block.colwise().mean();
  }
  return out;
}

/// Spreads each channel gradient evenly over the L timesteps.
inline Tensor global_average_pool_backward(const Tensor& grad_out, std::size_t length) {
  const std::size_t n = grad_out.dim(0), c = grad_out.dim(1);
  Tensor dx({n, length, c});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t t = 0; t < length; ++t)
      for (std::size_t k = 0; k < c; ++k) dx.at(i, t, k) = grad_out.at(i, k) / static_cast<double>(length);
  return dx;
}

}  // namespace rolecast::nn
