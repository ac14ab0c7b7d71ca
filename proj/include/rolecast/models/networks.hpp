#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "rolecast/nn/layers.hpp"
#include "rolecast/tensor.hpp"

namespace rolecast::models {

using nn::BatchNorm;
using nn::Conv1D;
using nn::Dense;
using nn::Mode;
using nn::ParamSlot;
using nn::StateSlot;

/// conv(8)-BN-ReLU-conv(5)-BN-ReLU-conv(3)-BN plus shortcut, then add and ReLU.
/// The shortcut is conv(1)-BN when the channel count changes, BN alone otherwise.
class ResidualBlock {
 public:
  static constexpr std::array<std::size_t, 3> kKernels = {8, 5, 3};

  ResidualBlock(std::size_t in_ch, std::size_t out_ch)
      : conv1_(kKernels[0], in_ch, out_ch),
        conv2_(kKernels[1], out_ch, out_ch),
        conv3_(kKernels[2], out_ch, out_ch),
        bn1_(out_ch),
        bn2_(out_ch),
        bn3_(out_ch),
        shortcut_bn_(out_ch) {
    if (in_ch != out_ch) shortcut_conv_.emplace(1, in_ch, out_ch);
  }

  void init(Rng& rng) {
    conv1_.init(rng);
    conv2_.init(rng);
    conv3_.init(rng);
    if (shortcut_conv_) shortcut_conv_->init(rng);
  }

  Tensor forward(const Tensor& x, Mode mode) {
    h1_ = nn::relu(bn1_.forward(conv1_.forward(x), mode));
    h2_ = nn::relu(bn2_.forward(conv2_.forward(h1_), mode));
    Tensor h3 = bn3_.forward(conv3_.forward(h2_), mode);
    Tensor s = shortcut_conv_ ? shortcut_bn_.forward(shortcut_conv_->forward(x), mode) : shortcut_bn_.forward(x, mode);
    out_ = nn::relu(nn::residual_add(h3, s));
    return out_;
  }

  Tensor backward(const Tensor& grad_out) {
    const Tensor g = nn::relu_backward(out_, grad_out);
    Tensor gx = conv1_.backward(bn1_.backward(nn::relu_backward(
        h1_, conv2_.backward(bn2_.backward(nn::relu_backward(h2_, conv3_.backward(bn3_.backward(g))))))));
    Tensor gs = shortcut_bn_.backward(g);
    if (shortcut_conv_) gs = shortcut_conv_->backward(gs);
    return nn::residual_add(gx, gs);
  }

  void zero_grad() {
    for (auto* c : convs()) c->zero_grad();
    for (auto* b : norms()) b->zero_grad();
  }

  std::size_t parameter_count() const {
    std::size_t n = conv1_.parameter_count() + conv2_.parameter_count() + conv3_.parameter_count() +
                    bn1_.parameter_count() + bn2_.parameter_count() + bn3_.parameter_count() +
                    shortcut_bn_.parameter_count();
    if (shortcut_conv_) n += shortcut_conv_->parameter_count();
    return n;
  }

  void collect(const std::string& prefix, std::vector<ParamSlot>* params, std::vector<StateSlot>* state) {
    auto conv = [&](const std::string& name, Conv1D& c) {
      if (params) {
        params->push_back({prefix + name + ".weight", &c.weight, &c.weight_grad});
        params->push_back({prefix + name + ".bias", &c.bias, &c.bias_grad});
      }
      if (state) {
        state->push_back({prefix + name + ".weight", &c.weight});
        state->push_back({prefix + name + ".bias", &c.bias});
      }
    };
    auto norm = [&](const std::string& name, BatchNorm& b) {
      if (params) {
        params->push_back({prefix + name + ".gamma", &b.gamma, &b.gamma_grad});
        params->push_back({prefix + name + ".beta", &b.beta, &b.beta_grad});
      }
      if (state) {
        state->push_back({prefix + name + ".gamma", &b.gamma});
        state->push_back({prefix + name + ".beta", &b.beta});
        state->push_back({prefix + name + ".running_mean", &b.running_mean});
        state->push_back({prefix + name + ".running_var", &b.running_var});
      }
    };
    conv("conv1", conv1_);
    norm("bn1", bn1_);
    conv("conv2", conv2_);
    norm("bn2", bn2_);
    conv("conv3", conv3_);
    norm("bn3", bn3_);
    if (shortcut_conv_) conv("shortcut_conv", *shortcut_conv_);
    norm("shortcut_bn", shortcut_bn_);
  }

  Conv1D& conv(std::size_t i) { return *convs()[i]; }
  BatchNorm& norm(std::size_t i) { return *norms()[i]; }
  Conv1D* shortcut_conv() { return shortcut_conv_ ? &*shortcut_conv_ : nullptr; }

 private:
  std::vector<Conv1D*> convs() {
    std::vector<Conv1D*> v{&conv1_, &conv2_, &conv3_};
    if (shortcut_conv_) v.push_back(&*shortcut_conv_);
    return v;
  }
  std::vector<BatchNorm*> norms() { return {&bn1_, &bn2_, &bn3_, &shortcut_bn_}; }

  Conv1D conv1_, conv2_, conv3_;
  BatchNorm bn1_, bn2_, bn3_, shortcut_bn_;
  std::optional<Conv1D> shortcut_conv_;
  Tensor h1_, h2_, out_;
};

/// Temporal ResNet: three residual blocks (64, 128, 128 filters), global average
/// pooling and a dense softmax head. Input [N, L, C_in], output logits [N, classes].
class TemporalResNet {
 public:
  static constexpr std::array<std::size_t, 3> kFilters = {64, 128, 128};

  TemporalResNet(std::size_t in_channels, std::size_t num_classes)
      : in_channels_(in_channels), head_(kFilters[2], num_classes) {
    require(num_classes >= 2, ErrorCategory::config, "need at least two classes");
    std::size_t prev = in_channels;
    for (auto f : kFilters) {
      blocks_.emplace_back(prev, f);
      prev = f;
    }
  }

  void init(Rng& rng) {
    for (auto& b : blocks_) b.init(rng);
    head_.init(rng);
  }

  std::size_t in_channels() const { return in_channels_; }
  std::size_t num_classes() const { return head_.out_features(); }

  Tensor forward(const Tensor& x, Mode mode) {
    require(x.rank() == 3 && x.dim(2) == in_channels_, ErrorCategory::shape,
            "resnet: expected [N, L, " + std::to_string(in_channels_) + "] input, got " + Tensor::describe(x.shape()));
    Tensor h = x;
    for (auto& b : blocks_) h = b.forward(h, mode);
    features_ = h;
    return head_.forward(nn::global_average_pool(h));
  }

  void backward(const Tensor& logit_grad) {
    Tensor g = nn::global_average_pool_backward(head_.backward(logit_grad), features_.dim(1));
    for (auto it = blocks_.rbegin(); it != blocks_.rend(); ++it) g = it->backward(g);
  }

  void zero_grad() {
    for (auto& b : blocks_) b.zero_grad();
    head_.zero_grad();
  }

  std::vector<ParamSlot> parameters() {
    std::vector<ParamSlot> out;
    for (std::size_t i = 0; i < blocks_.size(); ++i)
      blocks_[i].collect("block" + std::to_string(i + 1) + ".", &out, nullptr);
    out.push_back({"head.weight", &head_.weight, &head_.weight_grad});
    out.push_back({"head.bias", &head_.bias, &head_.bias_grad});
    return out;
  }

  std::vector<StateSlot> state() {
    std::vector<StateSlot> out;
    for (std::size_t i = 0; i < blocks_.size(); ++i)
      blocks_[i].collect("block" + std::to_string(i + 1) + ".", nullptr, &out);
    out.push_back({"head.weight", &head_.weight});
    out.push_back({"head.bias", &head_.bias});
    return out;
  }

  std::size_t parameter_count() const {
    std::size_t n = head_.parameter_count();
    for (const auto& b : blocks_) n += b.parameter_count();
    return n;
  }

  /// Learnable parameters of block 1, 2, 3 and the dense head.
  std::array<std::size_t, 4> block_parameter_counts() const {
    return {blocks_[0].parameter_count(), blocks_[1].parameter_count(), blocks_[2].parameter_count(),
            head_.parameter_count()};
  }

  /// Runs one sample in infer mode and returns block 3's output [L, K].
  Tensor feature_map(const Tensor& sample) {
    const Tensor x = sample.rank() == 2 ? sample.reshaped({1, sample.dim(0), sample.dim(1)}) : sample;
    require(x.dim(0) == 1, ErrorCategory::shape, "feature_map expects a single sample");
    logits_ = forward(x, Mode::infer);
    return features_.reshaped({features_.dim(1), features_.dim(2)});
  }

  const Tensor& last_logits() const { return logits_; }

  /// d(logit[class_index]) / d(feature map), for the sample last passed to feature_map.
  Tensor feature_map_gradient(std::size_t class_index) const {
    require(class_index < num_classes(), ErrorCategory::usage, "class index out of range");
    Tensor seed({1, num_classes()});
    seed[class_index] = 1.0;
    const std::size_t len = features_.dim(1);
    return nn::global_average_pool_backward(head_.backward_input(seed), len).reshaped({len, features_.dim(2)});
  }

  /// Head logits for an explicit [L, K] feature map.
  std::vector<double> head_logits(const Tensor& features) {
    Tensor pooled = nn::global_average_pool(features.reshaped({1, features.dim(0), features.dim(1)}));
    Dense copy = head_;
    Tensor out = copy.forward(pooled);
    return {out.values().begin(), out.values().end()};
  }

  ResidualBlock& block(std::size_t i) { return blocks_.at(i); }
  Dense& head() { return head_; }

 private:
  std::size_t in_channels_;
  std::vector<ResidualBlock> blocks_;
  Dense head_;
  Tensor features_, logits_;
};

/// Feed-forward baseline over role histograms: 7-64-64-classes with ReLU.
class HistogramMLP {
 public:
  static constexpr std::size_t kHidden = 64;

  HistogramMLP(std::size_t in_features, std::size_t num_classes)
      : fc1_(in_features, kHidden), fc2_(kHidden, kHidden), fc3_(kHidden, num_classes) {
    require(num_classes >= 2, ErrorCategory::config, "need at least two classes");
  }

  void init(Rng& rng) {
    fc1_.init(rng);
    fc2_.init(rng);
    fc3_.init(rng);
  }

  std::size_t in_features() const { return fc1_.in_features(); }
  std::size_t num_classes() const { return fc3_.out_features(); }

  Tensor forward(const Tensor& x, Mode) {
    h1_ = nn::relu(fc1_.forward(x));
    h2_ = nn::relu(fc2_.forward(h1_));
    return fc3_.forward(h2_);
  }

  void backward(const Tensor& logit_grad) {
    fc1_.backward(nn::relu_backward(h1_, fc2_.backward(nn::relu_backward(h2_, fc3_.backward(logit_grad)))));
  }

  void zero_grad() {
    fc1_.zero_grad();
    fc2_.zero_grad();
    fc3_.zero_grad();
  }

  std::vector<ParamSlot> parameters() {
    return {{"fc1.weight", &fc1_.weight, &fc1_.weight_grad}, {"fc1.bias", &fc1_.bias, &fc1_.bias_grad},
            {"fc2.weight", &fc2_.weight, &fc2_.weight_grad}, {"fc2.bias", &fc2_.bias, &fc2_.bias_grad},
            {"fc3.weight", &fc3_.weight, &fc3_.weight_grad}, {"fc3.bias", &fc3_.bias, &fc3_.bias_grad}};
  }

  std::vector<StateSlot> state() {
    std::vector<StateSlot> out;
    for (auto& p : parameters()) out.push_back({p.name, p.value});
    return out;
  }

  std::size_t parameter_count() const {
    return fc1_.parameter_count() + fc2_.parameter_count() + fc3_.parameter_count();
  }

  Dense& layer(std::size_t i) { return i == 0 ? fc1_ : i == 1 ? fc2_ : fc3_; }

 private:
  Dense fc1_, fc2_, fc3_;
  Tensor h1_, h2_;
};

}  // namespace rolecast::models
