#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "rolecast/data_model.hpp"
#include "rolecast/losses.hpp"
#include "rolecast/models/networks.hpp"
#include "rolecast/random.hpp"

namespace rolecast::models {

enum class FeatureKind { temporal_b2, histogram };
enum class Encoding { raw_integer, one_hot_roles };

inline std::string_view to_string(FeatureKind f) { return f == FeatureKind::temporal_b2 ? "temporal_b2" : "histogram"; }
inline std::string_view to_string(Encoding e) { return e == Encoding::raw_integer ? "raw_integer" : "one_hot_roles"; }

inline FeatureKind feature_kind_from(std::string_view s) {
  if (s == "temporal_b2") return FeatureKind::temporal_b2;
  if (s == "histogram") return FeatureKind::histogram;
  fail(ErrorCategory::config, "unknown feature kind '" + std::string(s) + "'");
}

inline Encoding encoding_from(std::string_view s) {
  if (s == "raw_integer") return Encoding::raw_integer;
  if (s == "one_hot_roles") return Encoding::one_hot_roles;
  fail(ErrorCategory::config, "unknown encoding '" + std::string(s) + "'");
}

struct ModelSpec {
  FeatureKind feature = FeatureKind::temporal_b2;
  Encoding encoding = Encoding::raw_integer;
  std::size_t num_classes = kNumClasses;

  /// Per-sample input shape: (24, 5), (24, 35) or (7).
  Tensor::Shape input_shape() const {
    if (feature == FeatureKind::histogram) return {kNumRoles};
    return {kMaxMinutes, encoding == Encoding::raw_integer ? kMaxStudents : kMaxStudents * kNumRoles};
  }

  std::string_view classifier_name() const { return feature == FeatureKind::temporal_b2 ? "ResNet" : "MLP"; }
  std::string_view feature_name() const { return feature == FeatureKind::temporal_b2 ? "B2 Temporal" : "B2 Histogram"; }

  bool operator==(const ModelSpec&) const = default;
};

/// Writes one sample's features into `out` (size = product of spec.input_shape()).
inline void encode_features(const TaskSample& s, const ModelSpec& spec, std::span<double> out) {
  std::fill(out.begin(), out.end(), 0.0);
  if (spec.feature == FeatureKind::histogram) {
    for (std::size_t r = 0; r < kNumRoles; ++r) out[r] = s.histogram[r];
    return;
  }
  for (std::size_t m = 0; m < kMaxMinutes; ++m)
    for (std::size_t st = 0; st < kMaxStudents; ++st) {
      const int v = value_of(s.matrix.at(m, st));
      if (spec.encoding == Encoding::raw_integer) {
        out[m * kMaxStudents + st] = v;
      } else if (v > 0) {
        out[m * kMaxStudents * kNumRoles + st * kNumRoles + static_cast<std::size_t>(v - 1)] = 1.0;
      }
    }
}

/// Stacks samples into a batch tensor [N, ...input_shape].
inline Tensor encode_batch(std::span<const TaskSample* const> samples, const ModelSpec& spec) {
  Tensor::Shape shape = spec.input_shape();
  const std::size_t per = Tensor::product(shape);
  shape.insert(shape.begin(), samples.size());
  Tensor batch(shape);
  for (std::size_t i = 0; i < samples.size(); ++i)
    encode_features(*samples[i], spec, std::span<double>(batch.data() + i * per, per));
  return batch;
}

inline Tensor encode_sample(const TaskSample& s, const ModelSpec& spec) {
  const TaskSample* ptr = &s;
  return encode_batch(std::span<const TaskSample* const>(&ptr, 1), spec);
}

/// A built network together with the spec that determines its input encoding.
class Model {
 public:
  using Network = std::variant<TemporalResNet, HistogramMLP>;

  Model(ModelSpec spec, std::uint64_t seed)
      : spec_(spec), seed_(seed), net_(make_network(spec)) {
    Rng rng(seed);
    std::visit([&](auto& n) { n.init(rng); }, net_);
  }

  const ModelSpec& spec() const { return spec_; }
  std::uint64_t seed() const { return seed_; }

  Tensor forward(const Tensor& batch, nn::Mode mode) {
    check_input(batch, true);
    return std::visit([&](auto& n) { return n.forward(batch, mode); }, net_);
  }
  void backward(const Tensor& logit_grad) {
    std::visit([&](auto& n) { n.backward(logit_grad); }, net_);
  }
  void zero_grad() {
    std::visit([](auto& n) { n.zero_grad(); }, net_);
  }
  std::vector<nn::ParamSlot> parameters() {
    return std::visit([](auto& n) { return n.parameters(); }, net_);
  }
  std::vector<nn::StateSlot> state() {
    return std::visit([](auto& n) { return n.state(); }, net_);
  }
  std::size_t parameter_count() const {
    return std::visit([](const auto& n) { return n.parameter_count(); }, net_);
  }

  TemporalResNet* resnet() { return std::get_if<TemporalResNet>(&net_); }
  HistogramMLP* mlp() { return std::get_if<HistogramMLP>(&net_); }

  /// Checks a batch [N, ...] or single sample against the spec's input shape.
  void check_input(const Tensor& x, bool batched) const {
    const auto expected = spec_.input_shape();
    Tensor::Shape got = x.shape();
    if (batched && !got.empty()) got.erase(got.begin());
    require(got == expected, ErrorCategory::shape,
            std::string("input does not match ") + std::string(to_string(spec_.feature)) + " model: expected " +
                Tensor::describe(expected) + ", got " + Tensor::describe(got));
  }

  /// Copies all persisted tensors from another model of identical spec.
  void load_state_from(Model& other) {
    auto dst = state();
    auto src = other.state();
    require(dst.size() == src.size(), ErrorCategory::shape, "state layout mismatch");
    for (std::size_t i = 0; i < dst.size(); ++i) *dst[i].value = *src[i].value;
  }

 private:
  static Network make_network(const ModelSpec& spec) {
    const auto shape = spec.input_shape();
    if (spec.feature == FeatureKind::temporal_b2) return TemporalResNet(shape[1], spec.num_classes);
    return HistogramMLP(shape[0], spec.num_classes);
  }

  ModelSpec spec_;
  std::uint64_t seed_;
  Network net_;
};

inline Model build_resnet_b2(std::size_t num_classes = kNumClasses, Encoding encoding = Encoding::raw_integer,
                             std::uint64_t seed = 0) {
  return Model(ModelSpec{FeatureKind::temporal_b2, encoding, num_classes}, seed);
}

inline Model build_mlp_hist(std::size_t num_classes = kNumClasses, std::uint64_t seed = 0) {
  return Model(ModelSpec{FeatureKind::histogram, Encoding::raw_integer, num_classes}, seed);
}

inline std::size_t count_parameters(const Model& m) { return m.parameter_count(); }

/// Infer-mode class probabilities for pre-encoded features (one sample).
inline ProbVector predict_proba(Model& model, const Tensor& features) {
  model.check_input(features, false);
  Tensor::Shape shape = features.shape();
  shape.insert(shape.begin(), 1);
  Tensor logits = model.forward(features.reshaped(shape), nn::Mode::infer);
  return softmax(logits.values());
}

inline ProbVector predict_proba(Model& model, const TaskSample& sample) {
  Tensor x = encode_sample(sample, model.spec());
  Tensor::Shape shape = x.shape();
  shape.erase(shape.begin());
  return predict_proba(model, x.reshaped(shape));
}

// Checkpoint layout (little-endian): magic "RCKPT001", u32 metadata length,
// metadata JSON, u32 tensor count, then per tensor: u32 name length, name,
// u32 rank, u64 dims[rank], f64 data[].

inline constexpr char kCheckpointMagic[8] = {'R', 'C', 'K', 'P', 'T', '0', '0', '1'};
inline constexpr int kCheckpointVersion = 1;

inline nlohmann::json spec_to_json(const ModelSpec& s) {
  return {{"feature_kind", to_string(s.feature)},
          {"encoding", to_string(s.encoding)},
          {"num_classes", s.num_classes},
          {"architecture", s.feature == FeatureKind::temporal_b2 ? "resnet" : "mlp"}};
}

inline ModelSpec spec_from_json(const nlohmann::json& j) {
  return ModelSpec{feature_kind_from(j.at("feature_kind").get<std::string>()),
                   encoding_from(j.at("encoding").get<std::string>()), j.at("num_classes").get<std::size_t>()};
}

namespace detail {

template <class T>
void put(std::string& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

template <class T>
T take(std::string_view& in) {
  require(in.size() >= sizeof(T), ErrorCategory::parse, "checkpoint truncated");
  T v;
  std::memcpy(&v, in.data(), sizeof(T));
  in.remove_prefix(sizeof(T));
  return v;
}

}  // namespace detail

inline std::string serialize_checkpoint(Model& model, const nlohmann::json& extra = nlohmann::json::object()) {
  nlohmann::json meta = {{"format_version", kCheckpointVersion},
                         {"spec", spec_to_json(model.spec())},
                         {"seed", model.seed()},
                         {"parameter_count", model.parameter_count()}};
  if (!extra.empty()) meta["extra"] = extra;
  const std::string meta_text = meta.dump();
  std::string out(kCheckpointMagic, sizeof kCheckpointMagic);
  detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(meta_text.size()));
  out += meta_text;
  auto state = model.state();
  detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(state.size()));
  for (const auto& slot : state) {
    detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(slot.name.size()));
    out += slot.name;
    detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(slot.value->rank()));
    for (auto d : slot.value->shape()) detail::put<std::uint64_t>(out, d);
    out.append(reinterpret_cast<const char*>(slot.value->data()), slot.value->size() * sizeof(double));
  }
  return out;
}

struct LoadedCheckpoint {
  Model model;
  nlohmann::json metadata;
};

inline LoadedCheckpoint deserialize_checkpoint(std::string_view in) {
  require(in.size() >= sizeof kCheckpointMagic && in.substr(0, 8) == std::string_view(kCheckpointMagic, 8),
          ErrorCategory::parse, "not a rolecast checkpoint (bad magic)");
  in.remove_prefix(8);
  const auto meta_len = detail::take<std::uint32_t>(in);
  require(in.size() >= meta_len, ErrorCategory::parse, "checkpoint truncated");
  nlohmann::json meta;
  ModelSpec spec;
  std::uint64_t seed = 0;
  try {
    meta = nlohmann::json::parse(in.substr(0, meta_len));
    require(meta.at("format_version").get<int>() == kCheckpointVersion, ErrorCategory::parse,
            "unsupported checkpoint version");
    spec = spec_from_json(meta.at("spec"));
    seed = meta.at("seed").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCategory::parse, std::string("checkpoint metadata is malformed: ") + e.what());
  }
  in.remove_prefix(meta_len);
  Model model(spec, seed);
  auto state = model.state();
  const auto count = detail::take<std::uint32_t>(in);
  require(count == state.size(), ErrorCategory::parse, "checkpoint tensor count does not match architecture");
  for (auto& slot : state) {
    const auto name_len = detail::take<std::uint32_t>(in);
    require(in.size() >= name_len, ErrorCategory::parse, "checkpoint truncated");
    require(in.substr(0, name_len) == slot.name, ErrorCategory::parse, "checkpoint tensor order mismatch at " + slot.name);
    in.remove_prefix(name_len);
    const auto rank = detail::take<std::uint32_t>(in);
    Tensor::Shape shape(rank);
    for (auto& d : shape) d = detail::take<std::uint64_t>(in);
    require(shape == slot.value->shape(), ErrorCategory::parse, "checkpoint shape mismatch for " + slot.name);
    const std::size_t bytes = slot.value->size() * sizeof(double);
    require(in.size() >= bytes, ErrorCategory::parse, "checkpoint truncated");
    std::memcpy(slot.value->data(), in.data(), bytes);
    in.remove_prefix(bytes);
  }
  require(in.empty(), ErrorCategory::parse, "trailing bytes after checkpoint");
  return {std::move(model), std::move(meta)};
}

inline void save_checkpoint(Model& model, const std::string& path,
                            const nlohmann::json& extra = nlohmann::json::object()) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), ErrorCategory::io, "cannot write checkpoint " + path);
  const std::string bytes = serialize_checkpoint(model, extra);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  require(out.good(), ErrorCategory::io, "failed writing checkpoint " + path);
}

inline LoadedCheckpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorCategory::io, "cannot open checkpoint " + path);
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize_checkpoint(bytes);
}

}  // namespace rolecast::models
