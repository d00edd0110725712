#include "hebbdqn/network.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <nlohmann/json.hpp>

#include "hebbdqn/error.hpp"
#include "hebbdqn/ops.hpp"

namespace hebbdqn::agent {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMatrix>;
using MutMap = Eigen::Map<RowMatrix>;

Tensor HeUniform(Shape shape, std::size_t fan_in, Rng& rng) {
  Tensor t(std::move(shape));
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in));
  for (double& v : t.data()) v = rng.Uniform(-limit, limit);
  return t;
}

double MaxAbs(std::span<const double> values) {
  double m = 0.0;
  for (double v : values) m = std::max(m, std::abs(v));
  return m;
}

std::size_t ParseCount(std::string_view text, std::string_view what) {
  std::size_t value = 0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end || value == 0) {
    Fail(ErrorKind::kParse, "invalid " + std::string(what) + " '" + std::string(text) + "'");
  }
  return value;
}

std::vector<std::string_view> SplitList(std::string_view text) {
  std::vector<std::string_view> parts;
  while (!text.empty()) {
    const auto comma = text.find(',');
    std::string_view part = text.substr(0, comma);
    while (!part.empty() && part.front() == ' ') part.remove_prefix(1);
    while (!part.empty() && part.back() == ' ') part.remove_suffix(1);
    parts.push_back(part);
    if (comma == std::string_view::npos) break;
    text.remove_prefix(comma + 1);
  }
  return parts;
}

void Fnv(std::uint64_t& h, const void* data, std::size_t n) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
}

}  // namespace

HeadKind ParseHeadKind(std::string_view text) {
  if (text == "plain") return HeadKind::kPlain;
  if (text == "dueling") return HeadKind::kDueling;
  Fail(ErrorKind::kValidation, "unknown head '" + std::string(text) + "' (expected plain or dueling)");
}

std::string_view ToString(HeadKind head) {
  return head == HeadKind::kPlain ? "plain" : "dueling";
}

std::vector<ConvSpec> ParseConvStack(std::string_view text) {
  std::vector<ConvSpec> stack;
  if (text.empty() || text == "none") return stack;
  for (std::string_view part : SplitList(text)) {
    const auto x = part.find('x');
    const auto s = part.find('s');
    if (x == std::string_view::npos || s == std::string_view::npos || s < x) {
      Fail(ErrorKind::kParse, "conv layer '" + std::string(part) +
                                  "' must look like <filters>x<kernel>s<stride>");
    }
    stack.push_back({ParseCount(part.substr(0, x), "conv filters"),
                     ParseCount(part.substr(x + 1, s - x - 1), "conv kernel"),
                     ParseCount(part.substr(s + 1), "conv stride")});
  }
  return stack;
}

std::string FormatConvStack(const std::vector<ConvSpec>& stack) {
  if (stack.empty()) return "none";
  std::string out;
  for (const auto& c : stack) {
    if (!out.empty()) out += ',';
    out += std::to_string(c.filters) + "x" + std::to_string(c.kernel) + "s" + std::to_string(c.stride);
  }
  return out;
}

std::vector<std::size_t> ParseSizeList(std::string_view text) {
  std::vector<std::size_t> sizes;
  if (text.empty() || text == "none") return sizes;
  for (std::string_view part : SplitList(text)) sizes.push_back(ParseCount(part, "layer size"));
  return sizes;
}

std::string FormatSizeList(const std::vector<std::size_t>& sizes) {
  if (sizes.empty()) return "none";
  std::string out;
  for (std::size_t s : sizes) {
    if (!out.empty()) out += ',';
    out += std::to_string(s);
  }
  return out;
}

std::string SpecToJson(const NetworkSpec& spec) {
  nlohmann::json j;
  j["input_shape"] = spec.input_shape;
  j["n_actions"] = spec.n_actions;
  j["conv"] = FormatConvStack(spec.conv);
  j["pool_after_conv"] = spec.pool_after_conv;
  j["hidden"] = spec.hidden;
  j["head"] = std::string(ToString(spec.head));
  j["dropout"] = spec.dropout;
  j["plastic"] = spec.plastic;
  j["alpha_plastic"] = spec.alpha_plastic;
  j["eta"] = spec.eta;
  j["alpha_per_connection"] = spec.alpha_per_connection;
  j["zero_init_output"] = spec.zero_init_output;
  return j.dump();
}

NetworkSpec SpecFromJson(const std::string& json) {
  NetworkSpec spec;
  try {
    const auto j = nlohmann::json::parse(json);
    spec.input_shape = j.at("input_shape").get<Shape>();
    spec.n_actions = j.at("n_actions").get<std::size_t>();
    spec.conv = ParseConvStack(j.at("conv").get<std::string>());
    spec.pool_after_conv = j.at("pool_after_conv").get<bool>();
    spec.hidden = j.at("hidden").get<std::vector<std::size_t>>();
    spec.head = ParseHeadKind(j.at("head").get<std::string>());
    spec.dropout = j.at("dropout").get<double>();
    spec.plastic = j.at("plastic").get<bool>();
    spec.alpha_plastic = j.at("alpha_plastic").get<double>();
    spec.eta = j.at("eta").get<double>();
    spec.alpha_per_connection = j.at("alpha_per_connection").get<bool>();
    spec.zero_init_output = j.at("zero_init_output").get<bool>();
  } catch (const nlohmann::json::exception& e) {
    Fail(ErrorKind::kParse, std::string("network description: ") + e.what());
  }
  return spec;
}

std::size_t EncoderFeatures(const NetworkSpec& spec) {
  if (spec.input_shape.size() != 3) {
    Fail(ErrorKind::kValidation, "input shape must be [C, H, W], got " + ShapeString(spec.input_shape));
  }
  std::size_t c = spec.input_shape[0];
  std::size_t h = spec.input_shape[1];
  std::size_t w = spec.input_shape[2];
  for (std::size_t i = 0; i < spec.conv.size(); ++i) {
    const ConvSpec& cs = spec.conv[i];
    if (cs.kernel > h || cs.kernel > w) {
      Fail(ErrorKind::kValidation, "conv" + std::to_string(i) + " kernel " + std::to_string(cs.kernel) +
                                       " exceeds its " + std::to_string(h) + "x" + std::to_string(w) + " input");
    }
    c = cs.filters;
    h = (h - cs.kernel) / cs.stride + 1;
    w = (w - cs.kernel) / cs.stride + 1;
    if (spec.pool_after_conv) {
      h /= 2;
      w /= 2;
      if (h == 0 || w == 0) {
        Fail(ErrorKind::kValidation, "pooling after conv" + std::to_string(i) + " leaves an empty map");
      }
    }
  }
  return c * h * w;
}

// -------------------------------------------------------------- PlasticDense

PlasticDense::PlasticDense(std::string name, std::size_t in, std::size_t out, Activation act,
                           bool plastic, double alpha, double eta, bool per_connection_alpha,
                           Rng& init_rng, bool zero_init)
    : in_(in),
      out_(out),
      activation_(act),
      plastic_(plastic),
      alpha_(alpha),
      eta_(eta),
      weight_(name + ".weight", zero_init ? Tensor({in, out}) : HeUniform({in, out}, in, init_rng)),
      bias_(name + ".bias", Tensor({out})) {
  if (in == 0 || out == 0) Fail(ErrorKind::kValidation, name + ": layer sizes must be positive");
  if (plastic_) {
    if (!(eta > 0.0 && eta <= 1.0)) Fail(ErrorKind::kValidation, name + ": eta must lie in (0, 1]");
    hebb_.emplace(name + ".hebb", Tensor({in, out}));
    hebb_->set_frozen(true);
    if (per_connection_alpha) {
      alpha_matrix_.emplace(name + ".alpha", Tensor({in, out}, alpha));
      alpha_matrix_->set_frozen(true);
    }
  }
}

Var PlasticDense::Forward(Tape* tape, const Var& x, std::pair<Tensor, Tensor>* capture) const {
  if (x->value.rank() != 2 || x->value.dim(1) != in_) {
    Fail(ErrorKind::kShape, weight_.name() + ": expected input [N, " + std::to_string(in_) +
                                "], got " + ShapeString(x->value.shape()));
  }
  Var w = weight_.var();
  if (plastic_) {
    Var contribution = alpha_matrix_ ? ops::Mul(tape, alpha_matrix_->var(), hebb_->var())
                                     : ops::Scale(tape, hebb_->var(), alpha_);
    w = ops::Add(tape, w, contribution);
  }
  Var y = ops::AddBias(tape, ops::Matmul(tape, x, w), bias_.var());
  if (activation_ == Activation::kRelu) y = ops::Relu(tape, y);
  if (capture != nullptr) *capture = {x->value, y->value};
  return y;
}

void PlasticDense::ObserveActivity(const Tensor& x_pre, const Tensor& x_post) {
  stats_.max_abs_activity =
      std::max({stats_.max_abs_activity, MaxAbs(x_pre.data()), MaxAbs(x_post.data())});
}

void PlasticDense::HebbianUpdate(const Tensor& x_pre, const Tensor& x_post) {
  if (!plastic_) Fail(ErrorKind::kState, weight_.name() + ": layer is not plastic");
  if (!plastic_phase_) {
    Fail(ErrorKind::kState, hebb_->name() + ": Hebbian update outside the plastic phase");
  }
  if (x_pre.rank() != 2 || x_post.rank() != 2 || x_pre.dim(1) != in_ || x_post.dim(1) != out_ ||
      x_pre.dim(0) != x_post.dim(0) || x_pre.dim(0) == 0) {
    Fail(ErrorKind::kShape, hebb_->name() + ": activity shapes " + ShapeString(x_pre.shape()) +
                                " and " + ShapeString(x_post.shape()) + " do not match [N, " +
                                std::to_string(in_) + "] and [N, " + std::to_string(out_) + "]");
  }
  ObserveActivity(x_pre, x_post);
  const auto n = static_cast<Eigen::Index>(x_pre.dim(0));
  ConstMap pre(x_pre.data().data(), n, static_cast<Eigen::Index>(in_));
  ConstMap post(x_post.data().data(), n, static_cast<Eigen::Index>(out_));
  MutMap hebb(hebb_->value().data().data(), static_cast<Eigen::Index>(in_),
              static_cast<Eigen::Index>(out_));
  const RowMatrix mean_outer = (pre.transpose() * post) / static_cast<double>(n);
  hebb = eta_ * mean_outer + (1.0 - eta_) * hebb;
  stats_.max_abs_trace = MaxAbs(hebb_->value().data());
}

void PlasticDense::BeginPlasticPhase() {
  if (!plastic_) Fail(ErrorKind::kState, weight_.name() + ": layer is not plastic");
  weight_.set_frozen(true);
  bias_.set_frozen(true);
  std::fill(hebb_->value().data().begin(), hebb_->value().data().end(), 0.0);
  hebb_->set_frozen(false);
  if (alpha_matrix_) alpha_matrix_->set_frozen(false);
  plastic_phase_ = true;
  stats_ = {};
}

void PlasticDense::AppendParameters(std::vector<Parameter*>& out) {
  out.push_back(&weight_);
  out.push_back(&bias_);
  if (hebb_) out.push_back(&*hebb_);
  if (alpha_matrix_) out.push_back(&*alpha_matrix_);
}

// ------------------------------------------------------------------ QNetwork

QNetwork::QNetwork(NetworkSpec spec, std::uint64_t init_seed) : spec_(std::move(spec)) {
  if (spec_.n_actions < 1) Fail(ErrorKind::kValidation, "n_actions must be positive");
  if (!(spec_.dropout >= 0.0 && spec_.dropout < 1.0)) {
    Fail(ErrorKind::kValidation, "dropout must lie in [0, 1)");
  }
  std::size_t features = EncoderFeatures(spec_);
  Rng rng(init_seed);
  std::size_t channels = spec_.input_shape[0];
  for (std::size_t i = 0; i < spec_.conv.size(); ++i) {
    const ConvSpec& cs = spec_.conv[i];
    const std::string name = "conv" + std::to_string(i);
    const std::size_t fan_in = channels * cs.kernel * cs.kernel;
    conv_.push_back({Parameter(name + ".weight", HeUniform({cs.filters, channels, cs.kernel, cs.kernel}, fan_in, rng)),
                     Parameter(name + ".bias", Tensor({cs.filters})), cs.stride});
    channels = cs.filters;
  }
  const auto make = [&](std::string name, std::size_t in, std::size_t out, Activation act, bool output) {
    return PlasticDense(std::move(name), in, out, act, spec_.plastic, spec_.alpha_plastic, spec_.eta,
                        spec_.alpha_per_connection, rng, output && spec_.zero_init_output);
  };
  hidden_.reserve(spec_.hidden.size());
  for (std::size_t i = 0; i < spec_.hidden.size(); ++i) {
    hidden_.push_back(make("fc" + std::to_string(i), features, spec_.hidden[i], Activation::kRelu, false));
    features = spec_.hidden[i];
  }
  if (spec_.head == HeadKind::kPlain) {
    output_.emplace(make("out", features, spec_.n_actions, Activation::kIdentity, true));
  } else {
    value_.emplace(make("value", features, 1, Activation::kIdentity, true));
    advantage_.emplace(make("adv", features, spec_.n_actions, Activation::kIdentity, true));
  }
}

Var QNetwork::Forward(Tape* tape, const Tensor& states, const ForwardOptions& options) const {
  Tensor batch = states;
  const Shape& in = spec_.input_shape;
  if (states.rank() == 3) batch = states.Reshaped({1, states.dim(0), states.dim(1), states.dim(2)});
  if (batch.rank() != 4 || batch.dim(1) != in[0] || batch.dim(2) != in[1] || batch.dim(3) != in[2]) {
    Fail(ErrorKind::kShape, "network expects input [N, " + std::to_string(in[0]) + ", " +
                                std::to_string(in[1]) + ", " + std::to_string(in[2]) + "], got " +
                                ShapeString(states.shape()));
  }
  if (options.training && spec_.dropout > 0.0 && options.dropout_rng == nullptr) {
    Fail(ErrorKind::kState, "training forward with dropout needs an rng");
  }
  if (options.capture != nullptr) options.capture->layers.clear();

  Var x = Constant(std::move(batch));
  for (const ConvLayer& layer : conv_) {
    x = ops::Relu(tape, ops::Conv2d(tape, x, layer.kernel.var(), layer.bias.var(), layer.stride));
    if (spec_.pool_after_conv) x = ops::MaxPool2x2(tape, x);
  }
  x = ops::Flatten(tape, x);

  const auto capture_slot = [&]() -> std::pair<Tensor, Tensor>* {
    if (options.capture == nullptr || !spec_.plastic) return nullptr;
    return &options.capture->layers.emplace_back();
  };
  for (const PlasticDense& layer : hidden_) {
    x = layer.Forward(tape, x, capture_slot());
    if (options.training && spec_.dropout > 0.0) {
      x = ops::Dropout(tape, x, spec_.dropout, true, *options.dropout_rng);
    }
  }
  if (output_) return output_->Forward(tape, x, capture_slot());
  Var v = value_->Forward(tape, x, capture_slot());
  Var a = advantage_->Forward(tape, x, capture_slot());
  return ops::DuelingCombine(tape, v, a);
}

Tensor QNetwork::Predict(const Tensor& states) const { return Forward(nullptr, states)->value; }

QNetwork::DuelingParts QNetwork::ForwardDuelingParts(const Tensor& states) const {
  if (spec_.head != HeadKind::kDueling) Fail(ErrorKind::kState, "network has no dueling head");
  DuelingParts parts;
  parts.q = Forward(nullptr, states)->value;
  // Re-run the trunk to expose the two streams.
  Tensor batch = states.rank() == 3 ? states.Reshaped({1, states.dim(0), states.dim(1), states.dim(2)}) : states;
  Var x = Constant(std::move(batch));
  for (const ConvLayer& layer : conv_) {
    x = ops::Relu(nullptr, ops::Conv2d(nullptr, x, layer.kernel.var(), layer.bias.var(), layer.stride));
    if (spec_.pool_after_conv) x = ops::MaxPool2x2(nullptr, x);
  }
  x = ops::Flatten(nullptr, x);
  for (const PlasticDense& layer : hidden_) x = layer.Forward(nullptr, x, nullptr);
  parts.value = value_->Forward(nullptr, x, nullptr)->value;
  parts.raw_advantage = advantage_->Forward(nullptr, x, nullptr)->value;
  parts.advantage = parts.raw_advantage;
  const std::size_t rows = parts.advantage.dim(0);
  const std::size_t cols = parts.advantage.dim(1);
  for (std::size_t r = 0; r < rows; ++r) {
    double m = parts.raw_advantage.at(r, 0);
    for (std::size_t c = 1; c < cols; ++c) m = std::max(m, parts.raw_advantage.at(r, c));
    for (std::size_t c = 0; c < cols; ++c) parts.advantage.at(r, c) -= m;
  }
  return parts;
}

std::vector<PlasticDense*> QNetwork::DenseLayers() {
  std::vector<PlasticDense*> layers;
  for (auto& l : hidden_) layers.push_back(&l);
  if (output_) layers.push_back(&*output_);
  if (value_) layers.push_back(&*value_);
  if (advantage_) layers.push_back(&*advantage_);
  return layers;
}

std::vector<const PlasticDense*> QNetwork::DenseLayers() const {
  std::vector<const PlasticDense*> layers;
  for (const auto* l : const_cast<QNetwork*>(this)->DenseLayers()) layers.push_back(l);
  return layers;
}

std::vector<PlasticDense*> QNetwork::PlasticLayers() {
  if (!spec_.plastic) return {};
  return DenseLayers();
}

std::vector<const PlasticDense*> QNetwork::PlasticLayers() const {
  if (!spec_.plastic) return {};
  return DenseLayers();
}

std::vector<Parameter*> QNetwork::Parameters() {
  std::vector<Parameter*> params;
  for (auto& c : conv_) {
    params.push_back(&c.kernel);
    params.push_back(&c.bias);
  }
  for (auto* l : DenseLayers()) l->AppendParameters(params);
  return params;
}

std::vector<const Parameter*> QNetwork::Parameters() const {
  std::vector<const Parameter*> params;
  for (const auto* p : const_cast<QNetwork*>(this)->Parameters()) params.push_back(p);
  return params;
}

Parameter* QNetwork::FindParameter(std::string_view name) {
  for (auto* p : Parameters()) {
    if (p->name() == name) return p;
  }
  return nullptr;
}

void QNetwork::BeginPlasticPhase() {
  if (!spec_.plastic) Fail(ErrorKind::kState, "network has no plastic layers");
  for (auto& c : conv_) {
    c.kernel.set_frozen(true);
    c.bias.set_frozen(true);
  }
  for (auto* l : DenseLayers()) l->BeginPlasticPhase();
  plastic_phase_ = true;
}

void QNetwork::HebbianUpdate(const ActivationCapture& capture) {
  auto layers = PlasticLayers();
  if (layers.empty()) Fail(ErrorKind::kState, "network has no plastic layers");
  if (!plastic_phase_) Fail(ErrorKind::kState, "Hebbian update outside the plastic phase");
  if (capture.layers.size() != layers.size()) {
    Fail(ErrorKind::kState, "activation capture holds " + std::to_string(capture.layers.size()) +
                                " layers, network has " + std::to_string(layers.size()));
  }
  for (std::size_t i = 0; i < layers.size(); ++i) {
    layers[i]->HebbianUpdate(capture.layers[i].first, capture.layers[i].second);
  }
}

std::uint64_t QNetwork::FixedParameterChecksum() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const Parameter* p : Parameters()) {
    const std::string& n = p->name();
    if (n.ends_with(".hebb") || n.ends_with(".alpha")) continue;
    Fnv(h, n.data(), n.size());
    for (double v : p->value().data()) {
      const auto bits = std::bit_cast<std::uint64_t>(v);
      Fnv(h, &bits, sizeof(bits));
    }
  }
  return h;
}

void QNetwork::CopyParametersFrom(const QNetwork& other) {
  auto dst = Parameters();
  auto src = other.Parameters();
  bool match = dst.size() == src.size();
  for (std::size_t i = 0; match && i < dst.size(); ++i) {
    match = dst[i]->name() == src[i]->name() && dst[i]->value().shape() == src[i]->value().shape();
  }
  if (!match) Fail(ErrorKind::kValidation, "cannot copy parameters between different architectures");
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i]->value() = src[i]->value();
}

Checkpoint QNetwork::ToCheckpoint() const {
  Checkpoint ckpt;
  nlohmann::json meta;
  meta["network"] = nlohmann::json::parse(SpecToJson(spec_));
  meta["plastic_phase"] = plastic_phase_;
  ckpt.metadata = meta.dump();
  for (const Parameter* p : Parameters()) ckpt.tensors.push_back({p->name(), p->value()});
  return ckpt;
}

QNetwork QNetwork::FromCheckpoint(const Checkpoint& checkpoint) {
  NetworkSpec spec;
  bool plastic_phase = false;
  try {
    const auto meta = nlohmann::json::parse(checkpoint.metadata);
    spec = SpecFromJson(meta.at("network").dump());
    plastic_phase = meta.value("plastic_phase", false);
  } catch (const nlohmann::json::exception& e) {
    Fail(ErrorKind::kParse, std::string("checkpoint metadata: ") + e.what());
  }
  QNetwork net(spec, 0);
  if (plastic_phase) net.BeginPlasticPhase();
  for (Parameter* p : net.Parameters()) {
    const Tensor* t = checkpoint.Find(p->name());
    if (t == nullptr) Fail(ErrorKind::kParse, "checkpoint lacks parameter " + p->name());
    if (t->shape() != p->value().shape()) {
      Fail(ErrorKind::kShape, "checkpoint parameter " + p->name() + " has shape " +
                                  ShapeString(t->shape()) + ", expected " + ShapeString(p->value().shape()));
    }
    p->value() = *t;
  }
  if (checkpoint.tensors.size() != net.Parameters().size()) {
    Fail(ErrorKind::kParse, "checkpoint holds parameters this network does not have");
  }
  return net;
}

Tensor StackStates(const std::vector<Tensor>& states) {
  if (states.empty()) Fail(ErrorKind::kShape, "cannot stack an empty batch");
  const Shape& s = states.front().shape();
  Shape out_shape{states.size()};
  out_shape.insert(out_shape.end(), s.begin(), s.end());
  Tensor out(out_shape);
  const std::size_t n = states.front().size();
  for (std::size_t i = 0; i < states.size(); ++i) {
    if (states[i].shape() != s) {
      Fail(ErrorKind::kShape, "state " + std::to_string(i) + " has shape " +
                                  ShapeString(states[i].shape()) + ", expected " + ShapeString(s));
    }
    std::copy(states[i].data().begin(), states[i].data().end(),
              out.data().begin() + static_cast<std::ptrdiff_t>(i * n));
  }
  return out;
}

}  // namespace hebbdqn::agent
