#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hebbdqn/checkpoint.hpp"
#include "hebbdqn/rng.hpp"
#include "hebbdqn/tensor.hpp"

namespace hebbdqn::agent {

enum class HeadKind { kPlain, kDueling };
enum class Activation { kRelu, kIdentity };

HeadKind ParseHeadKind(std::string_view text);
std::string_view ToString(HeadKind head);

struct ConvSpec {
  std::size_t filters = 32;
  std::size_t kernel = 8;
  std::size_t stride = 4;

  bool operator==(const ConvSpec&) const = default;
};

// "32x8s4,64x4s2,64x3s1" <-> conv stack.
std::vector<ConvSpec> ParseConvStack(std::string_view text);
std::string FormatConvStack(const std::vector<ConvSpec>& stack);
std::vector<std::size_t> ParseSizeList(std::string_view text);
std::string FormatSizeList(const std::vector<std::size_t>& sizes);

struct NetworkSpec {
  Shape input_shape = {4, 84, 84};  // [C, H, W]
  std::size_t n_actions = 2;
  std::vector<ConvSpec> conv = {{32, 8, 4}, {64, 4, 2}, {64, 3, 1}};
  bool pool_after_conv = false;
  std::vector<std::size_t> hidden = {512};
  HeadKind head = HeadKind::kDueling;
  double dropout = 0.0;
  bool plastic = false;
  double alpha_plastic = 0.2;
  double eta = 1e-3;
  bool alpha_per_connection = false;
  bool zero_init_output = false;

  bool operator==(const NetworkSpec&) const = default;
};

std::string SpecToJson(const NetworkSpec& spec);
NetworkSpec SpecFromJson(const std::string& json);

// Shape after the conv encoder and flatten: [features].
std::size_t EncoderFeatures(const NetworkSpec& spec);

// Dense layer y = act(x (w + alpha * hebb) + b). Without plasticity it is an
// ordinary dense layer. The trace stays zero and untouched until the plastic
// phase begins; from then on w and b are frozen and only the trace (and a
// per-connection alpha, when enabled) learns.
class PlasticDense {
 public:
  struct TraceStats {
    double max_abs_activity = 0.0;  // largest |x_pre| or |x_post| seen by updates
    double max_abs_trace = 0.0;
  };

  PlasticDense(std::string name, std::size_t in, std::size_t out, Activation act,
               bool plastic, double alpha, double eta, bool per_connection_alpha,
               Rng& init_rng, bool zero_init);

  // x: [N, in]. When `capture` is set, the input and activated output values
  // are copied there for a later Hebbian update.
  Var Forward(Tape* tape, const Var& x, std::pair<Tensor, Tensor>* capture) const;

  // hebb <- eta * mean_b(outer(x_pre[b], x_post[b])) + (1 - eta) * hebb.
  // Throws Error(kState) outside the plastic phase.
  void HebbianUpdate(const Tensor& x_pre, const Tensor& x_post);

  void BeginPlasticPhase();
  bool plastic() const { return plastic_; }
  bool plastic_phase() const { return plastic_phase_; }
  double alpha() const { return alpha_; }
  double eta() const { return eta_; }
  Activation activation() const { return activation_; }
  std::size_t in_features() const { return in_; }
  std::size_t out_features() const { return out_; }

  Parameter& weight() { return weight_; }
  Parameter& bias() { return bias_; }
  Parameter* hebb() { return hebb_ ? &*hebb_ : nullptr; }
  const Parameter* hebb() const { return hebb_ ? &*hebb_ : nullptr; }
  Parameter* alpha_matrix() { return alpha_matrix_ ? &*alpha_matrix_ : nullptr; }
  const TraceStats& trace_stats() const { return stats_; }
  // Records |x| bounds from a forward pass without changing the trace.
  void ObserveActivity(const Tensor& x_pre, const Tensor& x_post);

  void AppendParameters(std::vector<Parameter*>& out);

 private:
  std::size_t in_;
  std::size_t out_;
  Activation activation_;
  bool plastic_;
  double alpha_;
  double eta_;
  Parameter weight_;
  Parameter bias_;
  std::optional<Parameter> hebb_;
  std::optional<Parameter> alpha_matrix_;
  bool plastic_phase_ = false;
  TraceStats stats_;
};

struct ConvLayer {
  Parameter kernel;
  Parameter bias;
  std::size_t stride;
};

// Activations of every plastic layer from one forward pass, in layer order.
struct ActivationCapture {
  std::vector<std::pair<Tensor, Tensor>> layers;
};

struct ForwardOptions {
  bool training = false;   // enables dropout
  Rng* dropout_rng = nullptr;
  ActivationCapture* capture = nullptr;
};

// Q-network: conv encoder (relu after each conv, optional 2x2 max pool),
// flatten, relu hidden dense layers, then either a plain linear head or a
// dueling head Q = V + A - max A.
class QNetwork {
 public:
  QNetwork(NetworkSpec spec, std::uint64_t init_seed);

  const NetworkSpec& spec() const { return spec_; }
  std::size_t n_actions() const { return spec_.n_actions; }

  // states: [N, C, H, W] (or [C, H, W] for a single state). Returns [N, A].
  Var Forward(Tape* tape, const Tensor& states, const ForwardOptions& options = {}) const;
  Tensor Predict(const Tensor& states) const;

  struct DuelingParts {
    Tensor value;          // [N, 1]
    Tensor raw_advantage;  // [N, A]
    Tensor advantage;      // [N, A], raw minus row max
    Tensor q;              // [N, A]
  };
  // Dueling heads only.
  DuelingParts ForwardDuelingParts(const Tensor& states) const;

  std::vector<Parameter*> Parameters();
  std::vector<const Parameter*> Parameters() const;
  Parameter* FindParameter(std::string_view name);

  std::vector<PlasticDense*> PlasticLayers();
  std::vector<const PlasticDense*> PlasticLayers() const;

  // Freezes conv/dense weights and biases, zeroes and unfreezes traces.
  void BeginPlasticPhase();
  bool plastic_phase() const { return plastic_phase_; }
  void HebbianUpdate(const ActivationCapture& capture);

  // FNV-1a over names and raw bytes of every non-trace parameter.
  std::uint64_t FixedParameterChecksum() const;

  // Bit-exact copy of all parameter values (traces included). Throws
  // Error(kValidation) on architecture mismatch.
  void CopyParametersFrom(const QNetwork& other);

  Checkpoint ToCheckpoint() const;
  static QNetwork FromCheckpoint(const Checkpoint& checkpoint);

 private:
  std::vector<PlasticDense*> DenseLayers();
  std::vector<const PlasticDense*> DenseLayers() const;

  NetworkSpec spec_;
  std::vector<ConvLayer> conv_;
  std::vector<PlasticDense> hidden_;
  std::optional<PlasticDense> output_;     // plain head
  std::optional<PlasticDense> value_;      // dueling head
  std::optional<PlasticDense> advantage_;  // dueling head
  bool plastic_phase_ = false;
};

// Stacks state tensors of identical shape [C, H, W] into [N, C, H, W].
Tensor StackStates(const std::vector<Tensor>& states);

}  // namespace hebbdqn::agent
