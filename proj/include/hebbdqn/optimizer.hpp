#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hebbdqn/tensor.hpp"

namespace hebbdqn {

enum class OptimizerKind { kSgdMomentum, kAdam, kNadam };

OptimizerKind ParseOptimizerKind(std::string_view text);
std::string_view ToString(OptimizerKind kind);

struct OptimizerSettings {
  OptimizerKind kind = OptimizerKind::kNadam;
  double learning_rate = 1e-3;
  double momentum = 0.0;  // sgd-momentum only
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-7;
};

// First-order optimizer with per-parameter moment buffers keyed by parameter
// name. Frozen parameters are skipped; every other parameter must carry a
// gradient populated by backward. Gradients are released after each step.
class Optimizer {
 public:
  explicit Optimizer(OptimizerSettings settings);

  void Step(std::span<Parameter* const> params);

  void set_learning_rate(double lr) { settings_.learning_rate = lr; }
  double learning_rate() const { return settings_.learning_rate; }
  std::int64_t step_count() const { return step_count_; }
  const OptimizerSettings& settings() const { return settings_; }

 private:
  struct Moments {
    std::vector<double> first;
    std::vector<double> second;
  };

  OptimizerSettings settings_;
  std::int64_t step_count_ = 0;
  std::map<std::string, Moments> moments_;
};

}  // namespace hebbdqn
