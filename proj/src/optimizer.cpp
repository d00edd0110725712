#include "hebbdqn/optimizer.hpp"

#include <cmath>

#include "hebbdqn/error.hpp"

namespace hebbdqn {

OptimizerKind ParseOptimizerKind(std::string_view text) {
  if (text == "sgd-momentum") return OptimizerKind::kSgdMomentum;
  if (text == "adam") return OptimizerKind::kAdam;
  if (text == "adam-nesterov" || text == "nadam") return OptimizerKind::kNadam;
  Fail(ErrorKind::kValidation, "unknown optimizer '" + std::string(text) +
                                   "' (sgd-momentum|adam|adam-nesterov)");
}

std::string_view ToString(OptimizerKind kind) {
  switch (kind) {
    case OptimizerKind::kSgdMomentum: return "sgd-momentum";
    case OptimizerKind::kAdam: return "adam";
    case OptimizerKind::kNadam: return "adam-nesterov";
  }
  return "unknown";
}

Optimizer::Optimizer(OptimizerSettings settings) : settings_(settings) {
  if (!(settings_.learning_rate > 0.0)) {
    Fail(ErrorKind::kValidation, "learning rate must be positive");
  }
  if (!(settings_.beta1 >= 0.0 && settings_.beta1 < 1.0) ||
      !(settings_.beta2 >= 0.0 && settings_.beta2 < 1.0) ||
      !(settings_.momentum >= 0.0 && settings_.momentum < 1.0)) {
    Fail(ErrorKind::kValidation, "beta1, beta2 and momentum must lie in [0, 1)");
  }
  if (!(settings_.epsilon > 0.0)) {
    Fail(ErrorKind::kValidation, "optimizer epsilon must be positive");
  }
}

void Optimizer::Step(std::span<Parameter* const> params) {
  for (Parameter* p : params) {
    if (!p->frozen() && p->grad().size() != p->value().size()) {
      Fail(ErrorKind::kState, "parameter '" + p->name() + "' has no gradient");
    }
  }
  ++step_count_;
  const double lr = settings_.learning_rate;
  const double b1 = settings_.beta1;
  const double b2 = settings_.beta2;
  const double t = static_cast<double>(step_count_);
  const double bias1 = 1.0 - std::pow(b1, t);
  const double bias2 = 1.0 - std::pow(b2, t);

  for (Parameter* p : params) {
    if (p->frozen()) {
      p->grad().clear();
      continue;
    }
    std::vector<double>& value = p->value().storage();
    const std::vector<double>& grad = p->grad();
    Moments& m = moments_[p->name()];
    if (m.first.size() != value.size()) {
      if (!m.first.empty()) {
        Fail(ErrorKind::kState, "moment buffer shape changed for '" + p->name() + "'");
      }
      m.first.assign(value.size(), 0.0);
      if (settings_.kind != OptimizerKind::kSgdMomentum) m.second.assign(value.size(), 0.0);
    }
    switch (settings_.kind) {
      case OptimizerKind::kSgdMomentum:
        for (std::size_t i = 0; i < value.size(); ++i) {
          m.first[i] = settings_.momentum * m.first[i] + grad[i];
          value[i] -= lr * m.first[i];
        }
        break;
      case OptimizerKind::kAdam:
        for (std::size_t i = 0; i < value.size(); ++i) {
          m.first[i] = b1 * m.first[i] + (1.0 - b1) * grad[i];
          m.second[i] = b2 * m.second[i] + (1.0 - b2) * grad[i] * grad[i];
          const double m_hat = m.first[i] / bias1;
          const double v_hat = m.second[i] / bias2;
          value[i] -= lr * m_hat / (std::sqrt(v_hat) + settings_.epsilon);
        }
        break;
      case OptimizerKind::kNadam:
        // Nesterov look-ahead: blend the corrected momentum with the current
        // gradient.
        for (std::size_t i = 0; i < value.size(); ++i) {
          m.first[i] = b1 * m.first[i] + (1.0 - b1) * grad[i];
          m.second[i] = b2 * m.second[i] + (1.0 - b2) * grad[i] * grad[i];
          const double m_hat = m.first[i] / bias1;
          const double v_hat = m.second[i] / bias2;
          const double direction = b1 * m_hat + (1.0 - b1) * grad[i] / bias1;
          value[i] -= lr * direction / (std::sqrt(v_hat) + settings_.epsilon);
        }
        break;
    }
    p->grad().clear();
  }
}

}  // namespace hebbdqn
