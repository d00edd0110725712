#include "hebbdqn/policy.hpp"

#include <algorithm>
#include <string>

#include "hebbdqn/error.hpp"

namespace hebbdqn::agent {

TargetMode ParseTargetMode(std::string_view text) {
  if (text == "dqn") return TargetMode::kDqn;
  if (text == "double") return TargetMode::kDouble;
  Fail(ErrorKind::kValidation, "unknown target mode '" + std::string(text) + "' (expected dqn or double)");
}

std::string_view ToString(TargetMode mode) { return mode == TargetMode::kDqn ? "dqn" : "double"; }

std::size_t Argmax(std::span<const double> values) {
  if (values.empty()) Fail(ErrorKind::kShape, "argmax of an empty row");
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

std::size_t SelectAction(std::span<const double> q_row, double epsilon, Rng& rng) {
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) {
    Fail(ErrorKind::kValidation, "epsilon must lie in [0, 1], got " + std::to_string(epsilon));
  }
  if (q_row.empty()) Fail(ErrorKind::kShape, "action selection on an empty Q row");
  if (rng.Uniform() < epsilon) return rng.Index(q_row.size());
  return Argmax(q_row);
}

std::vector<double> ComputeTargets(const QNetwork& main, const QNetwork& target,
                                   const Tensor& next_states, std::span<const double> rewards,
                                   const std::vector<bool>& terminated, double gamma,
                                   TargetMode mode) {
  if (!(gamma >= 0.0 && gamma < 1.0)) Fail(ErrorKind::kValidation, "gamma must lie in [0, 1)");
  const std::size_t n = rewards.size();
  if (terminated.size() != n || next_states.rank() == 0 || next_states.dim(0) != n) {
    Fail(ErrorKind::kShape, "target batch: " + std::to_string(n) + " rewards, " +
                                std::to_string(terminated.size()) + " flags, next states " +
                                ShapeString(next_states.shape()));
  }
  const Tensor q_target = target.Predict(next_states);
  Tensor q_main;
  if (mode == TargetMode::kDouble) q_main = main.Predict(next_states);
  const std::size_t actions = q_target.dim(1);
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (terminated[i]) {
      y[i] = rewards[i];
      continue;
    }
    const std::span<const double> row = q_target.data().subspan(i * actions, actions);
    double next = 0.0;
    if (mode == TargetMode::kDqn) {
      next = row[Argmax(row)];
    } else {
      next = row[Argmax(q_main.data().subspan(i * actions, actions))];
    }
    y[i] = rewards[i] + gamma * next;
  }
  return y;
}

Batch MakeBatch(const std::vector<replay::Experience>& experiences) {
  if (experiences.empty()) Fail(ErrorKind::kShape, "empty batch");
  Batch batch;
  const Shape& s = experiences.front().state.shape;
  Shape shape{experiences.size()};
  shape.insert(shape.end(), s.begin(), s.end());
  batch.states = Tensor(shape);
  batch.next_states = Tensor(shape);
  const std::size_t per = ShapeProduct(s);
  for (std::size_t i = 0; i < experiences.size(); ++i) {
    const auto& e = experiences[i];
    e.state.WriteTo(batch.states.data().subspan(i * per, per));
    e.next_state.WriteTo(batch.next_states.data().subspan(i * per, per));
    batch.actions.push_back(e.action);
    batch.rewards.push_back(e.reward);
    batch.terminated_flags.push_back(e.terminated);
    batch.truncated_flags.push_back(e.truncated);
  }
  return batch;
}

std::vector<double> ComputeTargets(const QNetwork& main, const QNetwork& target, const Batch& batch,
                                   double gamma, TargetMode mode) {
  return ComputeTargets(main, target, batch.next_states, batch.rewards, batch.terminated_flags,
                        gamma, mode);
}

void SyncTarget(const QNetwork& main, QNetwork& target) { target.CopyParametersFrom(main); }

}  // namespace hebbdqn::agent
