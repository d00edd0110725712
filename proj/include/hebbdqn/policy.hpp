#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "hebbdqn/network.hpp"
#include "hebbdqn/replay.hpp"
#include "hebbdqn/rng.hpp"

namespace hebbdqn::agent {

enum class TargetMode { kDqn, kDouble };

TargetMode ParseTargetMode(std::string_view text);
std::string_view ToString(TargetMode mode);

// Lowest index wins ties.
std::size_t Argmax(std::span<const double> values);

// Epsilon-greedy. One uniform draw decides exploration; a second picks the
// random action when exploring.
std::size_t SelectAction(std::span<const double> q_row, double epsilon, Rng& rng);

// Bootstrapped regression targets for a batch of transitions.
//   dqn:    y = r + gamma * max_a Q_target(s', a)
//   double: y = r + gamma * Q_target(s', argmax_a Q_main(s', a))
// Terminated transitions use y = r. Truncated ones still bootstrap.
std::vector<double> ComputeTargets(const QNetwork& main, const QNetwork& target,
                                   const Tensor& next_states, std::span<const double> rewards,
                                   const std::vector<bool>& terminated, double gamma,
                                   TargetMode mode);

struct Batch {
  Tensor states;       // [N, C, H, W]
  Tensor next_states;  // [N, C, H, W]
  std::vector<std::size_t> actions;
  std::vector<double> rewards;
  std::vector<bool> terminated_flags;
  std::vector<bool> truncated_flags;
};

Batch MakeBatch(const std::vector<replay::Experience>& experiences);

std::vector<double> ComputeTargets(const QNetwork& main, const QNetwork& target, const Batch& batch,
                                   double gamma, TargetMode mode);

// Target parameters (traces included) become bit-identical to main's.
void SyncTarget(const QNetwork& main, QNetwork& target);

}  // namespace hebbdqn::agent
