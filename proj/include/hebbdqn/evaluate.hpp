#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "hebbdqn/envs.hpp"
#include "hebbdqn/network.hpp"
#include "hebbdqn/preprocess.hpp"

namespace hebbdqn {

struct EvalSettings {
  std::size_t episodes = 10;
  double epsilon = 0.0;
  std::uint64_t seed = 0;
  std::size_t max_steps_per_episode = 3000;
  std::size_t threads = 1;
};

struct EvalSummary {
  std::size_t episodes = 0;
  double mean_reward = 0.0;
  double max_reward = 0.0;
  double min_reward = 0.0;
  double mean_length = 0.0;
  std::vector<double> rewards;
  std::vector<std::size_t> lengths;
  std::vector<bool> truncated;

  bool operator==(const EvalSummary&) const = default;
};

// Receives every raw frame (step 0 is the reset frame) and, for pixel games,
// the processed frame derived from it. Forces single-threaded evaluation.
using FrameSink = std::function<void(std::size_t episode, std::size_t step, const envs::Frame& raw,
                                     const preprocess::ProcessedFrame* processed)>;

// Episode i runs on an environment seeded with Derive(seed, 2i) and draws
// exploration from Derive(seed, 2i + 1), so results do not depend on the
// thread count. The network is only read.
EvalSummary Evaluate(const agent::QNetwork& net, const std::string& env_name, const EvalSettings& settings,
                     const FrameSink& sink = {});

std::string EvalSummaryToJson(const EvalSummary& summary);

}  // namespace hebbdqn
