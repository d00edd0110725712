#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "hebbdqn/network.hpp"
#include "hebbdqn/optimizer.hpp"
#include "hebbdqn/policy.hpp"
#include "hebbdqn/schedule.hpp"

namespace hebbdqn {

enum class AgentKind { kDqn, kDouble, kDueling, kDuelingPlastic };
enum class FreezePolicy { kAtCutoff, kBestSoFar };
enum class PlasticOrder { kBackpropThenHebbian, kHebbianThenBackprop };
enum class UpdateMode { kPerEpisode, kPerStep };

AgentKind ParseAgentKind(std::string_view text);
std::string_view ToString(AgentKind kind);
FreezePolicy ParseFreezePolicy(std::string_view text);
std::string_view ToString(FreezePolicy policy);
PlasticOrder ParsePlasticOrder(std::string_view text);
std::string_view ToString(PlasticOrder order);
UpdateMode ParseUpdateMode(std::string_view text);
std::string_view ToString(UpdateMode mode);

// Every setting of one training run. The file format is one `key = value`
// per line; `#` starts a comment. Keys are listed by ConfigKeys().
struct TrainConfig {
  std::string env = "mini-catch";
  AgentKind agent = AgentKind::kDueling;
  std::uint64_t seed = 0;

  std::size_t episodes = 10000;
  std::size_t max_steps_per_episode = 3000;
  std::size_t warmup_episodes = 50;
  std::size_t buffer_capacity = 50000;
  std::size_t batch_size = 64;
  double gamma = 0.99;

  // Per-episode: one batch at each episode end. Per-step: one batch every
  // `train_every` environment steps once warmup is over.
  UpdateMode update_mode = UpdateMode::kPerEpisode;
  std::size_t train_every = 4;
  std::size_t target_sync_interval = 50;

  Schedule epsilon = Schedule::Linear(1.0, 0.1, 1.0);
  Schedule learning_rate = Schedule::Linear(1e-2, 1e-4, 0.6);
  OptimizerSettings optimizer;

  double plastic_split = 0.7;
  double plastic_epsilon = 0.1;
  double eta = 1e-3;
  double alpha_plastic = 0.2;
  bool alpha_per_connection = false;
  FreezePolicy freeze_policy = FreezePolicy::kAtCutoff;
  PlasticOrder plastic_order = PlasticOrder::kBackpropThenHebbian;

  std::vector<agent::ConvSpec> conv = {{32, 8, 4}, {64, 4, 2}, {64, 3, 1}};
  bool pool_after_conv = false;
  std::vector<std::size_t> hidden = {512};
  double dropout = 0.0;

  // 0 disables interval checkpoints; phase-boundary and final checkpoints are
  // always written.
  std::size_t checkpoint_interval = 0;

  bool plastic() const { return agent == AgentKind::kDuelingPlastic; }
  // Number of episodes trained with fixed weights (warmup included).
  std::size_t FixedEpisodes() const;
  agent::TargetMode target_mode() const;
  agent::NetworkSpec MakeNetworkSpec(const Shape& state_shape, std::size_t n_actions) const;

  // Throws Error(kValidation) naming the offending key.
  void Validate() const;
};

std::vector<std::string> ConfigKeys();

// Throws Error(kValidation) for unknown keys and Error(kParse) for values
// that do not parse.
void SetConfigValue(TrainConfig& config, std::string_view key, std::string_view value);
std::string GetConfigValue(const TrainConfig& config, std::string_view key);

// Parse errors carry the line number.
TrainConfig ParseConfig(std::string_view text, TrainConfig base = {});
TrainConfig LoadConfig(const std::string& path, TrainConfig base = {});

// "k=v" override strings.
void ApplyOverride(TrainConfig& config, std::string_view assignment);

// All keys in ConfigKeys() order, parseable by ParseConfig.
std::string DumpConfig(const TrainConfig& config);

// Shortest round-trip decimal text of a double.
std::string FormatDouble(double value);

}  // namespace hebbdqn
