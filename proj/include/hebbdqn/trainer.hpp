#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "hebbdqn/config.hpp"
#include "hebbdqn/envs.hpp"
#include "hebbdqn/metrics.hpp"
#include "hebbdqn/network.hpp"
#include "hebbdqn/optimizer.hpp"
#include "hebbdqn/preprocess.hpp"
#include "hebbdqn/replay.hpp"
#include "hebbdqn/rng.hpp"

namespace hebbdqn {

// Two-phase training loop.
//
// Episodes [0, warmup) only fill the replay buffer. Up to FixedEpisodes()
// the network trains on uniform replay batches against a periodically synced
// target network. For plastic agents the conv/dense weights are then frozen,
// the traces zeroed, and each later episode trains the traces on a batch
// drawn from that episode's own transitions, with constant exploration
// plastic_epsilon. In that phase the online network provides its own
// bootstrap targets.
//
// A Trainer is copyable: the copy continues from the same point with
// independent environment, networks, buffers and generators.
class Trainer {
 public:
  explicit Trainer(TrainConfig config);
  Trainer(const Trainer& other);
  Trainer& operator=(const Trainer&) = delete;

  const TrainConfig& config() const { return config_; }
  // Only exploration of later plastic episodes may be changed mid-run.
  void set_plastic_epsilon(double epsilon);

  std::size_t episodes_done() const { return records_.size(); }
  bool finished() const { return episodes_done() >= config_.episodes; }
  bool in_plastic_phase() const { return net_->plastic_phase(); }

  // Runs the next episode. When it completes the fixed phase of a plastic
  // agent, the freeze is applied before returning.
  const metrics::EpisodeRecord& RunEpisode();
  void RunUntil(std::size_t episodes);
  void RunToEnd() { RunUntil(config_.episodes); }

  const std::vector<metrics::EpisodeRecord>& records() const { return records_; }
  const std::vector<std::size_t>& target_sync_episodes() const { return sync_episodes_; }
  const agent::QNetwork& network() const { return *net_; }
  const agent::QNetwork& target_network() const { return *target_; }
  const replay::ReplayBuffer<>& replay() const { return buffer_; }
  std::int64_t optimizer_steps() const { return optimizer_steps_; }

  // Checksum of the fixed parameters taken at the freeze.
  std::optional<std::uint64_t> frozen_checksum() const { return frozen_checksum_; }
  std::optional<std::size_t> freeze_source_episode() const { return freeze_source_episode_; }

  // Plastic-phase trace bound audit: after every trace training step, each
  // layer's max |hebb| is compared with B^2, B the largest activity its
  // Hebbian updates have seen.
  struct TraceAudit {
    std::size_t checks = 0;
    std::size_t violations = 0;
    double worst_ratio = 0.0;  // max |hebb| / B^2
  };
  const TraceAudit& trace_audit() const { return trace_audit_; }

  // Split between the first and last reporting segments.
  std::size_t SplitEpisode() const;
  metrics::RunSummary Summary() const;

 private:
  metrics::Phase PhaseOf(std::size_t episode) const;
  double TrainOnBatch(const std::vector<replay::Experience>& batch, bool plastic);
  void Freeze();
  void AuditTraces();

  TrainConfig config_;
  std::unique_ptr<envs::Environment> env_;
  preprocess::Observer observer_;
  std::unique_ptr<agent::QNetwork> net_;
  std::unique_ptr<agent::QNetwork> target_;
  std::unique_ptr<agent::QNetwork> best_;
  double best_reward_ = 0.0;
  std::size_t best_episode_ = 0;
  Optimizer optimizer_;
  std::optional<Optimizer> trace_optimizer_;
  replay::ReplayBuffer<> buffer_;
  Rng action_rng_;
  Rng replay_rng_;
  Rng dropout_rng_;
  std::uint64_t total_steps_ = 0;
  std::int64_t optimizer_steps_ = 0;
  std::vector<metrics::EpisodeRecord> records_;
  std::vector<std::size_t> sync_episodes_;
  std::optional<std::uint64_t> frozen_checksum_;
  std::optional<std::size_t> freeze_source_episode_;
  TraceAudit trace_audit_;
};

// Drives a Trainer and writes into `out_dir`: config.conf (resolved),
// metrics.csv (one row per finished episode), summary.json,
// checkpoint_fixed_end.bin, checkpoint_final.bin and, with a positive
// checkpoint_interval, checkpoint_ep<N>.bin. `on_episode` runs after each
// episode.
struct TrainResult {
  metrics::RunSummary summary;
  std::vector<std::string> checkpoints;
};

TrainResult TrainToDirectory(const TrainConfig& config, const std::string& out_dir,
                             const std::function<void(const metrics::EpisodeRecord&)>& on_episode = {});

}  // namespace hebbdqn
