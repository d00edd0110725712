#include "hebbdqn/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

#include "hebbdqn/checkpoint.hpp"
#include "hebbdqn/error.hpp"
#include "hebbdqn/log.hpp"
#include "hebbdqn/ops.hpp"
#include "hebbdqn/policy.hpp"

namespace hebbdqn {

namespace {

enum Stream : std::uint64_t { kEnvStream, kActionStream, kReplayStream, kDropoutStream, kInitStream };

std::unique_ptr<envs::Environment> ValidatedEnv(const TrainConfig& config) {
  config.Validate();
  return envs::MakeEnv(config.env, Rng::Derive(config.seed, kEnvStream));
}

OptimizerSettings InitialOptimizer(const TrainConfig& config) {
  OptimizerSettings s = config.optimizer;
  s.learning_rate = config.learning_rate.Value(0, static_cast<std::int64_t>(config.episodes));
  return s;
}

std::string Hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace

Trainer::Trainer(TrainConfig config)
    : config_(std::move(config)),
      env_(ValidatedEnv(config_)),
      observer_(env_->spec()),
      optimizer_(InitialOptimizer(config_)),
      buffer_(config_.buffer_capacity),
      action_rng_(Rng::Derive(config_.seed, kActionStream)),
      replay_rng_(Rng::Derive(config_.seed, kReplayStream)),
      dropout_rng_(Rng::Derive(config_.seed, kDropoutStream)) {
  const auto spec = config_.MakeNetworkSpec(observer_.state_shape(), env_->spec().n_actions);
  net_ = std::make_unique<agent::QNetwork>(spec, Rng::Derive(config_.seed, kInitStream));
  target_ = std::make_unique<agent::QNetwork>(*net_);
}

Trainer::Trainer(const Trainer& other)
    : config_(other.config_),
      env_(other.env_->Clone()),
      observer_(other.observer_),
      net_(std::make_unique<agent::QNetwork>(*other.net_)),
      target_(std::make_unique<agent::QNetwork>(*other.target_)),
      best_(other.best_ ? std::make_unique<agent::QNetwork>(*other.best_) : nullptr),
      best_reward_(other.best_reward_),
      best_episode_(other.best_episode_),
      optimizer_(other.optimizer_),
      trace_optimizer_(other.trace_optimizer_),
      buffer_(other.buffer_),
      action_rng_(other.action_rng_),
      replay_rng_(other.replay_rng_),
      dropout_rng_(other.dropout_rng_),
      total_steps_(other.total_steps_),
      optimizer_steps_(other.optimizer_steps_),
      records_(other.records_),
      sync_episodes_(other.sync_episodes_),
      frozen_checksum_(other.frozen_checksum_),
      freeze_source_episode_(other.freeze_source_episode_),
      trace_audit_(other.trace_audit_) {}

void Trainer::set_plastic_epsilon(double epsilon) {
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) {
    Fail(ErrorKind::kValidation, "plastic_epsilon must lie in [0, 1]");
  }
  config_.plastic_epsilon = epsilon;
}

metrics::Phase Trainer::PhaseOf(std::size_t episode) const {
  if (episode >= config_.FixedEpisodes()) return metrics::Phase::kPlastic;
  if (episode < config_.warmup_episodes) return metrics::Phase::kWarmup;
  return metrics::Phase::kFixed;
}

std::size_t Trainer::SplitEpisode() const {
  if (config_.plastic()) return config_.FixedEpisodes();
  return std::min(config_.episodes, static_cast<std::size_t>(std::llround(
                                        config_.plastic_split * static_cast<double>(config_.episodes))));
}

double Trainer::TrainOnBatch(const std::vector<replay::Experience>& experiences, bool plastic) {
  const agent::Batch batch = agent::MakeBatch(experiences);
  const agent::QNetwork& bootstrap = plastic ? *net_ : *target_;
  const std::vector<double> y =
      agent::ComputeTargets(*net_, bootstrap, batch, config_.gamma, config_.target_mode());

  Tape tape;
  agent::ActivationCapture capture;
  agent::ForwardOptions options;
  options.training = true;
  options.dropout_rng = &dropout_rng_;
  options.capture = plastic ? &capture : nullptr;
  Var q = net_->Forward(&tape, batch.states, options);

  const std::size_t n = experiences.size();
  const std::size_t actions = q->value.dim(1);
  Tensor target = q->value;
  Tensor mask({n, actions});
  for (std::size_t i = 0; i < n; ++i) {
    target.at(i, batch.actions[i]) = y[i];
    mask.at(i, batch.actions[i]) = 1.0;
  }
  Var loss = ops::MseLoss(&tape, q, target, &mask);
  const double loss_value = loss->value[0];

  const bool hebbian_first = plastic && config_.plastic_order == PlasticOrder::kHebbianThenBackprop;
  if (hebbian_first) net_->HebbianUpdate(capture);
  tape.Backward(loss);
  auto params = net_->Parameters();
  Optimizer& opt = plastic ? *trace_optimizer_ : optimizer_;
  opt.Step(params);
  ++optimizer_steps_;
  if (plastic && !hebbian_first) net_->HebbianUpdate(capture);
  if (plastic) AuditTraces();
  return loss_value;
}

void Trainer::AuditTraces() {
  for (const agent::PlasticDense* layer : net_->PlasticLayers()) {
    const double b = layer->trace_stats().max_abs_activity;
    double max_trace = 0.0;
    for (double v : layer->hebb()->value().data()) max_trace = std::max(max_trace, std::abs(v));
    ++trace_audit_.checks;
    const double bound = b * b;
    if (max_trace > bound) ++trace_audit_.violations;
    if (bound > 0.0) trace_audit_.worst_ratio = std::max(trace_audit_.worst_ratio, max_trace / bound);
  }
}

void Trainer::Freeze() {
  if (config_.freeze_policy == FreezePolicy::kBestSoFar && best_) {
    net_->CopyParametersFrom(*best_);
    freeze_source_episode_ = best_episode_;
  } else {
    freeze_source_episode_ = records_.size();
  }
  best_.reset();
  net_->BeginPlasticPhase();
  frozen_checksum_ = net_->FixedParameterChecksum();
  OptimizerSettings s = config_.optimizer;
  s.learning_rate = optimizer_.learning_rate();
  trace_optimizer_.emplace(s);
  log::Info("froze fixed weights after episode " + std::to_string(records_.size()) +
            " (weights from episode " + std::to_string(*freeze_source_episode_) + ")");
}

const metrics::EpisodeRecord& Trainer::RunEpisode() {
  if (finished()) Fail(ErrorKind::kState, "training already ran all configured episodes");
  const std::size_t e = records_.size();
  const auto total = static_cast<std::int64_t>(config_.episodes);
  const metrics::Phase phase = PhaseOf(e);
  const bool plastic = phase == metrics::Phase::kPlastic;
  const double epsilon =
      plastic ? config_.plastic_epsilon : config_.epsilon.Value(static_cast<std::int64_t>(e), total);
  const double lr = config_.learning_rate.Value(static_cast<std::int64_t>(e), total);
  optimizer_.set_learning_rate(lr);
  if (trace_optimizer_) trace_optimizer_->set_learning_rate(lr);

  observer_.Reset(env_->Reset());
  preprocess::StateRef state = observer_.Current();
  Tensor state_tensor = state.Materialize();

  std::vector<replay::Experience> episode_transitions;
  metrics::EpisodeRecord record;
  record.episode = e + 1;
  record.phase = phase;
  record.epsilon = epsilon;
  record.learning_rate = lr;
  record.max_q = -std::numeric_limits<double>::infinity();
  double loss_sum = 0.0;
  std::size_t loss_count = 0;
  const bool per_step = config_.update_mode == UpdateMode::kPerStep;

  for (std::size_t t = 0; t < config_.max_steps_per_episode; ++t) {
    const Tensor q = net_->Predict(state_tensor);
    for (double v : q.data()) record.max_q = std::max(record.max_q, v);
    const std::size_t action = agent::SelectAction(q.data(), epsilon, action_rng_);
    envs::StepResult step = env_->Step(action);
    observer_.Push(step.frame);
    preprocess::StateRef next = observer_.Current();
    const bool truncated = !step.terminated && t + 1 == config_.max_steps_per_episode;
    replay::Experience exp{state, action, step.reward, next, step.terminated, truncated};
    record.reward += step.reward;
    ++total_steps_;
    if (plastic) {
      episode_transitions.push_back(std::move(exp));
    } else {
      buffer_.Push(std::move(exp));
      if (per_step && phase == metrics::Phase::kFixed && total_steps_ % config_.train_every == 0 &&
          buffer_.size() >= config_.batch_size) {
        loss_sum += TrainOnBatch(buffer_.Sample(config_.batch_size, replay_rng_), false);
        ++loss_count;
      }
    }
    if (step.terminated || truncated) break;
    state = std::move(next);
    state_tensor = state.Materialize();
  }

  if (phase == metrics::Phase::kFixed && !per_step) {
    if (buffer_.size() >= config_.batch_size) {
      loss_sum += TrainOnBatch(buffer_.Sample(config_.batch_size, replay_rng_), false);
      ++loss_count;
    } else {
      log::Warn("episode " + std::to_string(e + 1) + ": replay holds " + std::to_string(buffer_.size()) +
                " transitions, fewer than batch_size; no update");
    }
  } else if (plastic) {
    // Uniform with replacement over this episode's transitions only; short
    // episodes repeat transitions within the batch.
    std::vector<replay::Experience> batch;
    batch.reserve(config_.batch_size);
    for (std::size_t i = 0; i < config_.batch_size; ++i) {
      batch.push_back(episode_transitions[replay_rng_.Index(episode_transitions.size())]);
    }
    loss_sum += TrainOnBatch(batch, true);
    ++loss_count;
  }
  if (loss_count > 0) record.loss = loss_sum / static_cast<double>(loss_count);

  if (!plastic && (e + 1) % config_.target_sync_interval == 0) {
    agent::SyncTarget(*net_, *target_);
    sync_episodes_.push_back(e + 1);
  }
  if (config_.plastic() && config_.freeze_policy == FreezePolicy::kBestSoFar &&
      phase == metrics::Phase::kFixed && (!best_ || record.reward > best_reward_)) {
    best_ = std::make_unique<agent::QNetwork>(*net_);
    best_reward_ = record.reward;
    best_episode_ = e + 1;
  }
  records_.push_back(record);
  if (config_.plastic() && records_.size() == config_.FixedEpisodes()) Freeze();
  log::Debug("episode " + std::to_string(e + 1) + " " + std::string(metrics::ToString(phase)) +
             " reward " + std::to_string(record.reward));
  return records_.back();
}

void Trainer::RunUntil(std::size_t episodes) {
  while (records_.size() < std::min(episodes, config_.episodes)) RunEpisode();
}

metrics::RunSummary Trainer::Summary() const {
  metrics::RunSummary s = metrics::Summarize(records_, SplitEpisode());
  s.target_sync_episodes = sync_episodes_;
  s.freeze_source_episode = freeze_source_episode_;
  if (frozen_checksum_) {
    s.fixed_checksum_before = Hex(*frozen_checksum_);
    s.fixed_checksum_after = Hex(net_->FixedParameterChecksum());
  }
  return s;
}

TrainResult TrainToDirectory(const TrainConfig& config, const std::string& out_dir,
                             const std::function<void(const metrics::EpisodeRecord&)>& on_episode) {
  namespace fs = std::filesystem;
  Trainer trainer(config);
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) Fail(ErrorKind::kIo, "cannot create output directory '" + out_dir + "': " + ec.message());
  const fs::path dir(out_dir);
  {
    std::ofstream conf(dir / "config.conf", std::ios::binary);
    if (!conf) Fail(ErrorKind::kIo, "cannot write " + (dir / "config.conf").string());
    conf << DumpConfig(config);
  }
  TrainResult result;
  const auto save = [&](const std::string& name) {
    const std::string path = (dir / name).string();
    SaveCheckpoint(path, trainer.network().ToCheckpoint());
    result.checkpoints.push_back(path);
  };
  metrics::CsvWriter csv((dir / "metrics.csv").string());
  const std::size_t fixed_end = config.FixedEpisodes();
  while (!trainer.finished()) {
    const metrics::EpisodeRecord& record = trainer.RunEpisode();
    csv.Append(record);
    if (on_episode) on_episode(record);
    if (config.checkpoint_interval > 0 && record.episode % config.checkpoint_interval == 0) {
      save("checkpoint_ep" + std::to_string(record.episode) + ".bin");
    }
    if (record.episode == fixed_end) save("checkpoint_fixed_end.bin");
  }
  save("checkpoint_final.bin");
  result.summary = trainer.Summary();
  std::ofstream summary(dir / "summary.json", std::ios::binary);
  if (!summary) Fail(ErrorKind::kIo, "cannot write " + (dir / "summary.json").string());
  summary << metrics::SummaryToJson(result.summary);
  return result;
}

}  // namespace hebbdqn
