#include "hebbdqn/evaluate.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <nlohmann/json.hpp>
#include <numeric>
#include <thread>

#include "hebbdqn/error.hpp"
#include "hebbdqn/policy.hpp"
#include "hebbdqn/rng.hpp"

namespace hebbdqn {

namespace {

struct EpisodeOutcome {
  double reward = 0.0;
  std::size_t length = 0;
  bool truncated = false;
};

EpisodeOutcome RunEpisode(const agent::QNetwork& net, const std::string& env_name,
                          const EvalSettings& settings, std::size_t index, const FrameSink& sink) {
  auto env = envs::MakeEnv(env_name, Rng::Derive(settings.seed, 2 * index));
  Rng rng(Rng::Derive(settings.seed, 2 * index + 1));
  if (env->spec().n_actions != net.n_actions()) {
    Fail(ErrorKind::kValidation, "network has " + std::to_string(net.n_actions()) + " actions, " +
                                     env->spec().name + " has " + std::to_string(env->spec().n_actions));
  }
  preprocess::Observer observer(env->spec());
  const bool pixels = env->spec().observation == envs::ObservationKind::kPixels;
  envs::Frame frame = env->Reset();
  observer.Reset(frame);
  if (sink) sink(index, 0, frame, pixels ? &observer.LatestProcessed() : nullptr);
  EpisodeOutcome out;
  for (std::size_t t = 0; t < settings.max_steps_per_episode; ++t) {
    const Tensor q = net.Predict(observer.Current().Materialize());
    const std::size_t action = agent::SelectAction(q.data(), settings.epsilon, rng);
    envs::StepResult step = env->Step(action);
    observer.Push(step.frame);
    if (sink) sink(index, t + 1, step.frame, pixels ? &observer.LatestProcessed() : nullptr);
    out.reward += step.reward;
    out.length = t + 1;
    if (step.terminated) return out;
  }
  out.truncated = true;
  return out;
}

}  // namespace

EvalSummary Evaluate(const agent::QNetwork& net, const std::string& env_name, const EvalSettings& settings,
                     const FrameSink& sink) {
  if (settings.episodes == 0) Fail(ErrorKind::kUsage, "evaluation needs at least one episode");
  if (!(settings.epsilon >= 0.0 && settings.epsilon <= 1.0)) {
    Fail(ErrorKind::kUsage, "evaluation epsilon must lie in [0, 1]");
  }
  if (settings.max_steps_per_episode == 0) Fail(ErrorKind::kUsage, "max steps per episode must be positive");

  std::vector<EpisodeOutcome> outcomes(settings.episodes);
  const std::size_t threads =
      sink ? 1 : std::clamp<std::size_t>(settings.threads, 1, settings.episodes);
  if (threads == 1) {
    for (std::size_t i = 0; i < settings.episodes; ++i) {
      outcomes[i] = RunEpisode(net, env_name, settings, i, sink);
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < threads; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < settings.episodes; i = next++) {
          try {
            outcomes[i] = RunEpisode(net, env_name, settings, i, {});
          } catch (...) {
            std::lock_guard<std::mutex> lock(failure_mutex);
            if (!failure) failure = std::current_exception();
            return;
          }
        }
      });
    }
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
  }

  EvalSummary s;
  s.episodes = settings.episodes;
  for (const auto& o : outcomes) {
    s.rewards.push_back(o.reward);
    s.lengths.push_back(o.length);
    s.truncated.push_back(o.truncated);
  }
  s.mean_reward = std::accumulate(s.rewards.begin(), s.rewards.end(), 0.0) / static_cast<double>(s.episodes);
  s.max_reward = *std::max_element(s.rewards.begin(), s.rewards.end());
  s.min_reward = *std::min_element(s.rewards.begin(), s.rewards.end());
  s.mean_length = static_cast<double>(std::accumulate(s.lengths.begin(), s.lengths.end(), std::size_t{0})) /
                  static_cast<double>(s.episodes);
  return s;
}

std::string EvalSummaryToJson(const EvalSummary& s) {
  nlohmann::json j;
  j["episodes"] = s.episodes;
  j["mean_reward"] = s.mean_reward;
  j["max_reward"] = s.max_reward;
  j["min_reward"] = s.min_reward;
  j["mean_length"] = s.mean_length;
  j["rewards"] = s.rewards;
  j["lengths"] = s.lengths;
  j["truncated"] = s.truncated;
  return j.dump(2) + "\n";
}

}  // namespace hebbdqn
