#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "hebbdqn/rng.hpp"
#include "hebbdqn/schedule.hpp"

namespace hebbdqn::mdp {

// Finite MDP with dense transition and reward tables indexed [s][a][s'].
// Terminal states are absorbing: T(s,a,s) = 1 and R(s,a,s) = 0 for every a.
class TabularMdp {
 public:
  TabularMdp(std::size_t n_states, std::size_t n_actions, double gamma);

  std::size_t num_states() const { return n_states_; }
  std::size_t num_actions() const { return n_actions_; }
  double gamma() const { return gamma_; }
  std::size_t start_state() const { return start_state_; }
  void set_start_state(std::size_t s);

  double transition(std::size_t s, std::size_t a, std::size_t next) const {
    return transition_[Index(s, a, next)];
  }
  double reward(std::size_t s, std::size_t a, std::size_t next) const {
    return reward_[Index(s, a, next)];
  }
  void set(std::size_t s, std::size_t a, std::size_t next, double probability,
           double reward);

  // Expected immediate reward sum_{s'} T(s,a,s') R(s,a,s').
  double ExpectedReward(std::size_t s, std::size_t a) const;

  // Largest |R| over all triples with nonzero probability.
  double MaxAbsReward() const;

  bool IsAbsorbing(std::size_t s) const;

  // Throws Error(kValidation) naming the first offending (s, a) row.
  void Validate() const;

 private:
  std::size_t Index(std::size_t s, std::size_t a, std::size_t next) const {
    return (s * n_actions_ + a) * n_states_ + next;
  }

  std::size_t n_states_;
  std::size_t n_actions_;
  double gamma_;
  std::size_t start_state_ = 0;
  std::vector<double> transition_;
  std::vector<double> reward_;
};

// {"n_states", "n_actions", "gamma", "transitions": [[s,a,s',p,r], ...],
//  optional "start_state"}. Unlisted triples have p = 0, r = 0. Parse errors
// carry line/column; field errors name the field.
TabularMdp ParseMdpJson(const std::string& text);
TabularMdp LoadMdpJson(const std::string& path);

struct ValueTable {
  std::vector<double> values;
};

struct QTable {
  std::size_t n_states = 0;
  std::size_t n_actions = 0;
  std::vector<double> q;  // row-major [s][a]

  QTable() = default;
  QTable(std::size_t states, std::size_t actions, double fill = 0.0)
      : n_states(states), n_actions(actions), q(states * actions, fill) {}

  double& at(std::size_t s, std::size_t a) { return q[s * n_actions + a]; }
  double at(std::size_t s, std::size_t a) const { return q[s * n_actions + a]; }

  // Lowest action index wins ties.
  std::size_t Argmax(std::size_t s) const;
  double Max(std::size_t s) const;
};

struct SolveStats {
  int iterations = 0;
  // Sup-norm change of the last sweep.
  double last_delta = 0.0;
  // Bound on the sup-norm distance to the fixed point: gamma/(1-gamma) * delta.
  double error_bound = 0.0;
  bool converged = false;
};

struct ValueIterationResult {
  ValueTable value;
  SolveStats stats;
  // V_0, V_1, ... when history recording is requested.
  std::vector<std::vector<double>> history;
};

struct QValueIterationResult {
  QTable q;
  SolveStats stats;
};

// Iterates V_{k+1}(s) = max_a sum_{s'} T [R + gamma V_k(s')] from V_0 = 0 until
// the guaranteed distance to the fixed point is at most `tol`.
ValueIterationResult ValueIteration(const TabularMdp& mdp, double tol,
                                    int max_iters, bool record_history = false);

// Q_{k+1}(s,a) = sum_{s'} T [R + gamma max_{a'} Q_k(s',a')], same stopping rule.
QValueIterationResult QValueIteration(const TabularMdp& mdp, double tol,
                                      int max_iters);

// One sampled transition: s' ~ T(s,a,.), r = R(s,a,s').
struct Transition {
  std::size_t next_state;
  double reward;
};
Transition SimulateStep(const TabularMdp& mdp, std::size_t s, std::size_t a,
                        Rng& rng);

enum class QInit { kZeros, kRandom };

struct QLearningSettings {
  double alpha = 0.1;
  int episodes = 500;
  int steps_per_episode = 100;
  Schedule epsilon = Schedule::Linear(1.0, 0.1, 1.0);
  std::uint64_t seed = 0;
  QInit init = QInit::kZeros;
  // Episodes start from a uniformly drawn state when true, otherwise from the
  // mdp's start state.
  bool random_start = true;
};

// Soft update Q(s,a) <- (1-alpha) Q(s,a) + alpha (r + gamma max_{a'} Q(s',a'))
// under an epsilon-greedy behaviour policy. Episodes end early on entering an
// absorbing state.
QTable TabularQLearning(const TabularMdp& mdp, const QLearningSettings& settings);

// Exact value of a deterministic policy: solves (I - gamma P_pi) v = r_pi.
std::vector<double> EvaluatePolicy(const TabularMdp& mdp,
                                   const std::vector<std::size_t>& policy);

// Random MDP for tests and benchmarks: Dirichlet-like rows, rewards uniform in
// [-reward_scale, reward_scale].
TabularMdp RandomMdp(std::size_t n_states, std::size_t n_actions, double gamma,
                     std::uint64_t seed, double reward_scale = 1.0);

}  // namespace hebbdqn::mdp
