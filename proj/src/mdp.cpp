#include "hebbdqn/mdp.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "hebbdqn/error.hpp"
#include "json.hpp"

namespace hebbdqn::mdp {

namespace {

constexpr double kRowSumTolerance = 1e-9;

std::string RowName(std::size_t s, std::size_t a) {
  return "(s=" + std::to_string(s) + ", a=" + std::to_string(a) + ")";
}

// Line and column (1-based) of a byte offset.
std::pair<std::size_t, std::size_t> LineColumn(const std::string& text,
                                               std::size_t byte) {
  std::size_t line = 1;
  std::size_t col = 1;
  const std::size_t end = std::min(byte, text.size());
  for (std::size_t i = 0; i < end; ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

template <typename T>
T RequireField(const nlohmann::json& doc, const char* field) {
  if (!doc.contains(field)) {
    Fail(ErrorKind::kValidation, std::string("missing field '") + field + "'");
  }
  try {
    return doc.at(field).get<T>();
  } catch (const nlohmann::json::exception&) {
    Fail(ErrorKind::kValidation,
         std::string("field '") + field + "' has the wrong type");
  }
}

}  // namespace

TabularMdp::TabularMdp(std::size_t n_states, std::size_t n_actions, double gamma)
    : n_states_(n_states),
      n_actions_(n_actions),
      gamma_(gamma),
      transition_(n_states * n_actions * n_states, 0.0),
      reward_(n_states * n_actions * n_states, 0.0) {
  if (n_states == 0 || n_actions == 0) {
    Fail(ErrorKind::kValidation, "n_states and n_actions must be positive");
  }
  if (!(gamma >= 0.0 && gamma < 1.0)) {
    Fail(ErrorKind::kValidation, "gamma must lie in [0, 1)");
  }
}

void TabularMdp::set_start_state(std::size_t s) {
  if (s >= n_states_) {
    Fail(ErrorKind::kValidation, "start_state out of range");
  }
  start_state_ = s;
}

void TabularMdp::set(std::size_t s, std::size_t a, std::size_t next,
                     double probability, double reward) {
  if (s >= n_states_ || a >= n_actions_ || next >= n_states_) {
    Fail(ErrorKind::kValidation, "transition index out of range " +
                                     RowName(s, a) + " -> " +
                                     std::to_string(next));
  }
  transition_[Index(s, a, next)] = probability;
  reward_[Index(s, a, next)] = reward;
}

double TabularMdp::ExpectedReward(std::size_t s, std::size_t a) const {
  double total = 0.0;
  for (std::size_t n = 0; n < n_states_; ++n) {
    total += transition(s, a, n) * reward(s, a, n);
  }
  return total;
}

double TabularMdp::MaxAbsReward() const {
  double best = 0.0;
  for (std::size_t i = 0; i < reward_.size(); ++i) {
    if (transition_[i] > 0.0) best = std::max(best, std::abs(reward_[i]));
  }
  return best;
}

bool TabularMdp::IsAbsorbing(std::size_t s) const {
  for (std::size_t a = 0; a < n_actions_; ++a) {
    if (transition(s, a, s) != 1.0 || reward(s, a, s) != 0.0) return false;
  }
  return true;
}

void TabularMdp::Validate() const {
  for (std::size_t s = 0; s < n_states_; ++s) {
    for (std::size_t a = 0; a < n_actions_; ++a) {
      double sum = 0.0;
      for (std::size_t n = 0; n < n_states_; ++n) {
        const double p = transition(s, a, n);
        if (!(p >= 0.0) || !std::isfinite(p)) {
          Fail(ErrorKind::kValidation,
               "negative or non-finite probability in row " + RowName(s, a));
        }
        if (!std::isfinite(reward(s, a, n))) {
          Fail(ErrorKind::kValidation,
               "non-finite reward in row " + RowName(s, a));
        }
        sum += p;
      }
      if (std::abs(sum - 1.0) > kRowSumTolerance) {
        std::ostringstream msg;
        msg.precision(12);
        msg << "transition row " << RowName(s, a) << " sums to " << sum
            << ", expected 1";
        Fail(ErrorKind::kValidation, msg.str());
      }
    }
  }
}

TabularMdp ParseMdpJson(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    const auto [line, col] = LineColumn(text, e.byte == 0 ? 0 : e.byte - 1);
    Fail(ErrorKind::kParse, "malformed JSON at line " + std::to_string(line) +
                                ", column " + std::to_string(col) + ": " +
                                e.what());
  }
  if (!doc.is_object()) {
    Fail(ErrorKind::kValidation, "mdp document must be a JSON object");
  }
  const auto n_states = RequireField<std::int64_t>(doc, "n_states");
  const auto n_actions = RequireField<std::int64_t>(doc, "n_actions");
  const auto gamma = RequireField<double>(doc, "gamma");
  if (n_states <= 0) Fail(ErrorKind::kValidation, "field 'n_states' must be positive");
  if (n_actions <= 0) Fail(ErrorKind::kValidation, "field 'n_actions' must be positive");
  if (!(gamma >= 0.0 && gamma < 1.0)) {
    Fail(ErrorKind::kValidation, "field 'gamma' must lie in [0, 1)");
  }
  TabularMdp mdp(static_cast<std::size_t>(n_states),
                 static_cast<std::size_t>(n_actions), gamma);
  if (!doc.contains("transitions") || !doc["transitions"].is_array()) {
    Fail(ErrorKind::kValidation, "field 'transitions' must be an array");
  }
  const auto& rows = doc["transitions"];
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& row = rows[i];
    const std::string where = "transitions[" + std::to_string(i) + "]";
    if (!row.is_array() || row.size() != 5) {
      Fail(ErrorKind::kValidation, where + " must be [s, a, s', p, r]");
    }
    for (std::size_t k = 0; k < 3; ++k) {
      if (!row[k].is_number_integer() || row[k].get<std::int64_t>() < 0) {
        Fail(ErrorKind::kValidation,
             where + "[" + std::to_string(k) + "] must be a non-negative integer");
      }
    }
    if (!row[3].is_number() || !row[4].is_number()) {
      Fail(ErrorKind::kValidation, where + " probability and reward must be numbers");
    }
    const auto s = row[0].get<std::size_t>();
    const auto a = row[1].get<std::size_t>();
    const auto next = row[2].get<std::size_t>();
    if (s >= mdp.num_states() || next >= mdp.num_states() ||
        a >= mdp.num_actions()) {
      Fail(ErrorKind::kValidation, where + " index out of range");
    }
    mdp.set(s, a, next, row[3].get<double>(), row[4].get<double>());
  }
  if (doc.contains("start_state")) {
    mdp.set_start_state(RequireField<std::size_t>(doc, "start_state"));
  }
  mdp.Validate();
  return mdp;
}

TabularMdp LoadMdpJson(const std::string& path) {
  std::ifstream in(path);
  if (!in) Fail(ErrorKind::kIo, "cannot open mdp file '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return ParseMdpJson(buffer.str());
}

std::size_t QTable::Argmax(std::size_t s) const {
  std::size_t best = 0;
  for (std::size_t a = 1; a < n_actions; ++a) {
    if (at(s, a) > at(s, best)) best = a;
  }
  return best;
}

double QTable::Max(std::size_t s) const { return at(s, Argmax(s)); }

namespace {

double BackupValue(const TabularMdp& mdp, std::size_t s, std::size_t a,
                   const std::vector<double>& next_values) {
  double total = 0.0;
  for (std::size_t n = 0; n < mdp.num_states(); ++n) {
    const double p = mdp.transition(s, a, n);
    if (p == 0.0) continue;
    total += p * (mdp.reward(s, a, n) + mdp.gamma() * next_values[n]);
  }
  return total;
}

bool WithinTolerance(double delta, double gamma, double tol, double* bound) {
  *bound = gamma == 0.0 ? 0.0 : delta * gamma / (1.0 - gamma);
  return *bound <= tol;
}

void CheckSolverArgs(const TabularMdp& mdp, double tol, int max_iters) {
  mdp.Validate();
  if (!(tol > 0.0)) Fail(ErrorKind::kValidation, "tol must be positive");
  if (max_iters <= 0) Fail(ErrorKind::kValidation, "max_iters must be positive");
}

}  // namespace

ValueIterationResult ValueIteration(const TabularMdp& mdp, double tol,
                                    int max_iters, bool record_history) {
  CheckSolverArgs(mdp, tol, max_iters);
  const std::size_t ns = mdp.num_states();
  ValueIterationResult result;
  std::vector<double> v(ns, 0.0);
  std::vector<double> next(ns, 0.0);
  if (record_history) result.history.push_back(v);
  for (int k = 0; k < max_iters; ++k) {
    double delta = 0.0;
    for (std::size_t s = 0; s < ns; ++s) {
      double best = -std::numeric_limits<double>::infinity();
      for (std::size_t a = 0; a < mdp.num_actions(); ++a) {
        best = std::max(best, BackupValue(mdp, s, a, v));
      }
      next[s] = best;
      delta = std::max(delta, std::abs(next[s] - v[s]));
    }
    v.swap(next);
    if (record_history) result.history.push_back(v);
    result.stats.iterations = k + 1;
    result.stats.last_delta = delta;
    if (WithinTolerance(delta, mdp.gamma(), tol, &result.stats.error_bound)) {
      result.stats.converged = true;
      break;
    }
  }
  result.value.values = std::move(v);
  return result;
}

QValueIterationResult QValueIteration(const TabularMdp& mdp, double tol,
                                      int max_iters) {
  CheckSolverArgs(mdp, tol, max_iters);
  const std::size_t ns = mdp.num_states();
  const std::size_t na = mdp.num_actions();
  QValueIterationResult result;
  QTable q(ns, na);
  QTable next(ns, na);
  std::vector<double> greedy(ns, 0.0);
  for (int k = 0; k < max_iters; ++k) {
    for (std::size_t s = 0; s < ns; ++s) greedy[s] = q.Max(s);
    double delta = 0.0;
    for (std::size_t s = 0; s < ns; ++s) {
      for (std::size_t a = 0; a < na; ++a) {
        next.at(s, a) = BackupValue(mdp, s, a, greedy);
        delta = std::max(delta, std::abs(next.at(s, a) - q.at(s, a)));
      }
    }
    std::swap(q, next);
    result.stats.iterations = k + 1;
    result.stats.last_delta = delta;
    if (WithinTolerance(delta, mdp.gamma(), tol, &result.stats.error_bound)) {
      result.stats.converged = true;
      break;
    }
  }
  result.q = std::move(q);
  return result;
}

Transition SimulateStep(const TabularMdp& mdp, std::size_t s, std::size_t a,
                        Rng& rng) {
  if (s >= mdp.num_states() || a >= mdp.num_actions()) {
    Fail(ErrorKind::kUsage, "state or action index out of range");
  }
  const double u = rng.Uniform();
  double cumulative = 0.0;
  std::size_t last_possible = 0;
  for (std::size_t n = 0; n < mdp.num_states(); ++n) {
    const double p = mdp.transition(s, a, n);
    if (p <= 0.0) continue;
    last_possible = n;
    cumulative += p;
    if (u < cumulative) return {n, mdp.reward(s, a, n)};
  }
  // Row sums may fall short of 1 by rounding.
  return {last_possible, mdp.reward(s, a, last_possible)};
}

QTable TabularQLearning(const TabularMdp& mdp, const QLearningSettings& settings) {
  mdp.Validate();
  if (!(settings.alpha >= 0.0 && settings.alpha <= 1.0)) {
    Fail(ErrorKind::kValidation, "alpha must lie in [0, 1]");
  }
  if (settings.episodes <= 0 || settings.steps_per_episode <= 0) {
    Fail(ErrorKind::kValidation, "episodes and steps_per_episode must be positive");
  }
  settings.epsilon.Validate();
  const std::size_t ns = mdp.num_states();
  const std::size_t na = mdp.num_actions();
  Rng rng(settings.seed);
  QTable q(ns, na);
  if (settings.init == QInit::kRandom) {
    for (double& value : q.q) value = rng.Uniform(-1.0, 1.0);
  }
  const double alpha = settings.alpha;
  for (int episode = 0; episode < settings.episodes; ++episode) {
    const double epsilon = settings.epsilon.Value(episode, settings.episodes);
    std::size_t s = settings.random_start ? rng.Index(ns) : mdp.start_state();
    for (int step = 0; step < settings.steps_per_episode; ++step) {
      if (mdp.IsAbsorbing(s)) break;
      std::size_t a;
      if (rng.Uniform() < epsilon) {
        a = rng.Index(na);
      } else {
        a = q.Argmax(s);
      }
      const Transition t = SimulateStep(mdp, s, a, rng);
      const double target = t.reward + mdp.gamma() * q.Max(t.next_state);
      q.at(s, a) = (1.0 - alpha) * q.at(s, a) + alpha * target;
      s = t.next_state;
    }
  }
  return q;
}

std::vector<double> EvaluatePolicy(const TabularMdp& mdp,
                                   const std::vector<std::size_t>& policy) {
  const std::size_t ns = mdp.num_states();
  if (policy.size() != ns) {
    Fail(ErrorKind::kUsage, "policy length must equal n_states");
  }
  Eigen::MatrixXd system = Eigen::MatrixXd::Identity(ns, ns);
  Eigen::VectorXd rhs(ns);
  for (std::size_t s = 0; s < ns; ++s) {
    const std::size_t a = policy[s];
    rhs[s] = mdp.ExpectedReward(s, a);
    for (std::size_t n = 0; n < ns; ++n) {
      system(s, n) -= mdp.gamma() * mdp.transition(s, a, n);
    }
  }
  const Eigen::VectorXd v = system.partialPivLu().solve(rhs);
  return {v.data(), v.data() + ns};
}

TabularMdp RandomMdp(std::size_t n_states, std::size_t n_actions, double gamma,
                     std::uint64_t seed, double reward_scale) {
  Rng rng(seed);
  TabularMdp mdp(n_states, n_actions, gamma);
  for (std::size_t s = 0; s < n_states; ++s) {
    for (std::size_t a = 0; a < n_actions; ++a) {
      std::vector<double> weights(n_states);
      double total = 0.0;
      for (double& w : weights) {
        // -log(u) gives a flat Dirichlet row after normalisation.
        w = -std::log(1.0 - rng.Uniform());
        total += w;
      }
      for (std::size_t n = 0; n < n_states; ++n) {
        mdp.set(s, a, n, weights[n] / total,
                rng.Uniform(-reward_scale, reward_scale));
      }
    }
  }
  return mdp;
}

}  // namespace hebbdqn::mdp
