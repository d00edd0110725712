// hebbdqn command-line driver. Talks to the engine only through hebbdqn.h.
#include <CLI11.hpp>
#include <cstdio>
#include <fstream>
#include <malloc.h>
#include <iostream>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "hebbdqn/hebbdqn.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

int ExitCodeFor(hdqn_status status) {
  switch (status) {
    case HDQN_OK: return kExitOk;
    case HDQN_ERR_VALIDATION:
    case HDQN_ERR_PARSE:
    case HDQN_ERR_USAGE:
    case HDQN_ERR_NULL_ARGUMENT: return kExitUsage;
    default: return kExitRuntime;
  }
}

// Thrown after a failed library call has been reported.
struct CallFailed {
  hdqn_status status;
};

void Check(hdqn_status status) {
  if (status == HDQN_OK) return;
  std::cerr << "error (" << hdqn_status_name(status) << "): " << hdqn_last_error() << "\n";
  throw CallFailed{status};
}

// Owns a string returned by the library.
class OwnedString {
 public:
  OwnedString() = default;
  ~OwnedString() { hdqn_string_free(p_); }
  OwnedString(const OwnedString&) = delete;
  OwnedString& operator=(const OwnedString&) = delete;
  char** out() { return &p_; }
  std::string str() const { return p_ ? p_ : ""; }

 private:
  char* p_ = nullptr;
};

template <typename T, void (*Free)(T*)>
class Handle {
 public:
  Handle() = default;
  ~Handle() { Free(p_); }
  Handle(const Handle&) = delete;
  Handle& operator=(const Handle&) = delete;
  T** out() { return &p_; }
  T* get() const { return p_; }

 private:
  T* p_ = nullptr;
};

using MdpHandle = Handle<hdqn_mdp, hdqn_mdp_free>;
using ConfigHandle = Handle<hdqn_config, hdqn_config_free>;

void WriteFile(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    std::cerr << "error: cannot write '" << path << "'\n";
    throw CallFailed{HDQN_ERR_IO};
  }
  out << text;
}

std::string Num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

void PrintResolved(const std::vector<std::pair<std::string, std::string>>& items) {
  std::cout << "# resolved configuration\n";
  for (const auto& [k, v] : items) std::cout << k << " = " << v << "\n";
  std::cout << std::flush;
}

// ---- solve-mdp ---------------------------------------------------------

struct SolveArgs {
  std::string mdp;
  std::string algo = "vi";
  double tol = 1e-8;
  int max_iters = 100000;
  std::uint64_t seed = 0;
  double alpha = 0.1;
  int episodes = 500;
  int steps = 100;
  double eps_start = 1.0;
  double eps_end = 0.1;
  bool random_init = false;
  std::string out;
};

void PrintTables(const nlohmann::json& r) {
  const auto& values = r.at("values");
  const auto& policy = r.at("policy");
  const bool has_q = r.contains("q");
  std::printf("%-6s %14s %7s", "state", "V", "policy");
  if (has_q) {
    for (std::size_t a = 0; a < r.at("q").at(0).size(); ++a) std::printf(" %15s", ("Q[a=" + std::to_string(a) + "]").c_str());
  }
  std::printf("\n");
  for (std::size_t s = 0; s < values.size(); ++s) {
    std::printf("%-6zu %14.6f %7d", s, values[s].get<double>(), policy[s].get<int>());
    if (has_q) {
      for (const auto& q : r.at("q").at(s)) std::printf(" %15.6f", q.get<double>());
    }
    std::printf("\n");
  }
  if (r.contains("iterations")) {
    std::printf("iterations=%d last_delta=%.3g error_bound=%.3g converged=%s\n", r.at("iterations").get<int>(),
                r.at("last_delta").get<double>(), r.at("error_bound").get<double>(),
                r.at("converged").get<bool>() ? "true" : "false");
  }
}

int RunSolve(const SolveArgs& a) {
  PrintResolved({{"mdp", a.mdp},
                 {"algo", a.algo},
                 {"tol", Num(a.tol)},
                 {"max_iters", std::to_string(a.max_iters)},
                 {"seed", std::to_string(a.seed)},
                 {"alpha", Num(a.alpha)},
                 {"episodes", std::to_string(a.episodes)},
                 {"steps_per_episode", std::to_string(a.steps)},
                 {"epsilon_start", Num(a.eps_start)},
                 {"epsilon_end", Num(a.eps_end)},
                 {"random_init", a.random_init ? "true" : "false"},
                 {"out", a.out.empty() ? "-" : a.out}});
  MdpHandle mdp;
  Check(hdqn_mdp_load(a.mdp.c_str(), mdp.out()));
  hdqn_solve_options opts;
  hdqn_solve_options_default(&opts);
  opts.tol = a.tol;
  opts.max_iters = a.max_iters;
  opts.seed = a.seed;
  opts.alpha = a.alpha;
  opts.episodes = a.episodes;
  opts.steps_per_episode = a.steps;
  opts.epsilon_start = a.eps_start;
  opts.epsilon_end = a.eps_end;
  opts.random_init = a.random_init ? 1 : 0;
  OwnedString json;
  Check(hdqn_mdp_solve(mdp.get(), a.algo.c_str(), &opts, json.out()));
  PrintTables(nlohmann::json::parse(json.str()));
  if (!a.out.empty()) WriteFile(a.out, json.str());
  return kExitOk;
}

// ---- train ---------------------------------------------------------------

struct TrainArgs {
  std::string env;
  std::string agent;
  std::string config;
  std::string out = "runs/latest";
  std::vector<std::string> overrides;
  bool quiet = false;
};

void OnEpisode(const hdqn_episode_record* r, void* user) {
  const bool quiet = *static_cast<bool*>(user);
  if (quiet && r->episode % 100 != 0) return;
  if (r->has_loss) {
    std::printf("episode %zu [%s] reward=%.3f loss=%.6g max_q=%.4f eps=%.3f lr=%.3g\n", r->episode, r->phase,
                r->reward, r->loss, r->max_q, r->epsilon, r->learning_rate);
  } else {
    std::printf("episode %zu [%s] reward=%.3f loss=- max_q=%.4f eps=%.3f lr=%.3g\n", r->episode, r->phase,
                r->reward, r->max_q, r->epsilon, r->learning_rate);
  }
  std::fflush(stdout);
}

int RunTrain(TrainArgs a) {
  ConfigHandle cfg;
  if (a.config.empty()) {
    Check(hdqn_config_new(cfg.out()));
  } else {
    Check(hdqn_config_load(a.config.c_str(), cfg.out()));
  }
  if (!a.env.empty()) Check(hdqn_config_set(cfg.get(), "env", a.env.c_str()));
  if (!a.agent.empty()) Check(hdqn_config_set(cfg.get(), "agent", a.agent.c_str()));
  for (const auto& o : a.overrides) Check(hdqn_config_override(cfg.get(), o.c_str()));
  Check(hdqn_config_validate(cfg.get()));
  OwnedString dump;
  Check(hdqn_config_dump(cfg.get(), dump.out()));
  std::cout << "# resolved configuration\n" << dump.str() << "out = " << a.out << "\n" << std::flush;
  OwnedString summary;
  Check(hdqn_train(cfg.get(), a.out.c_str(), OnEpisode, &a.quiet, summary.out()));
  std::cout << summary.str();
  return kExitOk;
}

// ---- eval -------------------------------------------------------------------

struct EvalArgs {
  std::string checkpoint;
  std::string env = "mini-catch";
  std::size_t episodes = 10;
  double epsilon = 0.0;
  std::uint64_t seed = 0;
  std::size_t max_steps = 3000;
  std::size_t threads = 1;
  std::string dump_frames;
  std::string out;
};

int RunEval(const EvalArgs& a) {
  PrintResolved({{"checkpoint", a.checkpoint},
                 {"env", a.env},
                 {"episodes", std::to_string(a.episodes)},
                 {"epsilon", Num(a.epsilon)},
                 {"seed", std::to_string(a.seed)},
                 {"max_steps_per_episode", std::to_string(a.max_steps)},
                 {"threads", std::to_string(a.threads)},
                 {"dump_frames", a.dump_frames.empty() ? "-" : a.dump_frames},
                 {"out", a.out.empty() ? "-" : a.out}});
  hdqn_eval_options opts;
  hdqn_eval_options_default(&opts);
  opts.episodes = a.episodes;
  opts.epsilon = a.epsilon;
  opts.seed = a.seed;
  opts.max_steps_per_episode = a.max_steps;
  opts.threads = a.threads;
  opts.dump_frames_dir = a.dump_frames.empty() ? nullptr : a.dump_frames.c_str();
  OwnedString json;
  Check(hdqn_evaluate(a.checkpoint.c_str(), a.env.c_str(), &opts, json.out()));
  std::cout << json.str();
  if (!a.out.empty()) WriteFile(a.out, json.str());
  return kExitOk;
}

// ---- gradcheck / export ---------------------------------------------------

int RunGradcheck(std::uint64_t seed) {
  PrintResolved({{"seed", std::to_string(seed)}});
  OwnedString json;
  int all_passed = 0;
  Check(hdqn_gradcheck(seed, json.out(), &all_passed));
  const auto report = nlohmann::json::parse(json.str());
  std::printf("%-28s %10s %8s %20s  %s\n", "check", "entries", "skipped", "max_relative_error", "result");
  for (const auto& r : report) {
    std::printf("%-28s %10zu %8zu %20.3e  %s\n", r.at("name").get<std::string>().c_str(),
                r.at("entries").get<std::size_t>(), r.at("skipped").get<std::size_t>(),
                r.at("max_relative_error").get<double>(), r.at("passed").get<bool>() ? "PASS" : "FAIL");
  }
  return all_passed ? kExitOk : kExitRuntime;
}

int RunExport(const std::string& run_dir, const std::string& out_dir) {
  const std::string out = out_dir.empty() ? run_dir + "/plots" : out_dir;
  PrintResolved({{"run_dir", run_dir}, {"out", out}});
  OwnedString json;
  Check(hdqn_export_plots_data(run_dir.c_str(), out.c_str(), json.out()));
  for (const auto& path : nlohmann::json::parse(json.str())) std::cout << "wrote " << path.get<std::string>() << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  // Training allocates many short-lived multi-megabyte buffers; keep them on
  // the heap instead of paying an mmap/munmap and page faults per call.
  mallopt(M_MMAP_THRESHOLD, 32 << 20);
  mallopt(M_TRIM_THRESHOLD, 512 << 20);
  CLI::App app{"hebbdqn: tabular solvers, DQN variants and Hebbian-plastic agents on built-in mini-games"};
  app.set_version_flag("--version", std::string(hdqn_version()));
  app.require_subcommand(1);

  SolveArgs solve;
  auto* solve_cmd = app.add_subcommand("solve-mdp", "Solve a tabular MDP given as JSON");
  solve_cmd->add_option("--mdp", solve.mdp, "MDP JSON file")->required();
  solve_cmd->add_option("--algo", solve.algo, "Solver")->check(CLI::IsMember({"vi", "qvi", "qlearn"}));
  solve_cmd->add_option("--tol", solve.tol, "Stopping tolerance on the distance to the fixed point");
  solve_cmd->add_option("--max-iters", solve.max_iters, "Sweep limit for vi/qvi");
  solve_cmd->add_option("--seed", solve.seed, "Seed for qlearn");
  solve_cmd->add_option("--alpha", solve.alpha, "qlearn learning rate");
  solve_cmd->add_option("--episodes", solve.episodes, "qlearn episodes");
  solve_cmd->add_option("--steps-per-episode", solve.steps, "qlearn steps per episode");
  solve_cmd->add_option("--epsilon-start", solve.eps_start, "qlearn initial exploration");
  solve_cmd->add_option("--epsilon-end", solve.eps_end, "qlearn final exploration");
  solve_cmd->add_flag("--random-init", solve.random_init, "qlearn: start Q from uniform noise");
  solve_cmd->add_option("--out", solve.out, "Write the JSON result here");

  TrainArgs train;
  auto* train_cmd = app.add_subcommand("train", "Train an agent and write metrics and checkpoints");
  train_cmd->add_option("--env", train.env, "mini-catch, mini-shooter or tabular:<path>");
  train_cmd->add_option("--agent", train.agent, "Agent")
      ->check(CLI::IsMember({"dqn", "double", "dueling", "dueling-plastic", "dueling+plastic"}));
  train_cmd->add_option("--config", train.config, "key = value config file");
  train_cmd->add_option("--out", train.out, "Output directory");
  train_cmd->add_option("--override", train.overrides, "key=value, repeatable");
  train_cmd->add_flag("--quiet", train.quiet, "Print every 100th episode only");

  EvalArgs eval;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint");
  eval_cmd->add_option("--checkpoint", eval.checkpoint, "Checkpoint file")->required();
  eval_cmd->add_option("--env", eval.env, "Environment");
  eval_cmd->add_option("--episodes", eval.episodes, "Episodes to run");
  eval_cmd->add_option("--epsilon", eval.epsilon, "Exploration rate");
  eval_cmd->add_option("--seed", eval.seed, "Seed");
  eval_cmd->add_option("--max-steps", eval.max_steps, "Step limit per episode");
  eval_cmd->add_option("--threads", eval.threads, "Worker threads");
  eval_cmd->add_option("--dump-frames", eval.dump_frames, "Write raw and processed PNG frames into this directory");
  eval_cmd->add_option("--out", eval.out, "Write the JSON summary here");

  std::uint64_t grad_seed = 0;
  auto* grad_cmd = app.add_subcommand("gradcheck", "Finite-difference check of every op and tiny networks");
  grad_cmd->add_option("--seed", grad_seed, "Seed");

  std::string run_dir;
  std::string plots_out;
  auto* export_cmd = app.add_subcommand("export-plots-data", "Write plot-ready CSVs from a finished run");
  export_cmd->add_option("--run-dir", run_dir, "Training output directory")->required();
  export_cmd->add_option("--out", plots_out, "Output directory (default <run-dir>/plots)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*solve_cmd) return RunSolve(solve);
    if (*train_cmd) return RunTrain(train);
    if (*eval_cmd) return RunEval(eval);
    if (*grad_cmd) return RunGradcheck(grad_seed);
    if (*export_cmd) return RunExport(run_dir, plots_out);
  } catch (const CallFailed& f) {
    return ExitCodeFor(f.status);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}
