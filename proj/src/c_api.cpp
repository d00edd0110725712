#include "hebbdqn/hebbdqn.h"

#include <cstdlib>
#include <cstring>
#include <exception>
#include <filesystem>
#include <memory>
#include <new>
#include <nlohmann/json.hpp>
#include <string>

#include "hebbdqn/checkpoint.hpp"
#include "hebbdqn/config.hpp"
#include "hebbdqn/envs.hpp"
#include "hebbdqn/error.hpp"
#include "hebbdqn/evaluate.hpp"
#include "hebbdqn/gradcheck.hpp"
#include "hebbdqn/mdp.hpp"
#include "hebbdqn/metrics.hpp"
#include "hebbdqn/network.hpp"
#include "hebbdqn/png_dump.hpp"
#include "hebbdqn/trainer.hpp"

struct hdqn_mdp {
  hebbdqn::mdp::TabularMdp mdp;
};

struct hdqn_config {
  hebbdqn::TrainConfig config;
};

struct hdqn_env {
  std::unique_ptr<hebbdqn::envs::Environment> env;
  std::size_t width = 0;
  std::size_t height = 0;
};

namespace {

thread_local std::string g_last_error;

hdqn_status StatusOf(hebbdqn::ErrorKind kind) {
  using hebbdqn::ErrorKind;
  switch (kind) {
    case ErrorKind::kValidation: return HDQN_ERR_VALIDATION;
    case ErrorKind::kParse: return HDQN_ERR_PARSE;
    case ErrorKind::kShape: return HDQN_ERR_SHAPE;
    case ErrorKind::kState: return HDQN_ERR_STATE;
    case ErrorKind::kIo: return HDQN_ERR_IO;
    case ErrorKind::kUsage: return HDQN_ERR_USAGE;
    case ErrorKind::kRuntime: return HDQN_ERR_RUNTIME;
  }
  return HDQN_ERR_RUNTIME;
}

template <typename Fn>
hdqn_status Guard(Fn&& fn) {
  g_last_error.clear();
  try {
    fn();
    return HDQN_OK;
  } catch (const hebbdqn::Error& e) {
    g_last_error = e.what();
    return StatusOf(e.kind());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return HDQN_ERR_RUNTIME;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return HDQN_ERR_RUNTIME;
  } catch (...) {
    g_last_error = "unknown failure";
    return HDQN_ERR_RUNTIME;
  }
}

char* CopyString(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

hdqn_status NullArgument(const char* what) {
  g_last_error = std::string(what) + " is NULL";
  return HDQN_ERR_NULL_ARGUMENT;
}

void CopyFrame(const hebbdqn::envs::Frame& frame, std::uint8_t* out, std::size_t len) {
  if (out == nullptr) return;
  if (len != frame.data.size()) {
    hebbdqn::Fail(hebbdqn::ErrorKind::kUsage, "frame buffer holds " + std::to_string(len) +
                                                  " bytes, frame needs " + std::to_string(frame.data.size()));
  }
  std::memcpy(out, frame.data.data(), len);
}

std::vector<std::size_t> GreedyPolicy(const hebbdqn::mdp::QTable& q) {
  std::vector<std::size_t> policy;
  for (std::size_t s = 0; s < q.n_states; ++s) policy.push_back(q.Argmax(s));
  return policy;
}

nlohmann::json QJson(const hebbdqn::mdp::QTable& q) {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t s = 0; s < q.n_states; ++s) {
    std::vector<double> row(q.q.begin() + static_cast<std::ptrdiff_t>(s * q.n_actions),
                            q.q.begin() + static_cast<std::ptrdiff_t>((s + 1) * q.n_actions));
    rows.push_back(row);
  }
  return rows;
}

}  // namespace

extern "C" {

const char* hdqn_last_error(void) { return g_last_error.c_str(); }

const char* hdqn_status_name(hdqn_status status) {
  switch (status) {
    case HDQN_OK: return "ok";
    case HDQN_ERR_VALIDATION: return "validation error";
    case HDQN_ERR_PARSE: return "parse error";
    case HDQN_ERR_SHAPE: return "shape error";
    case HDQN_ERR_STATE: return "state error";
    case HDQN_ERR_IO: return "i/o error";
    case HDQN_ERR_USAGE: return "usage error";
    case HDQN_ERR_RUNTIME: return "runtime error";
    case HDQN_ERR_NULL_ARGUMENT: return "null argument";
  }
  return "unknown status";
}

const char* hdqn_version(void) { return "0.1.0"; }

void hdqn_string_free(char* s) { std::free(s); }

hdqn_status hdqn_mdp_load(const char* path, hdqn_mdp** out) {
  if (path == nullptr) return NullArgument("path");
  if (out == nullptr) return NullArgument("out");
  *out = nullptr;
  return Guard([&] { *out = new hdqn_mdp{hebbdqn::mdp::LoadMdpJson(path)}; });
}

hdqn_status hdqn_mdp_parse(const char* json, hdqn_mdp** out) {
  if (json == nullptr) return NullArgument("json");
  if (out == nullptr) return NullArgument("out");
  *out = nullptr;
  return Guard([&] { *out = new hdqn_mdp{hebbdqn::mdp::ParseMdpJson(json)}; });
}

void hdqn_mdp_free(hdqn_mdp* mdp) { delete mdp; }

hdqn_status hdqn_mdp_dims(const hdqn_mdp* mdp, size_t* n_states, size_t* n_actions, double* gamma) {
  if (mdp == nullptr) return NullArgument("mdp");
  return Guard([&] {
    if (n_states) *n_states = mdp->mdp.num_states();
    if (n_actions) *n_actions = mdp->mdp.num_actions();
    if (gamma) *gamma = mdp->mdp.gamma();
  });
}

void hdqn_solve_options_default(hdqn_solve_options* o) {
  if (o == nullptr) return;
  o->tol = 1e-8;
  o->max_iters = 100000;
  o->seed = 0;
  o->alpha = 0.1;
  o->episodes = 500;
  o->steps_per_episode = 100;
  o->epsilon_start = 1.0;
  o->epsilon_end = 0.1;
  o->random_init = 0;
}

hdqn_status hdqn_mdp_solve(const hdqn_mdp* mdp, const char* algo, const hdqn_solve_options* options,
                           char** json_out) {
  if (mdp == nullptr) return NullArgument("mdp");
  if (algo == nullptr) return NullArgument("algo");
  if (json_out == nullptr) return NullArgument("json_out");
  *json_out = nullptr;
  return Guard([&] {
    namespace m = hebbdqn::mdp;
    hdqn_solve_options opts;
    hdqn_solve_options_default(&opts);
    if (options != nullptr) opts = *options;
    const std::string which = algo;
    nlohmann::json j;
    j["algo"] = which;
    j["n_states"] = mdp->mdp.num_states();
    j["n_actions"] = mdp->mdp.num_actions();
    j["gamma"] = mdp->mdp.gamma();
    if (which == "vi" || which == "qvi") {
      if (!(opts.tol > 0.0)) hebbdqn::Fail(hebbdqn::ErrorKind::kValidation, "tol must be positive");
      if (opts.max_iters <= 0) hebbdqn::Fail(hebbdqn::ErrorKind::kValidation, "max_iters must be positive");
      m::SolveStats stats;
      if (which == "vi") {
        const auto r = m::ValueIteration(mdp->mdp, opts.tol, opts.max_iters);
        stats = r.stats;
        j["values"] = r.value.values;
        // Greedy policy from one Bellman backup of V.
        const auto& mm = mdp->mdp;
        m::QTable q(mm.num_states(), mm.num_actions());
        for (std::size_t s = 0; s < mm.num_states(); ++s) {
          for (std::size_t a = 0; a < mm.num_actions(); ++a) {
            double acc = 0.0;
            for (std::size_t t = 0; t < mm.num_states(); ++t) {
              acc += mm.transition(s, a, t) * (mm.reward(s, a, t) + mm.gamma() * r.value.values[t]);
            }
            q.at(s, a) = acc;
          }
        }
        j["policy"] = GreedyPolicy(q);
      } else {
        const auto r = m::QValueIteration(mdp->mdp, opts.tol, opts.max_iters);
        stats = r.stats;
        std::vector<double> values;
        for (std::size_t s = 0; s < r.q.n_states; ++s) values.push_back(r.q.Max(s));
        j["values"] = values;
        j["q"] = QJson(r.q);
        j["policy"] = GreedyPolicy(r.q);
      }
      j["iterations"] = stats.iterations;
      j["last_delta"] = stats.last_delta;
      j["error_bound"] = stats.error_bound;
      j["converged"] = stats.converged;
      j["tol"] = opts.tol;
    } else if (which == "qlearn") {
      m::QLearningSettings s;
      s.alpha = opts.alpha;
      s.episodes = opts.episodes;
      s.steps_per_episode = opts.steps_per_episode;
      s.epsilon = hebbdqn::Schedule::Linear(opts.epsilon_start, opts.epsilon_end, 1.0);
      s.seed = opts.seed;
      s.init = opts.random_init ? m::QInit::kRandom : m::QInit::kZeros;
      const auto q = m::TabularQLearning(mdp->mdp, s);
      std::vector<double> values;
      for (std::size_t st = 0; st < q.n_states; ++st) values.push_back(q.Max(st));
      j["values"] = values;
      j["q"] = QJson(q);
      j["policy"] = GreedyPolicy(q);
      j["alpha"] = opts.alpha;
      j["episodes"] = opts.episodes;
      j["steps_per_episode"] = opts.steps_per_episode;
      j["seed"] = opts.seed;
    } else {
      hebbdqn::Fail(hebbdqn::ErrorKind::kUsage, "unknown algorithm '" + which + "' (vi|qvi|qlearn)");
    }
    *json_out = CopyString(j.dump(2) + "\n");
  });
}

hdqn_status hdqn_config_new(hdqn_config** out) {
  if (out == nullptr) return NullArgument("out");
  *out = nullptr;
  return Guard([&] { *out = new hdqn_config{}; });
}

hdqn_status hdqn_config_load(const char* path, hdqn_config** out) {
  if (path == nullptr) return NullArgument("path");
  if (out == nullptr) return NullArgument("out");
  *out = nullptr;
  return Guard([&] { *out = new hdqn_config{hebbdqn::LoadConfig(path)}; });
}

void hdqn_config_free(hdqn_config* config) { delete config; }

hdqn_status hdqn_config_set(hdqn_config* config, const char* key, const char* value) {
  if (config == nullptr) return NullArgument("config");
  if (key == nullptr) return NullArgument("key");
  if (value == nullptr) return NullArgument("value");
  return Guard([&] { hebbdqn::SetConfigValue(config->config, key, value); });
}

hdqn_status hdqn_config_override(hdqn_config* config, const char* assignment) {
  if (config == nullptr) return NullArgument("config");
  if (assignment == nullptr) return NullArgument("assignment");
  return Guard([&] { hebbdqn::ApplyOverride(config->config, assignment); });
}

hdqn_status hdqn_config_get(const hdqn_config* config, const char* key, char** value_out) {
  if (config == nullptr) return NullArgument("config");
  if (key == nullptr) return NullArgument("key");
  if (value_out == nullptr) return NullArgument("value_out");
  *value_out = nullptr;
  return Guard([&] { *value_out = CopyString(hebbdqn::GetConfigValue(config->config, key)); });
}

hdqn_status hdqn_config_dump(const hdqn_config* config, char** text_out) {
  if (config == nullptr) return NullArgument("config");
  if (text_out == nullptr) return NullArgument("text_out");
  *text_out = nullptr;
  return Guard([&] { *text_out = CopyString(hebbdqn::DumpConfig(config->config)); });
}

hdqn_status hdqn_config_validate(const hdqn_config* config) {
  if (config == nullptr) return NullArgument("config");
  return Guard([&] { config->config.Validate(); });
}

hdqn_status hdqn_env_new(const char* name, uint64_t seed, hdqn_env** out) {
  if (name == nullptr) return NullArgument("name");
  if (out == nullptr) return NullArgument("out");
  *out = nullptr;
  return Guard([&] {
    auto env = hebbdqn::envs::MakeEnv(name, seed);
    // Probe the frame size on a clone so the handle's own stream is untouched.
    const auto frame = env->Clone()->Reset();
    *out = new hdqn_env{std::move(env), frame.width, frame.height};
  });
}

void hdqn_env_free(hdqn_env* env) { delete env; }

hdqn_status hdqn_env_info(const hdqn_env* env, size_t* n_actions, size_t* width, size_t* height) {
  if (env == nullptr) return NullArgument("env");
  return Guard([&] {
    if (n_actions) *n_actions = env->env->spec().n_actions;
    if (width) *width = env->width;
    if (height) *height = env->height;
  });
}

hdqn_status hdqn_env_reset(hdqn_env* env, uint8_t* frame_out, size_t frame_len) {
  if (env == nullptr) return NullArgument("env");
  return Guard([&] { CopyFrame(env->env->Reset(), frame_out, frame_len); });
}

hdqn_status hdqn_env_step(hdqn_env* env, size_t action, uint8_t* frame_out, size_t frame_len,
                          double* reward, int* terminated) {
  if (env == nullptr) return NullArgument("env");
  return Guard([&] {
    const auto result = env->env->Step(action);
    CopyFrame(result.frame, frame_out, frame_len);
    if (reward) *reward = result.reward;
    if (terminated) *terminated = result.terminated ? 1 : 0;
  });
}

hdqn_status hdqn_env_list(char** names_out) {
  if (names_out == nullptr) return NullArgument("names_out");
  *names_out = nullptr;
  return Guard([&] {
    std::string list;
    for (const auto& n : hebbdqn::envs::AvailableEnvs()) list += (list.empty() ? "" : ",") + n;
    *names_out = CopyString(list);
  });
}

hdqn_status hdqn_train(const hdqn_config* config, const char* out_dir, hdqn_episode_callback callback,
                       void* user, char** summary_json_out) {
  if (config == nullptr) return NullArgument("config");
  if (out_dir == nullptr) return NullArgument("out_dir");
  if (summary_json_out) *summary_json_out = nullptr;
  return Guard([&] {
    std::function<void(const hebbdqn::metrics::EpisodeRecord&)> hook;
    if (callback != nullptr) {
      hook = [callback, user](const hebbdqn::metrics::EpisodeRecord& r) {
        const std::string phase(hebbdqn::metrics::ToString(r.phase));
        hdqn_episode_record c{r.episode, phase.c_str(), r.reward, r.loss ? 1 : 0, r.loss.value_or(0.0),
                              r.max_q, r.epsilon, r.learning_rate};
        callback(&c, user);
      };
    }
    const auto result = hebbdqn::TrainToDirectory(config->config, out_dir, hook);
    if (summary_json_out) *summary_json_out = CopyString(hebbdqn::metrics::SummaryToJson(result.summary));
  });
}

void hdqn_eval_options_default(hdqn_eval_options* o) {
  if (o == nullptr) return;
  o->episodes = 10;
  o->epsilon = 0.0;
  o->seed = 0;
  o->max_steps_per_episode = 3000;
  o->threads = 1;
  o->dump_frames_dir = nullptr;
}

hdqn_status hdqn_evaluate(const char* checkpoint_path, const char* env_name, const hdqn_eval_options* options,
                          char** summary_json_out) {
  if (checkpoint_path == nullptr) return NullArgument("checkpoint_path");
  if (env_name == nullptr) return NullArgument("env_name");
  if (summary_json_out == nullptr) return NullArgument("summary_json_out");
  *summary_json_out = nullptr;
  return Guard([&] {
    hdqn_eval_options opts;
    hdqn_eval_options_default(&opts);
    if (options != nullptr) opts = *options;
    const auto net = hebbdqn::agent::QNetwork::FromCheckpoint(hebbdqn::LoadCheckpoint(checkpoint_path));
    hebbdqn::EvalSettings settings;
    settings.episodes = opts.episodes;
    settings.epsilon = opts.epsilon;
    settings.seed = opts.seed;
    settings.max_steps_per_episode = opts.max_steps_per_episode;
    settings.threads = opts.threads;
    hebbdqn::FrameSink sink;
    std::string dump_dir;
    if (opts.dump_frames_dir != nullptr) {
      dump_dir = opts.dump_frames_dir;
      std::error_code ec;
      std::filesystem::create_directories(dump_dir, ec);
      if (ec) hebbdqn::Fail(hebbdqn::ErrorKind::kIo, "cannot create '" + dump_dir + "': " + ec.message());
      sink = [&dump_dir](std::size_t episode, std::size_t step, const hebbdqn::envs::Frame& raw,
                         const hebbdqn::preprocess::ProcessedFrame* processed) {
        char stem[64];
        std::snprintf(stem, sizeof(stem), "ep%03zu_step%05zu", episode, step);
        const auto base = std::filesystem::path(dump_dir) / stem;
        hebbdqn::WriteFramePng(base.string() + "_raw.png", raw);
        if (processed != nullptr) hebbdqn::WriteProcessedPng(base.string() + "_processed.png", *processed);
      };
    }
    const auto summary = hebbdqn::Evaluate(net, env_name, settings, sink);
    *summary_json_out = CopyString(hebbdqn::EvalSummaryToJson(summary));
  });
}

hdqn_status hdqn_gradcheck(uint64_t seed, char** report_json_out, int* all_passed) {
  if (report_json_out == nullptr) return NullArgument("report_json_out");
  *report_json_out = nullptr;
  return Guard([&] {
    const auto results = hebbdqn::RunAllGradchecks(seed);
    nlohmann::json j = nlohmann::json::array();
    bool ok = true;
    for (const auto& r : results) {
      j.push_back({{"name", r.name},
                   {"max_relative_error", r.max_relative_error},
                   {"entries", r.entries_checked},
                   {"skipped", r.entries_skipped},
                   {"passed", r.passed}});
      ok = ok && r.passed;
    }
    if (all_passed) *all_passed = ok ? 1 : 0;
    *report_json_out = CopyString(j.dump(2) + "\n");
  });
}

hdqn_status hdqn_export_plots_data(const char* run_dir, const char* out_dir, char** written_json_out) {
  if (run_dir == nullptr) return NullArgument("run_dir");
  if (out_dir == nullptr) return NullArgument("out_dir");
  if (written_json_out) *written_json_out = nullptr;
  return Guard([&] {
    const auto written = hebbdqn::metrics::ExportPlotsData(run_dir, out_dir);
    if (written_json_out) *written_json_out = CopyString(nlohmann::json(written).dump() + "\n");
  });
}

}  // extern "C"
