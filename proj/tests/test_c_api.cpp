#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "hebbdqn/hebbdqn.h"

namespace fs = std::filesystem;

namespace {

// Takes ownership of a library-allocated string.
std::string Take(char* s) {
  REQUIRE(s != nullptr);
  std::string out(s);
  hdqn_string_free(s);
  return out;
}

const std::string kData = HEBBDQN_TEST_DATA_DIR;

}  // namespace

TEST_SUITE("c_api") {
  TEST_CASE("status names and version") {
    CHECK(std::string(hdqn_status_name(HDQN_OK)) == "ok");
    CHECK(std::string(hdqn_status_name(HDQN_ERR_PARSE)) == "parse error");
    CHECK(std::string(hdqn_version()).size() > 0);
    hdqn_string_free(nullptr);
  }

  TEST_CASE("null arguments are reported, not dereferenced") {
    CHECK(hdqn_mdp_load(nullptr, nullptr) == HDQN_ERR_NULL_ARGUMENT);
    CHECK(std::string(hdqn_last_error()).size() > 0);
    CHECK(hdqn_env_step(nullptr, 0, nullptr, 0, nullptr, nullptr) == HDQN_ERR_NULL_ARGUMENT);
    hdqn_mdp_free(nullptr);
    hdqn_config_free(nullptr);
    hdqn_env_free(nullptr);
  }

  TEST_CASE("solve the single-state mdp") {
    hdqn_mdp* mdp = nullptr;
    REQUIRE(hdqn_mdp_load((kData + "/mdp/single_state.json").c_str(), &mdp) == HDQN_OK);
    std::size_t s = 0, a = 0;
    double gamma = 0;
    CHECK(hdqn_mdp_dims(mdp, &s, &a, &gamma) == HDQN_OK);
    CHECK(s == 1);
    CHECK(gamma == 0.5);
    hdqn_solve_options opts;
    hdqn_solve_options_default(&opts);
    opts.tol = 1e-12;
    char* out = nullptr;
    REQUIRE(hdqn_mdp_solve(mdp, "qvi", &opts, &out) == HDQN_OK);
    const auto j = nlohmann::json::parse(Take(out));
    CHECK(j.at("values")[0].get<double>() == doctest::Approx(2.0).epsilon(1e-10));
    CHECK(j.at("converged").get<bool>());
    CHECK(hdqn_mdp_solve(mdp, "bogus", &opts, &out) == HDQN_ERR_USAGE);
    hdqn_mdp_free(mdp);
  }

  TEST_CASE("malformed mdp json") {
    hdqn_mdp* mdp = nullptr;
    CHECK(hdqn_mdp_parse("{\"n_states\": ", &mdp) == HDQN_ERR_PARSE);
    CHECK(mdp == nullptr);
    CHECK(hdqn_mdp_load("/nonexistent.json", &mdp) == HDQN_ERR_IO);
  }

  TEST_CASE("config handle") {
    hdqn_config* cfg = nullptr;
    REQUIRE(hdqn_config_new(&cfg) == HDQN_OK);
    CHECK(hdqn_config_set(cfg, "episodes", "12") == HDQN_OK);
    CHECK(hdqn_config_override(cfg, "seed=4") == HDQN_OK);
    char* v = nullptr;
    REQUIRE(hdqn_config_get(cfg, "episodes", &v) == HDQN_OK);
    CHECK(Take(v) == "12");
    CHECK(hdqn_config_set(cfg, "nope", "1") == HDQN_ERR_VALIDATION);
    CHECK(std::string(hdqn_last_error()).find("nope") != std::string::npos);
    CHECK(hdqn_config_set(cfg, "gamma", "abc") == HDQN_ERR_PARSE);
    CHECK(hdqn_config_override(cfg, "gamma") == HDQN_ERR_USAGE);
    CHECK(hdqn_config_set(cfg, "gamma", "1.5") == HDQN_OK);
    CHECK(hdqn_config_validate(cfg) == HDQN_ERR_VALIDATION);
    char* dump = nullptr;
    REQUIRE(hdqn_config_dump(cfg, &dump) == HDQN_OK);
    CHECK(Take(dump).find("seed = 4") != std::string::npos);
    hdqn_config_free(cfg);
  }

  TEST_CASE("environment handle") {
    char* names = nullptr;
    REQUIRE(hdqn_env_list(&names) == HDQN_OK);
    CHECK(Take(names).find("mini-catch") != std::string::npos);
    hdqn_env* env = nullptr;
    CHECK(hdqn_env_new("nope", 0, &env) == HDQN_ERR_USAGE);
    REQUIRE(hdqn_env_new("mini-catch", 3, &env) == HDQN_OK);
    std::size_t n = 0, w = 0, h = 0;
    CHECK(hdqn_env_info(env, &n, &w, &h) == HDQN_OK);
    CHECK(n == 3);
    std::vector<std::uint8_t> frame(w * h * 3);
    CHECK(hdqn_env_step(env, 0, frame.data(), frame.size(), nullptr, nullptr) == HDQN_ERR_STATE);
    CHECK(hdqn_env_reset(env, frame.data(), frame.size()) == HDQN_OK);
    CHECK(hdqn_env_reset(env, frame.data(), frame.size() - 1) == HDQN_ERR_USAGE);
    double reward = -1;
    int done = 0;
    int steps = 0;
    while (!done) {
      REQUIRE(hdqn_env_step(env, 0, frame.data(), frame.size(), &reward, &done) == HDQN_OK);
      ++steps;
    }
    CHECK(steps == 15);
    CHECK(hdqn_env_step(env, 7, nullptr, 0, nullptr, nullptr) != HDQN_OK);
    hdqn_env_free(env);
  }

  TEST_CASE("train, evaluate and export through the c api") {
    const fs::path dir = fs::temp_directory_path() / "hebbdqn_c_api_run";
    fs::remove_all(dir);
    hdqn_config* cfg = nullptr;
    REQUIRE(hdqn_config_new(&cfg) == HDQN_OK);
    for (const char* o : {"agent=dueling-plastic", "episodes=20", "warmup_episodes=3", "max_steps_per_episode=20",
                          "batch_size=4", "conv=4x8s4", "hidden=8"}) {
      REQUIRE(hdqn_config_override(cfg, o) == HDQN_OK);
    }
    struct Seen {
      int rows = 0;
      int plastic = 0;
    } seen;
    const auto cb = [](const hdqn_episode_record* r, void* user) {
      auto* s = static_cast<Seen*>(user);
      ++s->rows;
      if (std::string(r->phase) == "plastic") ++s->plastic;
    };
    char* summary = nullptr;
    REQUIRE(hdqn_train(cfg, dir.c_str(), cb, &seen, &summary) == HDQN_OK);
    CHECK(seen.rows == 20);
    CHECK(seen.plastic == 6);
    const auto sj = nlohmann::json::parse(Take(summary));
    CHECK(sj.at("fixed_checksum_before_plastic") == sj.at("fixed_checksum_after_plastic"));
    hdqn_config_free(cfg);

    hdqn_eval_options eo;
    hdqn_eval_options_default(&eo);
    eo.episodes = 2;
    eo.max_steps_per_episode = 30;
    const std::string frames = (dir / "frames").string();
    eo.dump_frames_dir = frames.c_str();
    const std::string ckpt = (dir / "checkpoint_final.bin").string();
    char* eval = nullptr;
    REQUIRE(hdqn_evaluate(ckpt.c_str(), "mini-catch", &eo, &eval) == HDQN_OK);
    CHECK(nlohmann::json::parse(Take(eval)).at("episodes") == 2);
    CHECK(fs::exists(dir / "frames" / "ep000_step00000_raw.png"));
    CHECK(fs::exists(dir / "frames" / "ep000_step00000_processed.png"));
    eo.episodes = 0;
    CHECK(hdqn_evaluate(ckpt.c_str(), "mini-catch", &eo, &eval) == HDQN_ERR_USAGE);
    eo.episodes = 1;
    CHECK(hdqn_evaluate((dir / "missing.bin").string().c_str(), "mini-catch", &eo, &eval) == HDQN_ERR_IO);

    char* written = nullptr;
    REQUIRE(hdqn_export_plots_data(dir.c_str(), (dir / "plots").string().c_str(), &written) == HDQN_OK);
    CHECK(nlohmann::json::parse(Take(written)).size() == 3);
    fs::remove_all(dir);
  }

  TEST_CASE("gradcheck passes") {
    char* report = nullptr;
    int ok = 0;
    REQUIRE(hdqn_gradcheck(1, &report, &ok) == HDQN_OK);
    CHECK(ok == 1);
    CHECK(nlohmann::json::parse(Take(report)).size() >= 10);
  }
}
