#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <string>

#include "hebbdqn/config.hpp"
#include "hebbdqn/error.hpp"

using namespace hebbdqn;

namespace {

ErrorKind KindOfParse(const std::string& text) {
  try {
    ParseConfig(text);
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected error");
  return ErrorKind::kRuntime;
}

}  // namespace

TEST_SUITE("config") {
  TEST_CASE("dump then parse reproduces every key") {
    TrainConfig c;
    c.agent = AgentKind::kDuelingPlastic;
    c.seed = 42;
    c.gamma = 0.1 + 0.2;  // not exactly representable as 0.3
    c.learning_rate.start = 3e-4;
    c.conv = {{8, 8, 4}, {16, 4, 2}};
    c.hidden = {64, 32};
    c.alpha_per_connection = true;
    c.update_mode = UpdateMode::kPerStep;
    const TrainConfig back = ParseConfig(DumpConfig(c));
    for (const auto& key : ConfigKeys()) CHECK_MESSAGE(GetConfigValue(back, key) == GetConfigValue(c, key), key);
    CHECK(back.gamma == c.gamma);
  }

  TEST_CASE("shipped defaults file matches the built-in defaults") {
    const TrainConfig file = LoadConfig(std::string(HEBBDQN_SOURCE_DIR) + "/configs/default.conf");
    const TrainConfig builtin;
    for (const auto& key : ConfigKeys()) CHECK_MESSAGE(GetConfigValue(file, key) == GetConfigValue(builtin, key), key);
  }

  TEST_CASE("desk config parses and validates") {
    const TrainConfig c = LoadConfig(std::string(HEBBDQN_SOURCE_DIR) + "/configs/desk_catch.conf");
    CHECK_NOTHROW(c.Validate());
    CHECK(c.env == "mini-catch");
  }

  TEST_CASE("comments, blank lines and whitespace") {
    const TrainConfig c = ParseConfig("# header\n\n  seed =  9   # trailing\nagent=double\n");
    CHECK(c.seed == 9);
    CHECK(c.agent == AgentKind::kDouble);
  }

  TEST_CASE("errors carry kind and line") {
    CHECK(KindOfParse("bogus = 1\n") == ErrorKind::kValidation);
    CHECK(KindOfParse("seed = -1\n") == ErrorKind::kParse);
    CHECK(KindOfParse("gamma = fast\n") == ErrorKind::kParse);
    CHECK(KindOfParse("seed 3\n") == ErrorKind::kParse);
    try {
      ParseConfig("seed = 1\n\ngamma = x\n");
    } catch (const Error& e) {
      CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }
    CHECK_THROWS_AS(LoadConfig("/nonexistent/x.conf"), Error);
  }

  TEST_CASE("overrides") {
    TrainConfig c;
    ApplyOverride(c, "episodes=123");
    ApplyOverride(c, " plastic_split = 0.5 ");
    CHECK(c.episodes == 123);
    CHECK(c.plastic_split == 0.5);
    try {
      ApplyOverride(c, "episodes");
      FAIL("expected error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::kUsage);
    }
  }

  TEST_CASE("validation names the offending key") {
    const auto message = [](TrainConfig c) {
      try {
        c.Validate();
      } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::kValidation);
        return std::string(e.what());
      }
      return std::string();
    };
    TrainConfig c;
    c.gamma = 1.0;
    CHECK(message(c).find("gamma") != std::string::npos);
    c = TrainConfig{};
    c.batch_size = 0;
    CHECK(message(c).find("batch_size") != std::string::npos);
    c = TrainConfig{};
    c.agent = AgentKind::kDuelingPlastic;
    c.episodes = 60;
    c.warmup_episodes = 50;
    c.plastic_split = 0.5;
    CHECK(message(c).find("plastic_split") != std::string::npos);
    CHECK_NOTHROW(TrainConfig{}.Validate());
  }

  TEST_CASE("fixed-phase length") {
    TrainConfig c;
    c.episodes = 100;
    CHECK(c.FixedEpisodes() == 100);
    c.agent = AgentKind::kDuelingPlastic;
    CHECK(c.FixedEpisodes() == 70);
    c.plastic_split = 0.655;
    CHECK(c.FixedEpisodes() == 66);
  }

  TEST_CASE("agent kinds map to heads and targets") {
    TrainConfig c;
    c.agent = AgentKind::kDqn;
    CHECK(c.target_mode() == agent::TargetMode::kDqn);
    CHECK(c.MakeNetworkSpec({4, 84, 84}, 3).head == agent::HeadKind::kPlain);
    c.agent = AgentKind::kDuelingPlastic;
    const auto spec = c.MakeNetworkSpec({4, 84, 84}, 3);
    CHECK(spec.head == agent::HeadKind::kDueling);
    CHECK(spec.plastic);
    CHECK(c.target_mode() == agent::TargetMode::kDouble);
    CHECK(c.MakeNetworkSpec({1, 1, 5}, 2).conv.empty());
    CHECK(ParseAgentKind("dueling+plastic") == AgentKind::kDuelingPlastic);
    CHECK_THROWS_AS(ParseAgentKind("a3c"), Error);
  }

  TEST_CASE("shortest round-trip doubles") {
    CHECK(FormatDouble(0.1) == "0.1");
    CHECK(FormatDouble(1e-4) == "1e-04");
    const double x = 0.1 + 0.2;
    CHECK(std::stod(FormatDouble(x)) == x);
  }
}
