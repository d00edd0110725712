#include <doctest.h>

#include <string>

#include "hebbdqn/envs.hpp"
#include "hebbdqn/error.hpp"
#include "hebbdqn/rng.hpp"

using namespace hebbdqn;
using namespace hebbdqn::envs;

namespace {

// Moves the paddle so its middle cell tracks the ball column.
std::size_t TrackBall(const MiniCatch& env) {
  const std::size_t middle = env.paddle_col() + 1;
  if (env.ball_col() < middle) return MiniCatch::kLeft;
  if (env.ball_col() > middle) return MiniCatch::kRight;
  return MiniCatch::kNoop;
}

}  // namespace

TEST_SUITE("envs") {
  TEST_CASE("frames mirror the atari raster") {
    for (const char* name : {"mini-catch", "mini-shooter"}) {
      auto env = MakeEnv(name, 1);
      const Frame f = env->Reset();
      CHECK(f.width == 160);
      CHECK(f.height == 210);
      CHECK(f.data.size() == 160u * 210u * 3u);
    }
  }

  TEST_CASE("action spaces") {
    CHECK(MakeEnv("mini-catch", 0)->spec().n_actions == 3);
    const auto shooter = MakeEnv("mini-shooter", 0);
    CHECK(shooter->spec().n_actions == 4);
    CHECK(shooter->spec().action_labels[3] == "fire");
  }

  TEST_CASE("unknown names list the available environments") {
    try {
      MakeEnv("nope", 0);
      FAIL("expected error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::kUsage);
      CHECK(std::string(e.what()).find("mini-catch") != std::string::npos);
    }
  }

  TEST_CASE("identical seeds and actions give identical streams") {
    for (const char* name : {"mini-catch", "mini-shooter"}) {
      auto a = MakeEnv(name, 7);
      auto b = MakeEnv(name, 7);
      Rng actions(3);
      CHECK(a->Reset().data == b->Reset().data);
      for (int t = 0; t < 500; ++t) {
        const std::size_t act = actions.Index(a->spec().n_actions);
        const auto ra = a->Step(act);
        const auto rb = b->Step(act);
        CHECK(ra.frame.data == rb.frame.data);
        CHECK(ra.reward == rb.reward);
        CHECK(ra.terminated == rb.terminated);
        CHECK_FALSE(ra.truncated);
        if (ra.terminated) {
          a->Reset();
          b->Reset();
        }
      }
    }
  }

  TEST_CASE("clone continues independently with the same state") {
    auto a = MakeEnv("mini-catch", 5);
    a->Reset();
    a->Step(1);
    auto b = a->Clone();
    for (int t = 0; t < 40; ++t) {
      const auto ra = a->Step(2);
      const auto rb = b->Step(2);
      CHECK(ra.frame.data == rb.frame.data);
      if (ra.terminated) break;
    }
  }

  TEST_CASE("tracking the ball catches every ball") {
    MiniCatch env(11);
    env.Reset();
    double total = 0.0;
    for (int t = 0; t < 15 * 20; ++t) {
      const auto r = env.Step(TrackBall(env));
      CHECK_FALSE(r.terminated);
      if (r.reward > 0) {
        CHECK(r.reward == 1.0);
        CHECK((t + 1) % 15 == 0);
      }
      total += r.reward;
    }
    CHECK(total == 20.0);
  }

  TEST_CASE("noop forever ends within one fall without reward") {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
      MiniCatch env(seed);
      env.Reset();
      int steps = 0;
      double reward = 0.0;
      for (;;) {
        const auto r = env.Step(MiniCatch::kNoop);
        ++steps;
        reward += r.reward;
        if (r.terminated) break;
      }
      CHECK(steps == 15);
      CHECK(reward == 0.0);
    }
  }

  TEST_CASE("shooter noop forever ends within its step bound") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      MiniShooter env(seed);
      env.Reset();
      std::size_t steps = 0;
      while (!env.Step(MiniShooter::kNoop).terminated) {
        ++steps;
        REQUIRE(steps <= MiniShooter::MaxEpisodeSteps());
      }
    }
  }

  TEST_CASE("shooter fire scores only when aligned") {
    MiniShooter env(2);
    env.Reset();
    bool aligned = false;
    for (const auto& e : env.enemies()) aligned = aligned || e.col == env.player_col();
    const std::size_t before = env.enemies().size();
    const auto r = env.Step(MiniShooter::kFire);
    if (aligned) {
      CHECK(r.reward == MiniShooter::kEnemyReward);
      CHECK(env.enemies().size() == before - 1);
    } else {
      CHECK(r.reward == 0.0);
      CHECK(env.enemies().size() == before);
    }
  }

  TEST_CASE("shooter fire with no enemy aligned scores nothing") {
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
      MiniShooter env(seed);
      env.Reset();
      bool aligned = false;
      for (const auto& e : env.enemies()) aligned = aligned || e.col == env.player_col();
      if (aligned) continue;
      CHECK(env.Step(MiniShooter::kFire).reward == 0.0);
    }
  }

  TEST_CASE("consecutive frames differ while the game state changes") {
    auto env = MakeEnv("mini-catch", 3);
    Frame prev = env->Reset();
    for (int t = 0; t < 14; ++t) {
      const auto r = env->Step(MiniCatch::kNoop);
      CHECK(r.frame.data != prev.data);
      prev = r.frame;
    }
  }

  TEST_CASE("lifecycle errors") {
    auto env = MakeEnv("mini-catch", 0);
    try {
      env->Step(0);
      FAIL("expected state error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::kState);
    }
    env->Reset();
    try {
      env->Step(3);
      FAIL("expected usage error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::kUsage);
    }
    while (!env->Step(0).terminated) {
    }
    CHECK_THROWS_AS(env->Step(0), Error);
    env->Reset();
    CHECK_NOTHROW(env->Step(0));
  }

  TEST_CASE("random play has bounded episodes") {
    Rng rng(9);
    auto env = MakeEnv("mini-catch", 9);
    double total_steps = 0;
    for (int ep = 0; ep < 1000; ++ep) {
      env->Reset();
      int steps = 0;
      while (!env->Step(rng.Index(3)).terminated) {
        ++steps;
        REQUIRE(steps < 100000);
      }
      total_steps += steps + 1;
    }
    CHECK(total_steps / 1000.0 < 200.0);
  }

  TEST_CASE("tabular environment exposes one-hot strips") {
    auto env = MakeEnv(std::string("tabular:") + HEBBDQN_TEST_DATA_DIR + "/mdp/student_lifecycle.json", 1);
    CHECK(env->spec().observation == ObservationKind::kVector);
    const Frame f = env->Reset();
    CHECK(f.width == 5);
    CHECK(f.height == 1);
    CHECK(f.data[0] == 255);
    CHECK(f.data[3] == 0);
    CHECK_THROWS_AS(MakeEnv("tabular:/nonexistent.json", 0), Error);
  }
}
