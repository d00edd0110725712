#include <doctest.h>

#include <cmath>
#include <numeric>

#include "hebbdqn/envs.hpp"
#include "hebbdqn/error.hpp"
#include "hebbdqn/preprocess.hpp"
#include "hebbdqn/rng.hpp"

using namespace hebbdqn;
using namespace hebbdqn::preprocess;

namespace {

envs::Frame RandomFrame(Rng& rng) {
  envs::Frame f(160, 210);
  for (auto& b : f.data) b = static_cast<std::uint8_t>(rng.Index(256));
  return f;
}

double CropLumaMean(const envs::Frame& f, const envs::CropRect& c) {
  double sum = 0.0;
  for (std::size_t y = c.y; y < c.y + c.height; ++y) {
    for (std::size_t x = c.x; x < c.x + c.width; ++x) {
      const std::uint8_t* p = &f.data[(y * f.width + x) * 3];
      sum += (0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2]) / 255.0;
    }
  }
  return sum / static_cast<double>(c.width * c.height);
}

ProcessedFrame Filled(double v) { return ProcessedFrame(std::vector<double>(kOutputSize * kOutputSize, v)); }

}  // namespace

TEST_SUITE("preprocess") {
  TEST_CASE("uniform colour maps to its luma") {
    envs::Frame f(160, 210);
    for (std::size_t i = 0; i < f.data.size(); i += 3) {
      f.data[i] = 255;
      f.data[i + 1] = 0;
      f.data[i + 2] = 0;
    }
    const auto p = Preprocess(f, {0, 25, 160, 160});
    for (double v : p.pixels()) CHECK(v == doctest::Approx(0.299).epsilon(1e-12));
  }

  TEST_CASE("downscale conserves mean luminance") {
    Rng rng(1);
    for (int i = 0; i < 5; ++i) {
      const auto f = RandomFrame(rng);
      const envs::CropRect crop{0, 25, 160, 160};
      CHECK(std::abs(Preprocess(f, crop).Mean() - CropLumaMean(f, crop)) < 1e-9);
    }
  }

  TEST_CASE("crop selects the playfield") {
    envs::Frame f(160, 210);
    // Bright band above the crop must not leak into the output.
    for (std::size_t y = 0; y < 25; ++y)
      for (std::size_t x = 0; x < 160; ++x) f.SetPixel(x, y, 255, 255, 255);
    const auto p = Preprocess(f, {0, 25, 160, 160});
    for (double v : p.pixels()) CHECK(v == 0.0);
    CHECK_THROWS_AS(Preprocess(f, {0, 60, 160, 160}), Error);
    CHECK_THROWS_AS(Preprocess(f, {0, 0, 150, 160}), Error);
  }

  TEST_CASE("single bright pixel spreads over at most a 2x2 output block") {
    envs::Frame f(160, 210);
    f.SetPixel(80, 25 + 80, 255, 255, 255);
    const auto p = Preprocess(f, {0, 25, 160, 160});
    int nonzero = 0;
    for (double v : p.pixels()) nonzero += v > 0.0;
    CHECK(nonzero >= 1);
    CHECK(nonzero <= 4);
  }

  TEST_CASE("frame stack replicates on reset and slides on push") {
    FrameStack stack;
    stack.Reset(Filled(0.1));
    Tensor s0 = stack.AsState();
    CHECK(s0.shape() == Shape{4, 84, 84});
    for (double v : s0.data()) CHECK(v == 0.1);
    stack.Push(Filled(0.2));
    stack.Push(Filled(0.3));
    const Tensor s = stack.AsState();
    const std::size_t plane = 84 * 84;
    CHECK(s[0] == 0.1);
    CHECK(s[plane] == 0.1);
    CHECK(s[2 * plane] == 0.2);
    CHECK(s[3 * plane] == 0.3);
  }

  TEST_CASE("consecutive states overlap in three frames") {
    auto env = envs::MakeEnv("mini-catch", 4);
    Observer obs(env->spec());
    obs.Reset(env->Reset());
    Tensor prev = obs.Current().Materialize();
    const std::size_t plane = 84 * 84;
    for (int t = 0; t < 10; ++t) {
      obs.Push(env->Step(t % 3).frame);
      const Tensor cur = obs.Current().Materialize();
      for (std::size_t c = 0; c < 3; ++c) {
        for (std::size_t i = 0; i < plane; ++i) REQUIRE(cur[c * plane + i] == prev[(c + 1) * plane + i]);
      }
      prev = cur;
    }
  }

  TEST_CASE("state refs share frames") {
    auto env = envs::MakeEnv("mini-catch", 4);
    Observer obs(env->spec());
    obs.Reset(env->Reset());
    const StateRef a = obs.Current();
    obs.Push(env->Step(0).frame);
    const StateRef b = obs.Current();
    CHECK(a.frames[1] == b.frames[0]);
    CHECK(a.frames[3] == b.frames[2]);
  }

  TEST_CASE("packed frames round trip exactly") {
    Rng rng(6);
    std::vector<double> v(500, 0.0);
    for (std::size_t i = 0; i < v.size(); i += 1 + rng.Index(7)) v[i] = rng.Uniform();
    v[3] = -0.0;
    const PackedFrame p(v);
    const auto u = p.Unpack();
    REQUIRE(u.size() == v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
      CHECK(u[i] == v[i]);
      CHECK(std::signbit(u[i]) == std::signbit(v[i]));
    }
    CHECK(PackedFrame(std::vector<double>(7056, 0.0)).PackedBytes() < 100);
  }

  TEST_CASE("vector observers pass the strip through") {
    auto env = envs::MakeEnv(std::string("tabular:") + HEBBDQN_TEST_DATA_DIR + "/mdp/student_lifecycle.json", 1);
    Observer obs(env->spec());
    CHECK(obs.state_shape() == Shape{1, 1, 5});
    obs.Reset(env->Reset());
    const Tensor s = obs.Current().Materialize();
    CHECK(s[0] == doctest::Approx(1.0));
    for (std::size_t i = 1; i < 5; ++i) CHECK(s[i] == 0.0);
  }
}
