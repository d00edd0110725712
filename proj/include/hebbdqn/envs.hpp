#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "hebbdqn/mdp.hpp"
#include "hebbdqn/rng.hpp"

namespace hebbdqn::envs {

// Raster sizes mirror the Atari screen.
inline constexpr std::size_t kScreenHeight = 210;
inline constexpr std::size_t kScreenWidth = 160;

// RGB raster, row-major, 3 bytes per pixel.
struct Frame {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> data;

  Frame() = default;
  Frame(std::size_t w, std::size_t h) : width(w), height(h), data(w * h * 3, 0) {}

  void SetPixel(std::size_t x, std::size_t y, std::uint8_t r, std::uint8_t g,
                std::uint8_t b) {
    std::uint8_t* p = &data[(y * width + x) * 3];
    p[0] = r;
    p[1] = g;
    p[2] = b;
  }
  void FillRect(std::size_t x, std::size_t y, std::size_t w, std::size_t h,
                std::uint8_t r, std::uint8_t g, std::uint8_t b);

  bool operator==(const Frame&) const = default;
};

struct StepResult {
  Frame frame;
  double reward = 0.0;
  bool terminated = false;
  // Always false from an environment; the trainer sets it on step limits.
  bool truncated = false;
};

// Playable region inside the raster.
struct CropRect {
  std::size_t x = 0;
  std::size_t y = 0;
  std::size_t width = 160;
  std::size_t height = 160;
};

enum class ObservationKind {
  kPixels,  // RGB raster routed through grayscale/crop/downscale/stacking
  kVector,  // 1-pixel-high one-hot strip, used directly as a feature vector
};

struct EnvSpec {
  std::string name;
  std::size_t n_actions = 0;
  std::vector<std::string> action_labels;
  ObservationKind observation = ObservationKind::kPixels;
  CropRect crop;
};

// reset/step game contract. Handles are single-owner; Clone gives an
// independent copy including the RNG state.
class Environment {
 public:
  virtual ~Environment() = default;

  virtual const EnvSpec& spec() const = 0;
  virtual Frame Reset() = 0;
  // Throws Error(kState) before the first Reset or after a terminal step, and
  // Error(kUsage) for an out-of-range action.
  virtual StepResult Step(std::size_t action) = 0;
  virtual std::unique_ptr<Environment> Clone() const = 0;
};

// "mini-catch", "mini-shooter" or "tabular:<path-to-mdp-json>".
std::unique_ptr<Environment> MakeEnv(std::string_view name, std::uint64_t seed);

std::vector<std::string> AvailableEnvs();

// Falling-ball catcher on a 16x16 grid of 10px cells.
//
// Each step the paddle (3 cells wide, bottom row) applies the action and the
// ball drops one row. When the ball reaches the bottom row it is either caught
// (+1, a new ball spawns in the top row, never above the paddle) or missed
// (episode over, no reward). A ball takes 15 steps from spawn to the bottom.
class MiniCatch final : public Environment {
 public:
  static constexpr std::size_t kGrid = 16;
  static constexpr std::size_t kCell = 10;
  static constexpr std::size_t kPaddleWidth = 3;
  static constexpr std::size_t kPlayfieldTop = 25;

  enum Action : std::size_t { kNoop = 0, kLeft = 1, kRight = 2 };

  explicit MiniCatch(std::uint64_t seed);

  const EnvSpec& spec() const override { return spec_; }
  Frame Reset() override;
  StepResult Step(std::size_t action) override;
  std::unique_ptr<Environment> Clone() const override;

  std::size_t ball_row() const { return ball_row_; }
  std::size_t ball_col() const { return ball_col_; }
  std::size_t paddle_col() const { return paddle_col_; }
  int score() const { return score_; }

 private:
  void SpawnBall();
  Frame Render() const;

  EnvSpec spec_;
  Rng rng_;
  std::size_t ball_row_ = 0;
  std::size_t ball_col_ = 0;
  std::size_t paddle_col_ = 0;
  int score_ = 0;
  bool started_ = false;
  bool done_ = false;
};

// Descending enemy formation on a 16x16 grid.
//
// The formation shifts one column per step; when a shift would leave the grid
// it instead descends one row and reverses. Fire instantly destroys the lowest
// enemy in the player's column (+10); firing at an empty column scores 0. The
// episode ends when an enemy reaches the row above the player or the
// formation is cleared.
class MiniShooter final : public Environment {
 public:
  static constexpr std::size_t kGrid = 16;
  static constexpr std::size_t kCell = 10;
  static constexpr std::size_t kPlayfieldTop = 25;
  static constexpr std::size_t kFormationRows = 2;
  static constexpr std::size_t kFormationCols = 6;
  static constexpr std::size_t kStartRow = 1;
  // Enemies landing on this row end the episode.
  static constexpr std::size_t kInvasionRow = kGrid - 2;
  static constexpr double kEnemyReward = 10.0;

  enum Action : std::size_t { kNoop = 0, kLeft = 1, kRight = 2, kFire = 3 };

  struct Enemy {
    std::size_t row;
    std::size_t col;
  };

  explicit MiniShooter(std::uint64_t seed);

  const EnvSpec& spec() const override { return spec_; }
  Frame Reset() override;
  StepResult Step(std::size_t action) override;
  std::unique_ptr<Environment> Clone() const override;

  std::size_t player_col() const { return player_col_; }
  const std::vector<Enemy>& enemies() const { return enemies_; }

  // Upper bound on episode length under any policy.
  static std::size_t MaxEpisodeSteps();

 private:
  void AdvanceFormation();
  Frame Render() const;

  EnvSpec spec_;
  Rng rng_;
  std::vector<Enemy> enemies_;
  std::size_t player_col_ = 0;
  int direction_ = 1;
  int score_ = 0;
  bool started_ = false;
  bool done_ = false;
};

// Tabular MDP exposed through the game contract. Frames are n_states wide and
// one pixel high with the current state lit. Entering an absorbing state
// terminates the episode.
class TabularEnv final : public Environment {
 public:
  TabularEnv(mdp::TabularMdp mdp, std::string name, std::uint64_t seed);

  const EnvSpec& spec() const override { return spec_; }
  Frame Reset() override;
  StepResult Step(std::size_t action) override;
  std::unique_ptr<Environment> Clone() const override;

  std::size_t state() const { return state_; }

 private:
  Frame Render() const;

  mdp::TabularMdp mdp_;
  EnvSpec spec_;
  Rng rng_;
  std::size_t state_ = 0;
  bool started_ = false;
  bool done_ = false;
};

}  // namespace hebbdqn::envs
