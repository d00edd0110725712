#include "hebbdqn/envs.hpp"

#include <algorithm>

#include "hebbdqn/error.hpp"

namespace hebbdqn::envs {

namespace {

constexpr std::uint8_t kHudGray = 142;
constexpr std::uint8_t kFloorGray = 100;

void DrawHud(Frame& frame, int score) {
  const int blocks = std::min(score, 15);
  for (int k = 0; k < blocks; ++k) {
    frame.FillRect(4 + 10 * static_cast<std::size_t>(k), 8, 8, 8, kHudGray, kHudGray, kHudGray);
  }
  frame.FillRect(0, 185, kScreenWidth, kScreenHeight - 185, kFloorGray, kFloorGray, kFloorGray);
}

void CheckAction(const EnvSpec& spec, std::size_t action) {
  if (action >= spec.n_actions) {
    Fail(ErrorKind::kUsage, spec.name + ": action " + std::to_string(action) +
                                " out of range (n_actions = " +
                                std::to_string(spec.n_actions) + ")");
  }
}

void CheckCanStep(const EnvSpec& spec, bool started, bool done) {
  if (!started) Fail(ErrorKind::kState, spec.name + ": step called before reset");
  if (done) Fail(ErrorKind::kState, spec.name + ": step called after the episode terminated");
}

}  // namespace

void Frame::FillRect(std::size_t x, std::size_t y, std::size_t w, std::size_t h,
                     std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  const std::size_t x_end = std::min(width, x + w);
  const std::size_t y_end = std::min(height, y + h);
  for (std::size_t yy = y; yy < y_end; ++yy) {
    for (std::size_t xx = x; xx < x_end; ++xx) SetPixel(xx, yy, r, g, b);
  }
}

// ---------------------------------------------------------------- mini-catch

MiniCatch::MiniCatch(std::uint64_t seed) : rng_(seed) {
  spec_.name = "mini-catch";
  spec_.n_actions = 3;
  spec_.action_labels = {"noop", "left", "right"};
  spec_.crop = {0, kPlayfieldTop, kGrid * kCell, kGrid * kCell};
}

void MiniCatch::SpawnBall() {
  // Columns covered by the paddle are excluded so that standing still never
  // catches a fresh ball.
  const std::size_t choices = kGrid - kPaddleWidth;
  std::size_t col = rng_.Index(choices);
  if (col >= paddle_col_) col += kPaddleWidth;
  ball_col_ = col;
  ball_row_ = 0;
}

Frame MiniCatch::Reset() {
  paddle_col_ = (kGrid - kPaddleWidth) / 2;
  score_ = 0;
  SpawnBall();
  started_ = true;
  done_ = false;
  return Render();
}

StepResult MiniCatch::Step(std::size_t action) {
  CheckCanStep(spec_, started_, done_);
  CheckAction(spec_, action);
  if (action == kLeft && paddle_col_ > 0) --paddle_col_;
  if (action == kRight && paddle_col_ + kPaddleWidth < kGrid) ++paddle_col_;
  ++ball_row_;
  StepResult result;
  if (ball_row_ == kGrid - 1) {
    if (ball_col_ >= paddle_col_ && ball_col_ < paddle_col_ + kPaddleWidth) {
      result.reward = 1.0;
      ++score_;
      SpawnBall();
    } else {
      done_ = true;
      result.terminated = true;
    }
  }
  result.frame = Render();
  return result;
}

Frame MiniCatch::Render() const {
  Frame frame(kScreenWidth, kScreenHeight);
  DrawHud(frame, score_);
  frame.FillRect(paddle_col_ * kCell, kPlayfieldTop + (kGrid - 1) * kCell,
                 kPaddleWidth * kCell, kCell, 200, 72, 72);
  frame.FillRect(ball_col_ * kCell, kPlayfieldTop + ball_row_ * kCell, kCell, kCell,
                 255, 255, 255);
  return frame;
}

std::unique_ptr<Environment> MiniCatch::Clone() const {
  return std::make_unique<MiniCatch>(*this);
}

// -------------------------------------------------------------- mini-shooter

MiniShooter::MiniShooter(std::uint64_t seed) : rng_(seed) {
  spec_.name = "mini-shooter";
  spec_.n_actions = 4;
  spec_.action_labels = {"noop", "left", "right", "fire"};
  spec_.crop = {0, kPlayfieldTop, kGrid * kCell, kGrid * kCell};
}

std::size_t MiniShooter::MaxEpisodeSteps() {
  // At most kGrid - 1 shifts between descents, plus the descent itself, for
  // every row between the start row and the invasion row.
  return (kInvasionRow - kStartRow) * kGrid;
}

Frame MiniShooter::Reset() {
  enemies_.clear();
  std::vector<std::size_t> slots;
  for (std::size_t r = 0; r < kFormationRows; ++r) {
    for (std::size_t c = 0; c < kFormationCols; ++c) {
      if (rng_.Bernoulli(0.75)) enemies_.push_back({kStartRow + r, 2 * c});
    }
  }
  if (enemies_.empty()) enemies_.push_back({kStartRow, 2 * rng_.Index(kFormationCols)});
  std::size_t max_col = 0;
  for (const auto& e : enemies_) max_col = std::max(max_col, e.col);
  const std::size_t offset = rng_.Index(kGrid - max_col);
  for (auto& e : enemies_) e.col += offset;
  direction_ = rng_.Bernoulli(0.5) ? 1 : -1;
  player_col_ = kGrid / 2;
  score_ = 0;
  started_ = true;
  done_ = false;
  return Render();
}

void MiniShooter::AdvanceFormation() {
  std::size_t min_col = kGrid;
  std::size_t max_col = 0;
  for (const auto& e : enemies_) {
    min_col = std::min(min_col, e.col);
    max_col = std::max(max_col, e.col);
  }
  const bool blocked = direction_ > 0 ? max_col + 1 >= kGrid : min_col == 0;
  if (blocked) {
    for (auto& e : enemies_) ++e.row;
    direction_ = -direction_;
  } else {
    for (auto& e : enemies_) e.col = direction_ > 0 ? e.col + 1 : e.col - 1;
  }
}

StepResult MiniShooter::Step(std::size_t action) {
  CheckCanStep(spec_, started_, done_);
  CheckAction(spec_, action);
  StepResult result;
  switch (action) {
    case kLeft:
      if (player_col_ > 0) --player_col_;
      break;
    case kRight:
      if (player_col_ + 1 < kGrid) ++player_col_;
      break;
    case kFire: {
      auto target = enemies_.end();
      for (auto it = enemies_.begin(); it != enemies_.end(); ++it) {
        if (it->col == player_col_ && (target == enemies_.end() || it->row > target->row)) {
          target = it;
        }
      }
      if (target != enemies_.end()) {
        enemies_.erase(target);
        result.reward = kEnemyReward;
        ++score_;
      }
      break;
    }
    default:
      break;
  }
  if (enemies_.empty()) {
    done_ = true;
  } else {
    AdvanceFormation();
    for (const auto& e : enemies_) {
      if (e.row >= kInvasionRow) done_ = true;
    }
  }
  result.terminated = done_;
  result.frame = Render();
  return result;
}

Frame MiniShooter::Render() const {
  Frame frame(kScreenWidth, kScreenHeight);
  DrawHud(frame, score_);
  for (const auto& e : enemies_) {
    frame.FillRect(e.col * kCell + 1, kPlayfieldTop + e.row * kCell + 1, kCell - 2,
                   kCell - 2, 60, 200, 60);
  }
  frame.FillRect(player_col_ * kCell, kPlayfieldTop + (kGrid - 1) * kCell, kCell, kCell,
                 220, 200, 60);
  return frame;
}

std::unique_ptr<Environment> MiniShooter::Clone() const {
  return std::make_unique<MiniShooter>(*this);
}

// ------------------------------------------------------------------- tabular

TabularEnv::TabularEnv(mdp::TabularMdp mdp, std::string name, std::uint64_t seed)
    : mdp_(std::move(mdp)), rng_(seed) {
  mdp_.Validate();
  spec_.name = std::move(name);
  spec_.n_actions = mdp_.num_actions();
  for (std::size_t a = 0; a < mdp_.num_actions(); ++a) {
    spec_.action_labels.push_back("a" + std::to_string(a));
  }
  spec_.observation = ObservationKind::kVector;
  spec_.crop = {0, 0, mdp_.num_states(), 1};
}

Frame TabularEnv::Reset() {
  state_ = mdp_.start_state();
  started_ = true;
  done_ = mdp_.IsAbsorbing(state_);
  return Render();
}

StepResult TabularEnv::Step(std::size_t action) {
  CheckCanStep(spec_, started_, done_);
  CheckAction(spec_, action);
  const auto t = mdp::SimulateStep(mdp_, state_, action, rng_);
  state_ = t.next_state;
  done_ = mdp_.IsAbsorbing(state_);
  StepResult result;
  result.reward = t.reward;
  result.terminated = done_;
  result.frame = Render();
  return result;
}

Frame TabularEnv::Render() const {
  Frame frame(mdp_.num_states(), 1);
  frame.SetPixel(state_, 0, 255, 255, 255);
  return frame;
}

std::unique_ptr<Environment> TabularEnv::Clone() const {
  return std::make_unique<TabularEnv>(*this);
}

// ------------------------------------------------------------------- factory

std::vector<std::string> AvailableEnvs() {
  return {"mini-catch", "mini-shooter", "tabular:<path>"};
}

std::unique_ptr<Environment> MakeEnv(std::string_view name, std::uint64_t seed) {
  if (name == "mini-catch") return std::make_unique<MiniCatch>(seed);
  if (name == "mini-shooter") return std::make_unique<MiniShooter>(seed);
  constexpr std::string_view kTabular = "tabular:";
  if (name.substr(0, kTabular.size()) == kTabular && name.size() > kTabular.size()) {
    const std::string path(name.substr(kTabular.size()));
    return std::make_unique<TabularEnv>(mdp::LoadMdpJson(path), std::string(name), seed);
  }
  std::string list;
  for (const auto& n : AvailableEnvs()) list += (list.empty() ? "" : ", ") + n;
  Fail(ErrorKind::kUsage, "unknown environment '" + std::string(name) +
                              "'; available: " + list);
}

}  // namespace hebbdqn::envs
