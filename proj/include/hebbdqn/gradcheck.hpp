#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "hebbdqn/tensor.hpp"

namespace hebbdqn {

// Central-difference gradient check in 64-bit arithmetic.
//
// The function under test is reduced to a scalar by a fixed random linear
// weighting of its output (scalar outputs are used as is). Each input entry
// is perturbed by +-h and the difference quotient is compared with the
// backward pass. Relative error per entry is
//   |analytic - numeric| / max(|analytic|, |numeric|, kGradcheckFloor),
// the floor keeping entries whose true derivative is ~0 from dividing
// round-off by round-off.
//
// Central differences at h and h/2 agree to O(h^2) where the function is
// smooth. When they differ by more than kGradcheckKink (relative) a relu or
// max switch lies within +-h; the pair is retried at h/10 and, if still
// inconsistent, the entry has no derivative to compare and is skipped. A
// check fails when more than kGradcheckMaxSkipped of its entries are skipped.
inline constexpr double kGradcheckStep = 1e-5;
inline constexpr double kGradcheckFloor = 1e-4;
inline constexpr double kGradcheckKink = 1e-5;
inline constexpr double kGradcheckMaxSkipped = 0.1;

struct GradcheckResult {
  std::string name;
  double max_relative_error = 0.0;
  std::size_t entries_checked = 0;
  std::size_t entries_skipped = 0;  // non-differentiable points
  bool passed = false;
};

using GradFn = std::function<Var(Tape*, const std::vector<Var>&)>;

GradcheckResult CheckGradients(const std::string& name, const GradFn& fn, std::vector<Var> inputs,
                               std::uint64_t seed, double tolerance = 1e-4);

// Every differentiable op plus tiny plain, dueling and plastic networks.
std::vector<GradcheckResult> RunAllGradchecks(std::uint64_t seed, double tolerance = 1e-4);

}  // namespace hebbdqn
