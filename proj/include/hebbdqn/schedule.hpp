#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace hebbdqn {

enum class ScheduleKind { kLinear, kConstant };

// Piecewise-linear annealing over a run of `total` episodes. The value moves
// from `start` to `end` across the first `fraction` of the run, measured on
// episode indices 0..total-1, and is clamped at `end` afterwards. With
// fraction = 1 the last episode sees exactly `end`.
struct Schedule {
  ScheduleKind kind = ScheduleKind::kLinear;
  double start = 1.0;
  double end = 0.1;
  double fraction = 1.0;

  static Schedule Constant(double value) {
    return {ScheduleKind::kConstant, value, value, 1.0};
  }
  static Schedule Linear(double start, double end, double fraction) {
    return {ScheduleKind::kLinear, start, end, fraction};
  }

  // Episode index at which the schedule reaches `end`.
  double Cutoff(std::int64_t total) const;

  double Value(std::int64_t episode, std::int64_t total) const;

  void Validate() const;
};

ScheduleKind ParseScheduleKind(std::string_view text);
std::string_view ToString(ScheduleKind kind);

}  // namespace hebbdqn
