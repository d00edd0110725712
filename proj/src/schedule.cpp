#include "hebbdqn/schedule.hpp"

#include <algorithm>
#include <cmath>

#include "hebbdqn/error.hpp"

namespace hebbdqn {

double Schedule::Cutoff(std::int64_t total) const {
  return fraction * static_cast<double>(std::max<std::int64_t>(total - 1, 0));
}

double Schedule::Value(std::int64_t episode, std::int64_t total) const {
  if (kind == ScheduleKind::kConstant) return start;
  const double cutoff = Cutoff(total);
  if (episode <= 0) return start;
  if (static_cast<double>(episode) >= cutoff) return end;
  const double t = static_cast<double>(episode) / cutoff;
  return start + (end - start) * t;
}

void Schedule::Validate() const {
  if (!std::isfinite(start) || !std::isfinite(end)) {
    Fail(ErrorKind::kValidation, "schedule endpoints must be finite");
  }
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    Fail(ErrorKind::kValidation, "schedule fraction must lie in (0, 1]");
  }
}

ScheduleKind ParseScheduleKind(std::string_view text) {
  if (text == "linear") return ScheduleKind::kLinear;
  if (text == "constant") return ScheduleKind::kConstant;
  Fail(ErrorKind::kValidation,
       "unknown schedule kind '" + std::string(text) + "' (linear|constant)");
}

std::string_view ToString(ScheduleKind kind) {
  return kind == ScheduleKind::kLinear ? "linear" : "constant";
}

}  // namespace hebbdqn
