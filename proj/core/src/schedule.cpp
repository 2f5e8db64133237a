#include "rootopt/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "rootopt/errors.hpp"

namespace rootopt {

LrSchedule LrSchedule::cosine(std::int64_t total_steps, std::int64_t warmup_steps, double final_fraction) {
  if (total_steps < 1 || warmup_steps < 0 || warmup_steps > total_steps) {
    throw InvalidArgument("LrSchedule: need 0 <= warmup_steps <= total_steps and total_steps >= 1");
  }
  if (!(final_fraction >= 0.0 && final_fraction <= 1.0)) {
    throw InvalidArgument("LrSchedule: final_fraction must lie in [0, 1]");
  }
  return {Kind::Cosine, warmup_steps, total_steps, final_fraction};
}

double LrSchedule::multiplier(std::int64_t step) const {
  if (kind == Kind::Constant) return 1.0;
  if (step <= warmup_steps) return static_cast<double>(std::max<std::int64_t>(step, 1)) / static_cast<double>(std::max<std::int64_t>(warmup_steps, 1));
  const std::int64_t decay_steps = total_steps - warmup_steps;
  if (decay_steps <= 0) return final_fraction;
  const double progress =
      std::clamp(static_cast<double>(step - warmup_steps) / static_cast<double>(decay_steps), 0.0, 1.0);
  const double cosine = 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
  return final_fraction + (1.0 - final_fraction) * cosine;
}

}  // namespace rootopt
