#pragma once

#include <cstdint>

namespace rootopt {

/// Learning-rate multiplier per step. Cosine decays from 1 to
/// final_fraction after a linear warmup.
struct LrSchedule {
  enum class Kind { Constant, Cosine };

  Kind kind = Kind::Constant;
  std::int64_t warmup_steps = 0;
  std::int64_t total_steps = 1;
  double final_fraction = 0.1;

  static LrSchedule constant() { return {}; }
  static LrSchedule cosine(std::int64_t total_steps, std::int64_t warmup_steps = 0, double final_fraction = 0.1);

  /// Multiplier for 1-based step index `step`.
  double multiplier(std::int64_t step) const;
};

}  // namespace rootopt
