#pragma once

#include <cstdint>
#include <string_view>

namespace hictl::train {

enum class Schedule { kInvertLinear, kInverseSqrt };

Schedule parse_schedule(std::string_view name);
std::string_view to_string(Schedule s);

struct ScheduleConfig {
  double lr_peak = 2.5e-5;
  std::int64_t warmup_steps = 0;
  /// Horizon of the linear decay.
  std::int64_t total_steps = 1;
  Schedule kind = Schedule::kInvertLinear;
};

/// Learning rate used for update number `step` (0-based). Linear warmup from
/// 0 to lr_peak over warmup_steps, then either linear decay reaching 0 at
/// total_steps or lr_peak * sqrt(warmup / step). A warmup of 0 counts as 1
/// for the inverse square root.
double lr_at(std::int64_t step, const ScheduleConfig& cfg);

}  // namespace hictl::train
