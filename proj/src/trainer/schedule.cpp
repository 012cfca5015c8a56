#include "hictl/trainer/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "hictl/error.hpp"

namespace hictl::train {

Schedule parse_schedule(std::string_view name) {
  if (name == "invert-linear" || name == "linear") return Schedule::kInvertLinear;
  if (name == "inverse-sqrt" || name == "inverse_sqrt") return Schedule::kInverseSqrt;
  throw ConfigError("unknown schedule '" + std::string(name) + "' (invert-linear, inverse-sqrt)");
}

std::string_view to_string(Schedule s) {
  return s == Schedule::kInvertLinear ? "invert-linear" : "inverse-sqrt";
}

double lr_at(std::int64_t step, const ScheduleConfig& cfg) {
  if (step < 0) throw ConfigError("lr_at: negative step");
  const auto s = static_cast<double>(step);
  const auto w = static_cast<double>(cfg.warmup_steps);
  if (step < cfg.warmup_steps) return cfg.lr_peak * s / w;
  if (cfg.kind == Schedule::kInverseSqrt) {
    const double w_eff = std::max(w, 1.0);
    return cfg.lr_peak * std::sqrt(w_eff / std::max(s, w_eff));
  }
  const double span = static_cast<double>(cfg.total_steps - cfg.warmup_steps);
  if (span <= 0.0) return step == cfg.warmup_steps ? cfg.lr_peak : 0.0;
  return cfg.lr_peak * std::max(0.0, 1.0 - (s - w) / span);
}

}  // namespace hictl::train
