#include "tpgcn/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "tpgcn/error.hpp"

namespace tpgcn {

double lr_at(int epoch, std::int64_t step, const LrSchedule& s) {
  if (s.epochs < 1 || s.steps_per_epoch < 1 || s.warmup_epochs < 0 || s.warmup_epochs >= s.epochs) {
    fail(ErrorCode::InvalidArgument, "schedule needs epochs >= 1, steps_per_epoch >= 1, 0 <= warmup < epochs");
  }
  if (epoch < 0 || epoch >= s.epochs || step < 0 || step >= s.steps_per_epoch) {
    fail(ErrorCode::IndexOutOfRange, "lr_at epoch " + std::to_string(epoch) + " step " + std::to_string(step) +
                                         " outside the schedule");
  }
  const std::int64_t global = static_cast<std::int64_t>(epoch) * s.steps_per_epoch + step;
  const std::int64_t warmup = static_cast<std::int64_t>(s.warmup_epochs) * s.steps_per_epoch;
  if (global < warmup) return s.base_lr * static_cast<double>(global + 1) / static_cast<double>(warmup);
  const std::int64_t span = static_cast<std::int64_t>(s.epochs) * s.steps_per_epoch - warmup;
  const double progress = static_cast<double>(global - warmup) / static_cast<double>(span);
  if (s.decay == DecayKind::Step) {
    double lr = s.base_lr;
    if (progress > 0.5) lr *= s.step_gamma;
    if (progress > 0.75) lr *= s.step_gamma;
    return lr;
  }
  return s.base_lr * 0.5 * (1.0 + std::cos(std::numbers::pi * std::clamp(progress, 0.0, 1.0)));
}

}  // namespace tpgcn
