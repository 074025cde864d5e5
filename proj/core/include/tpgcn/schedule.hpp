#pragma once

#include <cstdint>

namespace tpgcn {

enum class DecayKind { Cosine, Step };

struct LrSchedule {
  double base_lr = 0.1;
  int epochs = 65;
  int warmup_epochs = 5;
  std::int64_t steps_per_epoch = 1;
  DecayKind decay = DecayKind::Cosine;
  double step_gamma = 0.1;  // Step decay: multiply at 50% and 75% of the decay span
};

/// Learning rate for `step` (0-based) inside `epoch`. Warmup rises linearly to
/// base_lr, reaching it on the last warmup step; cosine decay then starts at
/// base_lr and approaches zero on the final step.
double lr_at(int epoch, std::int64_t step, const LrSchedule& schedule);

}  // namespace tpgcn
