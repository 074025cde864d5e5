#pragma once

#include <functional>
#include <string>
#include <vector>

#include "tpgcn/autodiff.hpp"

namespace tpgcn {

struct GradCheckEntry {
  std::string name;
  double max_rel_error = 0.0;
  std::int64_t checked = 0;
  bool passed = true;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;
  double tolerance = 0.0;
  bool passed() const;
  double worst() const;
  std::string summary() const;
};

struct GradCheckOptions {
  double step = 1e-5;
  double tolerance = 1e-4;
  /// 0 checks every element; otherwise a deterministic stride sample per parameter.
  std::int64_t max_checks_per_parameter = 0;
};

/// Compares reverse-mode gradients of a scalar function against central finite
/// differences. Relative error is |analytic - numeric| / max(1, |numeric|).
/// `fn` must be deterministic (no dropout, batch norm in eval mode).
GradCheckReport grad_check(const std::function<Var<double>()>& fn, const std::vector<Parameter<double>*>& params,
                           GradCheckOptions options = {});

}  // namespace tpgcn
