#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tpgcn/gradcheck.hpp"

namespace tpgcn {

struct NamedGradCheck {
  std::string name;
  GradCheckReport report;
};

/// Double-precision finite-difference checks of the SGC layer, MS-TCN, part
/// attention, one full block and a tiny assembled model on a two-person
/// six-joint graph (V = 12, T = 8). Inputs are checked alongside parameters.
/// `max_checks_for_model` samples each model parameter (0 checks everything).
std::vector<NamedGradCheck> run_network_gradchecks(std::uint64_t seed = 7, GradCheckOptions options = {},
                                                   std::int64_t max_checks_for_model = 16);

}  // namespace tpgcn
