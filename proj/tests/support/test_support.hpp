#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "tpgcn/skeleton_io.hpp"
#include "tpgcn/tensor.hpp"

namespace tpgcn::testing {

template <typename T>
Tensor<T> random_tensor(Shape shape, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  Tensor<T> t(std::move(shape));
  std::uniform_real_distribution<double> dist(lo, hi);
  for (std::int64_t i = 0; i < t.numel(); ++i) t[i] = static_cast<T>(dist(rng));
  return t;
}

/// Serializes frames in the NTU text layout with filler depth/color/orientation fields.
std::string ntu_text(const std::vector<RawFrame>& frames);

/// Random symmetric weights on V vertices: each pair linked with probability
/// `density`, weight in [0.2, 1].
Tensor<double> random_graph(std::int64_t v, double density, std::mt19937_64& rng);

/// Runs the matrix-form SGC layer and the per-vertex oracle on `graphs` random
/// graphs (V <= 12, C <= 4, T <= 3) and returns the largest absolute difference.
template <typename T>
double sgc_oracle_gap(std::uint64_t seed, int graphs);

/// Directory holding tests/fixtures.
std::string fixture_dir();

}  // namespace tpgcn::testing
