#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tpgcn/manifest.hpp"
#include "tpgcn/skeleton_io.hpp"

namespace tpgcn {

/// Synthetic two-person interactions on the 25-joint layout, in classes
/// 0 approach, 1 depart, 2 kick (body 0 swings a leg toward body 1),
/// 3 synchronized hand oscillation with the hands meeting between the bodies.
struct ToyOptions {
  std::int64_t frames = 64;
  double noise = 0.01;  // coordinate noise stddev in meters
};

struct ToyDataset {
  DatasetManifest manifest;
  std::vector<SkeletonSequence> sequences;  // aligned with manifest.entries
};

/// Deterministic given the seed; `classes` takes the first 1..4 motions.
ToyDataset make_toy_dataset(std::uint64_t seed, int classes = 4, int samples_per_class = 32, ToyOptions options = {});

/// Distance between the two center joints at every frame.
std::vector<double> center_distance(const SkeletonSequence& seq);

/// Writes one canonical file per sample and manifest.json into `dir`.
void write_toy_dataset(const ToyDataset& data, const std::string& dir);

}  // namespace tpgcn
