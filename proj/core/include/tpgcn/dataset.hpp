#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "tpgcn/features.hpp"
#include "tpgcn/manifest.hpp"
#include "tpgcn/skeleton_io.hpp"

namespace tpgcn {

struct DatasetOptions {
  FeatureOptions features;
  std::int64_t frames = 64;  // every sequence is resampled to this length
  ResampleMode resample = ResampleMode::Interpolate;
  bool mirror_single = true;  // fill an empty second body with a mirror skeleton
  MirrorMode mirror = MirrorMode::Reflect;
};

struct Sample {
  SequenceMeta meta;
  FeatureBundle bundle;
  /// Person-swapped bundle, kept for RandomSwap training.
  std::optional<FeatureBundle> swapped;
};

/// In-memory preprocessed samples ready for batching.
class Dataset {
 public:
  Dataset() = default;

  /// Features are computed once per sample; bundles from RandomSwap mode keep both orders.
  static Dataset from_sequences(const std::vector<SkeletonSequence>& sequences, std::uint32_t num_classes,
                                const DatasetOptions& options);
  /// Reads every manifest entry; relative paths resolve against `base_dir`. Canonical
  /// sequences are preprocessed; cached bundles (version-2 records) are used as stored.
  static Dataset load(const DatasetManifest& manifest, const std::string& base_dir, const DatasetOptions& options);

  std::size_t size() const { return samples_.size(); }
  bool empty() const { return samples_.empty(); }
  std::uint32_t num_classes() const { return num_classes_; }
  const DatasetOptions& options() const { return options_; }
  const Sample& sample(std::size_t i) const { return samples_[i]; }
  int label(std::size_t i) const { return static_cast<int>(samples_[i].meta.label); }

  /// The graphs fed to the model for sample i. RandomSwap draws the top bit of
  /// `rng` while training; evaluation always uses the stored order.
  const FeatureBundle& view(std::size_t i, bool training, std::mt19937_64* rng) const;

 private:
  std::vector<Sample> samples_;
  std::uint32_t num_classes_ = 0;
  DatasetOptions options_;
};

/// Swaps the two body slots of a sequence.
SkeletonSequence swap_bodies(const SkeletonSequence& seq);

}  // namespace tpgcn
