#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "tpgcn/adjacency.hpp"
#include "tpgcn/features.hpp"

namespace tpgcn {

using ChannelPlan = std::vector<std::pair<std::int64_t, std::int64_t>>;

struct ModelConfig {
  std::uint32_t num_classes = 11;
  int joint_count = 25;
  int coord_channels = 3;
  std::int64_t frames = 64;  // used for FLOP estimates
  Strategy strategy = Strategy::Geometric;
  GraphScaleMode mode = GraphScaleMode::Symmetry;
  AdjacencyOptions adjacency;
  ChannelPlan input_plan{{6, 64}, {64, 64}, {64, 32}};
  ChannelPlan main_plan{{128, 128}, {128, 128}, {128, 128}, {128, 256}, {256, 256}, {256, 256}};
  std::vector<std::int64_t> main_strides{2, 1, 1, 2, 1, 1};
  bool attention = true;
  bool edge_mask = true;
  std::uint64_t seed = 0;  // weight initialization

  int persons() const { return persons_per_graph(mode); }
  std::int64_t vertices() const { return static_cast<std::int64_t>(persons()) * joint_count; }
  std::int64_t subsets() const { return adjacency.max_hop + 1; }

  /// ConfigMismatch unless plans chain, 4 x last input width == first main width,
  /// the first input width is 2 x coord_channels and strides match the main plan.
  void validate() const;
  std::string to_json() const;
  /// Missing keys keep their defaults.
  static ModelConfig from_json(const std::string& text);
  static ModelConfig load(const std::string& path);
  void save(const std::string& path) const;

  /// Reduced widths for desk-scale experiments on a single CPU core.
  static ModelConfig toy(std::uint32_t classes = 4);
};

}  // namespace tpgcn
