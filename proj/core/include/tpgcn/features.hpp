#pragma once

#include <array>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "tpgcn/adjacency.hpp"
#include "tpgcn/skeleton_io.hpp"
#include "tpgcn/topology.hpp"

namespace tpgcn {

enum class GraphScaleMode { Baseline, Mutual, RandomSwap, Symmetry };

std::string to_string(GraphScaleMode mode);
GraphScaleMode parse_graph_scale(const std::string& text);
/// Graphs produced per sample: 2 for Baseline and Symmetry, 1 otherwise.
int graphs_per_sample(GraphScaleMode mode);
/// Persons inside one graph: 1 for Baseline, 2 otherwise.
int persons_per_graph(GraphScaleMode mode);

enum class Branch { Joint = 0, Bone = 1, JointMotion = 2, BoneMotion = 3 };
inline constexpr std::array<Branch, 4> kAllBranches{Branch::Joint, Branch::Bone, Branch::JointMotion, Branch::BoneMotion};
std::string_view branch_tag(Branch b);  // J, B, JM, BM
Branch parse_branch(std::string_view tag);

/// Raw coordinates and coordinates relative to each person's center joint: [2C, T, V].
Tensor<float> joint_branch(const Tensor<float>& coords, const SkeletonTopology& topology);
/// l_i = x_i - x_parent(i) per person; the center joint's bone is zero. [C, T, V].
Tensor<float> bone_vectors(const Tensor<float>& coords, const SkeletonTopology& topology);
/// Bone vectors and their direction angles arccos(l_c / |l|); pi/2 on zero bones. [2C, T, V].
Tensor<float> bone_branch(const Tensor<float>& coords, const SkeletonTopology& topology);
/// Velocity and acceleration along T, both seeded with the first frame: [2C', T, V].
Tensor<float> motion_branch(const Tensor<float>& stream);

/// Flattens bodies into graphs [C, T, V]. RandomSwap swaps the persons with
/// probability 0.5 when `training` and an rng is supplied; otherwise it behaves as Mutual.
std::vector<Tensor<float>> apply_graph_scale(const SkeletonSequence& seq, GraphScaleMode mode,
                                             std::mt19937_64* rng = nullptr, bool training = false);

enum class MirrorMode { Reflect, Copy };

/// Fills an empty slot 1 with a copy of body 0 reflected about its own center in x.
SkeletonSequence mirror_second_body(const SkeletonSequence& seq, MirrorMode mode = MirrorMode::Reflect);
/// True when body slot 1 exists and is all zeros.
bool second_body_empty(const SkeletonSequence& seq);

/// The four input streams for every graph of one sample: each [G, 2C, T, V].
struct FeatureBundle {
  std::array<Tensor<float>, 4> streams;
  int graphs_per_sample = 1;
  /// Per-graph normalized adjacency [G, K, V, V] when the labeling depends on the sample.
  std::optional<Tensor<float>> adjacency;

  const Tensor<float>& stream(Branch b) const { return streams[static_cast<std::size_t>(b)]; }
  const Tensor<float>& joint() const { return stream(Branch::Joint); }
  const Tensor<float>& bone() const { return stream(Branch::Bone); }
  const Tensor<float>& joint_motion() const { return stream(Branch::JointMotion); }
  const Tensor<float>& bone_motion() const { return stream(Branch::BoneMotion); }
  bool complete() const;
};

struct FeatureOptions {
  GraphScaleMode mode = GraphScaleMode::Mutual;
  Strategy strategy = Strategy::Physical;  // Geometric attaches per-graph adjacency
  AdjacencyOptions adjacency;
};

FeatureBundle compute_features(const SkeletonSequence& seq, const SkeletonTopology& topology,
                               const FeatureOptions& options, std::mt19937_64* rng = nullptr, bool training = false);

/// Cache layout: consecutive version-2 "2PGC" records, one per non-empty stream in
/// J, B, JM, BM order, each [2C, T, G, V] with the branch tag in the header.
/// Decoding leaves absent streams empty.
std::string encode_bundle(const FeatureBundle& bundle, const SequenceMeta& meta);
FeatureBundle decode_bundle(std::string_view bytes, SequenceMeta* meta = nullptr);

}  // namespace tpgcn
