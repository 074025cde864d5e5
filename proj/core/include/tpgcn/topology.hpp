#pragma once

#include <string>
#include <utility>
#include <vector>

#include "tpgcn/tensor.hpp"

namespace tpgcn {

inline constexpr int kBodyParts = 5;

/// Single-body joint layout. Parts: 0 torso, 1 left arm/hand, 2 right arm/hand,
/// 3 left leg, 4 right leg.
struct SkeletonTopology {
  std::string name;
  int joint_count = 0;
  std::vector<std::pair<int, int>> bone_edges;  // (parent, child)
  int center_joint = 0;
  std::vector<int> part_of;      // joint -> part id
  std::vector<int> hand_joints;  // {left, right}
  std::vector<int> leg_joints;

  /// NTU RGB+D 25-joint Kinect v2 layout, 0-based; center = spine middle (1).
  static SkeletonTopology ntu25();
  /// SBU 15-joint layout, 0-based; center = torso (2).
  static SkeletonTopology sbu15();
  /// Six joints (hub, head, two hands, two feet) for fast tests and gradient checks.
  static SkeletonTopology star6();
  static SkeletonTopology for_joint_count(int joints);

  /// Throws IndexOutOfRange for bad indices, InvalidArgument if the bones are not a
  /// spanning tree or the part map does not use exactly five parts.
  void validate() const;
  /// Parent of each joint on the path toward the center; the center maps to itself.
  std::vector<int> parents() const;
};

/// Average pooling from V = persons * N joints to persons * 5 parts: [V, persons*5],
/// each column sums to one. Part p of person m is column m*5 + p.
Tensor<double> part_pool_matrix(const SkeletonTopology& topology, int persons);
/// 0/1 membership [persons*5, V] expanding part scores back onto joints.
Tensor<double> part_membership(const SkeletonTopology& topology, int persons);

}  // namespace tpgcn
