#include "tpgcn/topology.hpp"

#include <algorithm>
#include <queue>
#include <set>

namespace tpgcn {

namespace {

std::vector<std::pair<int, int>> one_based(std::initializer_list<std::pair<int, int>> edges) {
  std::vector<std::pair<int, int>> out;
  for (auto [a, b] : edges) out.emplace_back(a - 1, b - 1);
  return out;
}

}  // namespace

SkeletonTopology SkeletonTopology::ntu25() {
  SkeletonTopology t;
  t.name = "ntu25";
  t.joint_count = 25;
  // Kinect v2 joint numbering (1-based): 1 spine base, 2 spine mid, 3 neck, 4 head,
  // 5-8 left arm to hand, 9-12 right arm to hand, 13-16 left leg, 17-20 right leg,
  // 21 spine shoulder, 22/23 left hand tip/thumb, 24/25 right hand tip/thumb
  // (tips hang off the thumbs, as in the common ST-GCN edge list).
  t.bone_edges = one_based({{2, 1},  {21, 2},  {21, 3},  {3, 4},   {21, 5},  {5, 6},  {6, 7},  {7, 8},
                            {21, 9}, {9, 10},  {10, 11}, {11, 12}, {1, 13},  {13, 14}, {14, 15}, {15, 16},
                            {1, 17}, {17, 18}, {18, 19}, {19, 20}, {23, 22}, {8, 23},  {25, 24}, {12, 25}});
  t.center_joint = 1;
  t.part_of.assign(25, 0);
  for (int j : {4, 5, 6, 7, 21, 22}) t.part_of[static_cast<std::size_t>(j)] = 1;
  for (int j : {8, 9, 10, 11, 23, 24}) t.part_of[static_cast<std::size_t>(j)] = 2;
  for (int j : {12, 13, 14, 15}) t.part_of[static_cast<std::size_t>(j)] = 3;
  for (int j : {16, 17, 18, 19}) t.part_of[static_cast<std::size_t>(j)] = 4;
  t.hand_joints = {7, 11};
  t.leg_joints = {12, 13, 14, 15, 16, 17, 18, 19};
  return t;
}

SkeletonTopology SkeletonTopology::sbu15() {
  SkeletonTopology t;
  t.name = "sbu15";
  t.joint_count = 15;
  // 1 head, 2 neck, 3 torso, 4-6 left shoulder/elbow/hand, 7-9 right, 10-12 left
  // hip/knee/foot, 13-15 right.
  t.bone_edges = one_based({{2, 1}, {3, 2}, {2, 4}, {4, 5}, {5, 6}, {2, 7}, {7, 8},
                            {8, 9}, {3, 10}, {10, 11}, {11, 12}, {3, 13}, {13, 14}, {14, 15}});
  t.center_joint = 2;
  t.part_of = {0, 0, 0, 1, 1, 1, 2, 2, 2, 3, 3, 3, 4, 4, 4};
  t.hand_joints = {5, 8};
  t.leg_joints = {9, 10, 11, 12, 13, 14};
  return t;
}

SkeletonTopology SkeletonTopology::star6() {
  SkeletonTopology t;
  t.name = "star6";
  t.joint_count = 6;
  t.bone_edges = {{0, 1}, {0, 2}, {0, 3}, {0, 4}, {0, 5}};
  t.center_joint = 0;
  t.part_of = {0, 0, 1, 2, 3, 4};
  t.hand_joints = {2, 3};
  t.leg_joints = {4, 5};
  return t;
}

SkeletonTopology SkeletonTopology::for_joint_count(int joints) {
  switch (joints) {
    case 25: return ntu25();
    case 15: return sbu15();
    case 6: return star6();
    default: fail(ErrorCode::InvalidArgument, "no built-in topology with " + std::to_string(joints) + " joints");
  }
}

void SkeletonTopology::validate() const {
  const int n = joint_count;
  auto check = [n](int j, const char* what) {
    if (j < 0 || j >= n) {
      fail(ErrorCode::IndexOutOfRange, std::string(what) + " index " + std::to_string(j) + " outside [0, " +
                                           std::to_string(n) + ")");
    }
  };
  check(center_joint, "center joint");
  for (auto [a, b] : bone_edges) {
    check(a, "bone");
    check(b, "bone");
  }
  for (int j : hand_joints) check(j, "hand");
  for (int j : leg_joints) check(j, "leg");
  if (static_cast<int>(bone_edges.size()) != n - 1) {
    fail(ErrorCode::InvalidArgument, name + ": a tree over " + std::to_string(n) + " joints needs " +
                                         std::to_string(n - 1) + " bones");
  }
  const auto p = parents();
  if (std::count(p.begin(), p.end(), -1) != 0) fail(ErrorCode::InvalidArgument, name + ": bones are not connected");
  if (static_cast<int>(part_of.size()) != n) fail(ErrorCode::InvalidArgument, name + ": part map size");
  std::set<int> used(part_of.begin(), part_of.end());
  if (static_cast<int>(used.size()) != kBodyParts || *used.begin() != 0 || *used.rbegin() != kBodyParts - 1) {
    fail(ErrorCode::InvalidArgument, name + ": part map must use parts 0..4");
  }
  if (hand_joints.size() != 2) fail(ErrorCode::InvalidArgument, name + ": expected left and right hand joints");
}

std::vector<int> SkeletonTopology::parents() const {
  std::vector<std::vector<int>> nbr(static_cast<std::size_t>(joint_count));
  for (auto [a, b] : bone_edges) {
    if (a < 0 || b < 0 || a >= joint_count || b >= joint_count) continue;
    nbr[static_cast<std::size_t>(a)].push_back(b);
    nbr[static_cast<std::size_t>(b)].push_back(a);
  }
  std::vector<int> parent(static_cast<std::size_t>(joint_count), -1);
  if (center_joint < 0 || center_joint >= joint_count) return parent;
  parent[static_cast<std::size_t>(center_joint)] = center_joint;
  std::queue<int> q;
  q.push(center_joint);
  while (!q.empty()) {
    const int u = q.front();
    q.pop();
    for (int v : nbr[static_cast<std::size_t>(u)]) {
      if (parent[static_cast<std::size_t>(v)] == -1) {
        parent[static_cast<std::size_t>(v)] = u;
        q.push(v);
      }
    }
  }
  return parent;
}

Tensor<double> part_membership(const SkeletonTopology& topology, int persons) {
  const std::int64_t n = topology.joint_count;
  if (static_cast<std::int64_t>(topology.part_of.size()) != n) {
    fail(ErrorCode::PartMapIncomplete, topology.name + ": part map does not cover every joint");
  }
  Tensor<double> m({persons * kBodyParts, persons * n});
  for (int p = 0; p < persons; ++p) {
    for (std::int64_t j = 0; j < n; ++j) {
      const int part = topology.part_of[static_cast<std::size_t>(j)];
      if (part < 0 || part >= kBodyParts) fail(ErrorCode::PartMapIncomplete, "joint without a valid part");
      m.at({p * kBodyParts + part, p * n + j}) = 1.0;
    }
  }
  return m;
}

Tensor<double> part_pool_matrix(const SkeletonTopology& topology, int persons) {
  const Tensor<double> m = part_membership(topology, persons);
  const std::int64_t parts = m.dim(0), joints = m.dim(1);
  Tensor<double> q({joints, parts});
  for (std::int64_t p = 0; p < parts; ++p) {
    double count = 0.0;
    for (std::int64_t v = 0; v < joints; ++v) count += m.at({p, v});
    if (count == 0.0) fail(ErrorCode::PartMapIncomplete, "part " + std::to_string(p) + " has no joints");
    for (std::int64_t v = 0; v < joints; ++v) q.at({v, p}) = m.at({p, v}) / count;
  }
  return q;
}

}  // namespace tpgcn
