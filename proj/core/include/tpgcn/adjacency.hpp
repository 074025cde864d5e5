#pragma once

#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "tpgcn/skeleton_io.hpp"
#include "tpgcn/tensor.hpp"
#include "tpgcn/topology.hpp"

namespace tpgcn {

enum class Strategy { Physical, Pairwise, Interactive, Geometric, FullyConnected, OnlyPairwise };

std::string to_string(Strategy s);
/// Accepts physical|pairwise|interactive|geometric|fc|onlypairwise.
Strategy parse_strategy(const std::string& text);
/// True when swapping the two persons maps the adjacency onto itself for every input.
bool is_swap_symmetric(Strategy s);

inline constexpr int kUnreachable = std::numeric_limits<int>::max();

struct AdjacencyOptions {
  int max_hop = 2;                     // D; K = D + 1 subsets
  double geometric_threshold = 0.3;    // weaker correlations are dropped
  bool geometric_keep_bones = true;    // bones survive the threshold with their own weight
  bool interactive_cross_hands = false;  // also link left hand of A with right hand of B and vice versa
};

struct HopPartition {
  std::vector<int> hops;  // V*V row-major, kUnreachable when disconnected
  Tensor<double> subsets;  // [K, V, V]; subset 0 is the identity
};

struct LabeledAdjacency {
  Strategy strategy = Strategy::Physical;
  std::int64_t vertices = 0;
  Tensor<double> weights;     // A [V, V], symmetric, zero diagonal
  std::vector<int> hops;      // shortest-path lengths on the support of A
  Tensor<double> subsets;     // A_d [K, V, V]
  Tensor<double> normalized;  // Lambda_d^-1/2 A_d Lambda_d^-1/2 [K, V, V]

  std::int64_t subset_count() const { return subsets.dim(0); }
  std::int64_t edge_count() const;  // undirected nonzero off-diagonal pairs of A
  /// {strategy, V, K, matrices (normalized stack), weights, subsets}
  std::string to_json() const;
};

/// Pairwise proximity over coordinates [C, T, V]:
/// a_ij = mean_t exp(-|x_i^t - x_j^t|^2 / C) for i != j, zero diagonal.
Tensor<double> geometric_correlation(const Tensor<float>& coords);
Tensor<double> geometric_correlation(const Tensor<double>& coords);

/// Raw weighted adjacency of the graph over persons * N vertices. `coords`
/// ([C, T, persons*N]) is required for Geometric only.
Tensor<double> labeled_weights(Strategy strategy, const SkeletonTopology& topology, int persons,
                               const Tensor<float>* coords, const AdjacencyOptions& options = {});

/// All-pairs BFS distances on the unweighted support of A and the K = D + 1 hop subsets.
HopPartition hop_partition(const Tensor<double>& weights, int max_hop);

/// Symmetric degree normalization of one [V,V] matrix or a [K,V,V] stack; rows with
/// zero degree stay zero.
Tensor<double> normalize(const Tensor<double>& subsets);

LabeledAdjacency build_adjacency(Strategy strategy, const SkeletonTopology& topology, int persons,
                                 const Tensor<float>* coords, const AdjacencyOptions& options = {});

/// Sequence-level entry: two_person selects V = 2N over both bodies, otherwise V = N
/// over body 0. The sequence is required for Geometric (MissingSequence otherwise).
LabeledAdjacency build_adjacency(Strategy strategy, const SkeletonTopology& topology, bool two_person,
                                 const SkeletonSequence* sequence, const AdjacencyOptions& options = {});

}  // namespace tpgcn
