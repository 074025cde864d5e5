#include <doctest.h>

#include <cmath>
#include <json.hpp>

#include "test_support.hpp"
#include "tpgcn/adjacency.hpp"
#include "tpgcn/topology.hpp"

using namespace tpgcn;
using namespace tpgcn::testing;

namespace {

const std::vector<Strategy> kAll{Strategy::Physical,  Strategy::Pairwise,       Strategy::Interactive,
                                 Strategy::Geometric, Strategy::FullyConnected, Strategy::OnlyPairwise};

Tensor<double> path3() {
  Tensor<double> a({3, 3});
  a.at({0, 1}) = a.at({1, 0}) = 1.0;
  a.at({1, 2}) = a.at({2, 1}) = 1.0;
  return a;
}

// Two people, joints spread randomly, so the geometric labeling has a mix of strong and weak pairs.
Tensor<float> random_coords(const SkeletonTopology& topo, std::mt19937_64& rng) {
  return random_tensor<float>({3, 6, 2 * topo.joint_count}, rng, -0.6, 0.6);
}

}  // namespace

TEST_CASE("built-in topologies are spanning trees with five parts") {
  for (const auto& topo : {SkeletonTopology::ntu25(), SkeletonTopology::sbu15(), SkeletonTopology::star6()}) {
    CAPTURE(topo.name);
    CHECK_NOTHROW(topo.validate());
    CHECK(static_cast<int>(topo.bone_edges.size()) == topo.joint_count - 1);
    const auto parents = topo.parents();
    CHECK(parents[static_cast<std::size_t>(topo.center_joint)] == topo.center_joint);
  }
  CHECK(SkeletonTopology::ntu25().center_joint == 1);
  CHECK(SkeletonTopology::sbu15().center_joint == 2);

  SkeletonTopology broken = SkeletonTopology::ntu25();
  broken.bone_edges[0].second = 40;
  CHECK_THROWS_AS(broken.validate(), Error);
}

TEST_CASE("part pooling columns average their joints") {
  const SkeletonTopology topo = SkeletonTopology::ntu25();
  const Tensor<double> q = part_pool_matrix(topo, 2);
  CHECK(q.shape() == Shape{50, 10});
  for (std::int64_t p = 0; p < 10; ++p) {
    double s = 0.0;
    for (std::int64_t v = 0; v < 50; ++v) s += q.at({v, p});
    CHECK(s == doctest::Approx(1.0));
  }
  const Tensor<double> m = part_membership(topo, 2);
  for (std::int64_t v = 0; v < 50; ++v) {
    double s = 0.0;
    for (std::int64_t p = 0; p < 10; ++p) s += m.at({p, v});
    CHECK(s == 1.0);
  }
}

TEST_CASE("physical two-person graph has two trees and a center link") {
  const SkeletonTopology topo = SkeletonTopology::ntu25();
  const LabeledAdjacency adj = build_adjacency(Strategy::Physical, topo, 2, nullptr);
  CHECK(adj.vertices == 50);
  CHECK(adj.edge_count() == 49);
  CHECK(adj.weights.at({1, 26}) == 1.0);
  CHECK(build_adjacency(Strategy::Physical, topo, 1, nullptr).edge_count() == 24);
}

TEST_CASE("only-pairwise links corresponding joints and nothing else") {
  const LabeledAdjacency adj = build_adjacency(Strategy::OnlyPairwise, SkeletonTopology::ntu25(), 2, nullptr);
  CHECK(adj.edge_count() == 25);
  for (int i = 0; i < 25; ++i) CHECK(adj.weights.at({i, i + 25}) == 1.0);
}

TEST_CASE("pairwise, interactive and fully-connected edge counts") {
  const SkeletonTopology topo = SkeletonTopology::ntu25();
  CHECK(build_adjacency(Strategy::Pairwise, topo, 2, nullptr).edge_count() == 49 + 24);  // center pair already linked
  CHECK(build_adjacency(Strategy::Interactive, topo, 2, nullptr).edge_count() == 49 + 4);
  AdjacencyOptions cross;
  cross.interactive_cross_hands = true;
  CHECK(build_adjacency(Strategy::Interactive, topo, 2, nullptr, cross).edge_count() == 49 + 6);
  CHECK(build_adjacency(Strategy::FullyConnected, topo, 2, nullptr).edge_count() == 50 * 49 / 2);
}

TEST_CASE("hop partition on small graphs") {
  const HopPartition hp = hop_partition(path3(), 2);
  CHECK(hp.subsets.at({1, 0, 1}) == 1.0);
  CHECK(hp.subsets.at({1, 1, 2}) == 1.0);
  CHECK(hp.subsets.at({1, 0, 2}) == 0.0);
  CHECK(hp.subsets.at({2, 0, 2}) == 1.0);
  CHECK(hp.subsets.at({2, 0, 1}) == 0.0);

  Tensor<double> split({4, 4});
  split.at({0, 1}) = split.at({1, 0}) = 1.0;
  const HopPartition apart = hop_partition(split, 2);
  CHECK(apart.hops[0 * 4 + 2] == kUnreachable);
  CHECK(apart.subsets.at({1, 0, 2}) == 0.0);
  CHECK(apart.subsets.at({2, 0, 2}) == 0.0);

  Tensor<double> lopsided = path3();
  lopsided.at({0, 1}) = 0.5;
  CHECK_THROWS_AS(hop_partition(lopsided, 2), Error);
}

TEST_CASE("hop-2 subset equals the boolean square of the adjacency minus hop <= 1") {
  const LabeledAdjacency adj = build_adjacency(Strategy::Physical, SkeletonTopology::ntu25(), 2, nullptr);
  const std::int64_t v = adj.vertices;
  std::int64_t expected = 0, got = 0;
  for (std::int64_t i = 0; i < v; ++i) {
    for (std::int64_t j = 0; j < v; ++j) {
      bool two = false;
      for (std::int64_t k = 0; k < v; ++k) two = two || (adj.weights.at({i, k}) != 0.0 && adj.weights.at({k, j}) != 0.0);
      const bool near = i == j || adj.weights.at({i, j}) != 0.0;
      if (two && !near) ++expected;
      if (adj.subsets.at({2, i, j}) != 0.0) ++got;
    }
  }
  CHECK(expected > 0);
  CHECK(got == expected);
}

TEST_CASE("normalization examples") {
  const Tensor<double> eye = Tensor<double>::eye(5);
  CHECK(max_abs_diff(normalize(eye), eye) == 0.0);

  Tensor<double> edge({2, 2});
  edge.at({0, 1}) = edge.at({1, 0}) = 1.0;
  CHECK(normalize(edge).at({0, 1}) == doctest::Approx(1.0));

  Tensor<double> star({5, 5});
  for (int leaf = 1; leaf < 5; ++leaf) star.at({0, leaf}) = star.at({leaf, 0}) = 1.0;
  const Tensor<double> n = normalize(star);
  for (int leaf = 1; leaf < 5; ++leaf) CHECK(n.at({0, leaf}) == doctest::Approx(0.5));

  Tensor<double> isolated({3, 3});
  isolated.at({0, 1}) = isolated.at({1, 0}) = 1.0;
  const Tensor<double> ni = normalize(isolated);
  for (int j = 0; j < 3; ++j) CHECK(ni.at({2, j}) == 0.0);
}

TEST_CASE("normalization ignores a positive scale") {
  std::mt19937_64 rng(5);
  const Tensor<double> a = random_graph(9, 0.5, rng);
  const HopPartition hp = hop_partition(a, 2);
  Tensor<double> scaled = hp.subsets;
  for (std::int64_t i = 0; i < scaled.numel(); ++i) scaled[i] *= 3.7;
  CHECK(max_abs_diff(normalize(hp.subsets), normalize(scaled)) < 1e-6);
}

TEST_CASE("geometric proximity values") {
  Tensor<float> same({3, 4, 2});
  for (int c = 0; c < 3; ++c) {
    for (int t = 0; t < 4; ++t) same.at({c, t, 0}) = same.at({c, t, 1}) = 0.3f * static_cast<float>(c + t);
  }
  CHECK(geometric_correlation(same).at({0, 1}) == doctest::Approx(1.0).epsilon(1e-12));

  // Squared distance 3 ln 2 over C = 3 channels gives exp(-ln 2).
  Tensor<double> half({3, 2, 2});
  const double d = std::sqrt(std::log(2.0));
  for (int c = 0; c < 3; ++c) {
    for (int t = 0; t < 2; ++t) half.at({c, t, 1}) = d;
  }
  CHECK(std::abs(geometric_correlation(half).at({0, 1}) - 0.5) < 1e-9);
  CHECK(geometric_correlation(half).at({0, 0}) == 0.0);
  // Float coordinates only lose the rounding of d.
  CHECK(std::abs(geometric_correlation(half.cast<float>()).at({0, 1}) - 0.5) < 1e-6);
}

TEST_CASE("geometric labeling thresholds weak pairs and keeps bones") {
  const SkeletonTopology topo = SkeletonTopology::star6();
  std::mt19937_64 rng(2);
  // Spread wide enough that some pairs fall under the threshold.
  const Tensor<float> coords = random_tensor<float>({3, 6, 2 * topo.joint_count}, rng, -2.0, 2.0);
  const Tensor<double> raw = geometric_correlation(coords);
  const LabeledAdjacency adj = build_adjacency(Strategy::Geometric, topo, 2, &coords);
  const std::int64_t v = adj.vertices;
  int dropped = 0;
  for (std::int64_t i = 0; i < v; ++i) {
    for (std::int64_t j = 0; j < v; ++j) {
      if (i == j) continue;
      const double w = adj.weights.at({i, j});
      if (raw.at({i, j}) >= 0.3) {
        CHECK(w == doctest::Approx(raw.at({i, j})));
      } else if (w == 0.0) {
        ++dropped;
      } else {
        CHECK(w == doctest::Approx(raw.at({i, j})));  // a retained bone
      }
      CHECK(w <= 1.0);
    }
  }
  CHECK(dropped > 0);
  for (const auto& [p, c] : topo.bone_edges) CHECK(adj.weights.at({p, c}) > 0.0);

  AdjacencyOptions no_bones;
  no_bones.geometric_keep_bones = false;
  const LabeledAdjacency strict = build_adjacency(Strategy::Geometric, topo, 2, &coords, no_bones);
  for (std::int64_t i = 0; i < strict.weights.numel(); ++i) {
    CHECK((strict.weights[i] == 0.0 || strict.weights[i] >= 0.3));
  }
}

TEST_CASE("every labeling is symmetric with identity self subset and disjoint rings") {
  const SkeletonTopology topo = SkeletonTopology::ntu25();
  std::mt19937_64 rng(9);
  const Tensor<float> coords = random_coords(topo, rng);
  for (Strategy s : kAll) {
    CAPTURE(to_string(s));
    const LabeledAdjacency adj = build_adjacency(s, topo, 2, s == Strategy::Geometric ? &coords : nullptr);
    const std::int64_t v = adj.vertices;
    CHECK(adj.subset_count() == 3);
    for (std::int64_t i = 0; i < v; ++i) {
      for (std::int64_t j = 0; j < v; ++j) {
        CHECK(adj.weights.at({i, j}) == adj.weights.at({j, i}));
        CHECK(adj.subsets.at({0, i, j}) == (i == j ? 1.0 : 0.0));
        int used = 0;
        for (std::int64_t d = 0; d < 3; ++d) used += adj.subsets.at({d, i, j}) != 0.0 ? 1 : 0;
        CHECK(used <= 1);
        for (std::int64_t d = 0; d < 3; ++d) {
          CHECK(adj.normalized.at({d, i, j}) == doctest::Approx(adj.normalized.at({d, j, i})));
        }
      }
    }
  }
}

TEST_CASE("swap-symmetric strategies map onto themselves under person exchange") {
  const SkeletonTopology topo = SkeletonTopology::ntu25();
  const std::int64_t n = topo.joint_count;
  for (Strategy s : kAll) {
    if (!is_swap_symmetric(s)) continue;
    CAPTURE(to_string(s));
    const LabeledAdjacency adj = build_adjacency(s, topo, 2, nullptr);
    auto swap = [&](std::int64_t i) { return i < n ? i + n : i - n; };
    for (std::int64_t i = 0; i < 2 * n; ++i) {
      for (std::int64_t j = 0; j < 2 * n; ++j) CHECK(adj.weights.at({i, j}) == adj.weights.at({swap(i), swap(j)}));
    }
  }
  CHECK_FALSE(is_swap_symmetric(Strategy::Geometric));
}

TEST_CASE("sequence entry point and errors") {
  const SkeletonTopology topo = SkeletonTopology::ntu25();
  try {
    build_adjacency(Strategy::Geometric, topo, true, nullptr);
    FAIL("expected MissingSequence");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MissingSequence);
  }
  SkeletonSequence seq;
  std::mt19937_64 rng(4);
  seq.data = random_tensor<float>({3, 5, 2, 25}, rng, -0.5, 0.5);
  CHECK(build_adjacency(Strategy::Geometric, topo, true, &seq).vertices == 50);
  CHECK(build_adjacency(Strategy::Geometric, topo, false, &seq).vertices == 25);
  CHECK(parse_strategy("fc") == Strategy::FullyConnected);
  CHECK(parse_strategy("onlypairwise") == Strategy::OnlyPairwise);
  CHECK_THROWS_AS(parse_strategy("ring"), Error);
}

TEST_CASE("adjacency json export") {
  const LabeledAdjacency adj = build_adjacency(Strategy::Interactive, SkeletonTopology::sbu15(), 2, nullptr);
  const auto doc = nlohmann::json::parse(adj.to_json());
  CHECK(doc["strategy"] == "interactive");
  CHECK(doc["V"] == 30);
  CHECK(doc["K"] == 3);
  CHECK(doc["matrices"].size() == 3);
  CHECK(doc["matrices"][1][2][2 + 15].get<double>() == adj.normalized.at({1, 2, 17}));
}
