#include "tpgcn/adjacency.hpp"

#include <cmath>
#include <deque>
#include <json.hpp>

namespace tpgcn {

std::string to_string(Strategy s) {
  switch (s) {
    case Strategy::Physical: return "physical";
    case Strategy::Pairwise: return "pairwise";
    case Strategy::Interactive: return "interactive";
    case Strategy::Geometric: return "geometric";
    case Strategy::FullyConnected: return "fc";
    case Strategy::OnlyPairwise: return "onlypairwise";
  }
  return "unknown";
}

Strategy parse_strategy(const std::string& text) {
  for (Strategy s : {Strategy::Physical, Strategy::Pairwise, Strategy::Interactive, Strategy::Geometric,
                     Strategy::FullyConnected, Strategy::OnlyPairwise}) {
    if (to_string(s) == text) return s;
  }
  fail(ErrorCode::InvalidArgument, "unknown labeling strategy '" + text + "'");
}

bool is_swap_symmetric(Strategy s) { return s != Strategy::Geometric; }

namespace {

void link(Tensor<double>& a, std::int64_t i, std::int64_t j, double w = 1.0) {
  if (i == j) return;
  a.at({i, j}) = w;
  a.at({j, i}) = w;
}

void add_bones(Tensor<double>& a, const SkeletonTopology& t, int persons) {
  for (int p = 0; p < persons; ++p) {
    for (auto [u, v] : t.bone_edges) link(a, p * t.joint_count + u, p * t.joint_count + v);
  }
}

}  // namespace

std::int64_t LabeledAdjacency::edge_count() const {
  std::int64_t count = 0;
  for (std::int64_t i = 0; i < vertices; ++i) {
    for (std::int64_t j = i + 1; j < vertices; ++j) {
      if (weights.at({i, j}) != 0.0) ++count;
    }
  }
  return count;
}

std::string LabeledAdjacency::to_json() const {
  using nlohmann::json;
  auto matrix = [this](const Tensor<double>& t, std::int64_t k) {
    json rows = json::array();
    const double* base = t.data() + k * vertices * vertices;
    for (std::int64_t i = 0; i < vertices; ++i) {
      rows.push_back(std::vector<double>(base + i * vertices, base + (i + 1) * vertices));
    }
    return rows;
  };
  json doc;
  doc["strategy"] = to_string(strategy);
  doc["V"] = vertices;
  doc["K"] = subset_count();
  doc["matrices"] = json::array();
  doc["subsets"] = json::array();
  for (std::int64_t k = 0; k < subset_count(); ++k) {
    doc["matrices"].push_back(matrix(normalized, k));
    doc["subsets"].push_back(matrix(subsets, k));
  }
  doc["weights"] = matrix(weights, 0);
  return doc.dump();
}

namespace {

template <typename C>
Tensor<double> proximity(const Tensor<C>& coords) {
  if (coords.rank() != 3) fail(ErrorCode::ShapeMismatch, "coordinates must be [C,T,V], got " + shape_str(coords.shape()));
  const std::int64_t c_count = coords.dim(0), t_count = coords.dim(1), v_count = coords.dim(2);
  if (t_count < 1) fail(ErrorCode::MissingSequence, "geometric labeling needs at least one frame");
  Tensor<double> a({v_count, v_count});
  std::vector<double> frame(static_cast<std::size_t>(c_count * v_count));
  for (std::int64_t t = 0; t < t_count; ++t) {
    for (std::int64_t c = 0; c < c_count; ++c) {
      for (std::int64_t v = 0; v < v_count; ++v) {
        frame[static_cast<std::size_t>(v * c_count + c)] = coords[(c * t_count + t) * v_count + v];
      }
    }
    for (std::int64_t i = 0; i < v_count; ++i) {
      for (std::int64_t j = i + 1; j < v_count; ++j) {
        double d2 = 0.0;
        for (std::int64_t c = 0; c < c_count; ++c) {
          const double d = frame[static_cast<std::size_t>(i * c_count + c)] - frame[static_cast<std::size_t>(j * c_count + c)];
          d2 += d * d;
        }
        a.at({i, j}) += std::exp(-d2 / static_cast<double>(c_count));
      }
    }
  }
  for (std::int64_t i = 0; i < v_count; ++i) {
    for (std::int64_t j = i + 1; j < v_count; ++j) {
      const double w = a.at({i, j}) / static_cast<double>(t_count);
      a.at({i, j}) = w;
      a.at({j, i}) = w;
    }
  }
  return a;
}

}  // namespace

Tensor<double> geometric_correlation(const Tensor<float>& coords) { return proximity(coords); }
Tensor<double> geometric_correlation(const Tensor<double>& coords) { return proximity(coords); }

Tensor<double> labeled_weights(Strategy strategy, const SkeletonTopology& topology, int persons,
                               const Tensor<float>* coords, const AdjacencyOptions& options) {
  topology.validate();
  if (persons != 1 && persons != 2) fail(ErrorCode::InvalidArgument, "graphs hold one or two persons");
  const std::int64_t n = topology.joint_count;
  const std::int64_t v = n * persons;
  Tensor<double> a({v, v});
  const bool two = persons == 2;
  switch (strategy) {
    case Strategy::Physical:
    case Strategy::Pairwise:
    case Strategy::Interactive:
      add_bones(a, topology, persons);
      if (two) link(a, topology.center_joint, n + topology.center_joint);
      if (strategy == Strategy::Pairwise && two) {
        for (std::int64_t i = 0; i < n; ++i) link(a, i, n + i);
      }
      if (strategy == Strategy::Interactive) {
        const int lh = topology.hand_joints[0], rh = topology.hand_joints[1];
        for (int p = 0; p < persons; ++p) link(a, p * n + lh, p * n + rh);
        if (two) {
          link(a, lh, n + lh);
          link(a, rh, n + rh);
          if (options.interactive_cross_hands) {
            link(a, lh, n + rh);
            link(a, rh, n + lh);
          }
        }
      }
      break;
    case Strategy::FullyConnected:
      for (std::int64_t i = 0; i < v; ++i) {
        for (std::int64_t j = 0; j < v; ++j) a.at({i, j}) = i == j ? 0.0 : 1.0;
      }
      break;
    case Strategy::OnlyPairwise:
      if (two) {
        for (std::int64_t i = 0; i < n; ++i) link(a, i, n + i);
      }
      break;
    case Strategy::Geometric: {
      if (coords == nullptr) fail(ErrorCode::MissingSequence, "geometric labeling needs a sequence");
      if (coords->rank() != 3 || coords->dim(2) != v) {
        fail(ErrorCode::ShapeMismatch, "geometric coordinates " + shape_str(coords->shape()) + " for " +
                                           std::to_string(v) + " vertices");
      }
      const Tensor<double> corr = geometric_correlation(*coords);
      for (std::int64_t i = 0; i < v; ++i) {
        for (std::int64_t j = 0; j < v; ++j) {
          const double w = corr.at({i, j});
          a.at({i, j}) = w >= options.geometric_threshold ? w : 0.0;
        }
      }
      if (options.geometric_keep_bones) {
        for (int p = 0; p < persons; ++p) {
          for (auto [x, y] : topology.bone_edges) {
            const std::int64_t i = p * n + x, j = p * n + y;
            link(a, i, j, corr.at({i, j}));
          }
        }
      }
      break;
    }
  }
  return a;
}

HopPartition hop_partition(const Tensor<double>& weights, int max_hop) {
  if (weights.rank() != 2 || weights.dim(0) != weights.dim(1)) {
    fail(ErrorCode::ShapeMismatch, "adjacency must be square, got " + shape_str(weights.shape()));
  }
  if (max_hop < 1) fail(ErrorCode::InvalidArgument, "max hop distance must be >= 1");
  const std::int64_t v = weights.dim(0);
  for (std::int64_t i = 0; i < v; ++i) {
    for (std::int64_t j = i + 1; j < v; ++j) {
      if (weights.at({i, j}) != weights.at({j, i})) {
        fail(ErrorCode::NonSymmetric, "A[" + std::to_string(i) + "][" + std::to_string(j) + "] != A[" +
                                          std::to_string(j) + "][" + std::to_string(i) + "]");
      }
    }
  }
  std::vector<std::vector<std::int64_t>> nbr(static_cast<std::size_t>(v));
  for (std::int64_t i = 0; i < v; ++i) {
    for (std::int64_t j = 0; j < v; ++j) {
      if (i != j && weights.at({i, j}) != 0.0) nbr[static_cast<std::size_t>(i)].push_back(j);
    }
  }
  HopPartition out;
  out.hops.assign(static_cast<std::size_t>(v * v), kUnreachable);
  for (std::int64_t s = 0; s < v; ++s) {
    int* row = out.hops.data() + s * v;
    row[s] = 0;
    std::deque<std::int64_t> queue{s};
    while (!queue.empty()) {
      const std::int64_t u = queue.front();
      queue.pop_front();
      for (std::int64_t w : nbr[static_cast<std::size_t>(u)]) {
        if (row[w] == kUnreachable) {
          row[w] = row[u] + 1;
          queue.push_back(w);
        }
      }
    }
  }
  out.subsets = Tensor<double>({max_hop + 1, v, v});
  for (std::int64_t i = 0; i < v; ++i) {
    out.subsets.at({0, i, i}) = 1.0;
    for (std::int64_t j = 0; j < v; ++j) {
      const int d = out.hops[static_cast<std::size_t>(i * v + j)];
      if (d >= 1 && d <= max_hop) out.subsets.at({d, i, j}) = weights.at({i, j}) != 0.0 ? weights.at({i, j}) : 1.0;
    }
  }
  return out;
}

Tensor<double> normalize(const Tensor<double>& subsets) {
  const bool single = subsets.rank() == 2;
  if ((!single && subsets.rank() != 3) || subsets.dim(-1) != subsets.dim(-2)) {
    fail(ErrorCode::ShapeMismatch, "normalize expects [V,V] or [K,V,V], got " + shape_str(subsets.shape()));
  }
  const std::int64_t k_count = single ? 1 : subsets.dim(0);
  const std::int64_t v = subsets.dim(-1);
  Tensor<double> out(subsets.shape());
  std::vector<double> scale(static_cast<std::size_t>(v));
  for (std::int64_t k = 0; k < k_count; ++k) {
    const double* a = subsets.data() + k * v * v;
    double* o = out.data() + k * v * v;
    for (std::int64_t i = 0; i < v; ++i) {
      double degree = 0.0;
      for (std::int64_t j = 0; j < v; ++j) {
        if (a[i * v + j] < 0.0) fail(ErrorCode::InvalidArgument, "normalize needs non-negative entries");
        degree += a[i * v + j];
      }
      // Zero rows get a tiny degree; their entries are zero so the row stays zero.
      if (degree == 0.0) degree = 1e-4;
      scale[static_cast<std::size_t>(i)] = 1.0 / std::sqrt(degree);
    }
    for (std::int64_t i = 0; i < v; ++i) {
      for (std::int64_t j = 0; j < v; ++j) {
        o[i * v + j] = a[i * v + j] == 0.0 ? 0.0 : a[i * v + j] * scale[static_cast<std::size_t>(i)] * scale[static_cast<std::size_t>(j)];
      }
    }
  }
  return out;
}

LabeledAdjacency build_adjacency(Strategy strategy, const SkeletonTopology& topology, int persons,
                                 const Tensor<float>* coords, const AdjacencyOptions& options) {
  LabeledAdjacency out;
  out.strategy = strategy;
  out.weights = labeled_weights(strategy, topology, persons, coords, options);
  out.vertices = out.weights.dim(0);
  HopPartition part = hop_partition(out.weights, options.max_hop);
  out.hops = std::move(part.hops);
  out.subsets = std::move(part.subsets);
  out.normalized = normalize(out.subsets);
  return out;
}

LabeledAdjacency build_adjacency(Strategy strategy, const SkeletonTopology& topology, bool two_person,
                                 const SkeletonSequence* sequence, const AdjacencyOptions& options) {
  const int persons = two_person ? 2 : 1;
  if (strategy != Strategy::Geometric) return build_adjacency(strategy, topology, persons, nullptr, options);
  if (sequence == nullptr) fail(ErrorCode::MissingSequence, "geometric labeling needs a sequence");
  const std::int64_t c = sequence->channels(), t = sequence->frames(), n = sequence->joints();
  if (n != topology.joint_count || sequence->bodies() < persons) {
    fail(ErrorCode::ShapeMismatch, "sequence " + shape_str(sequence->data.shape()) + " does not fit topology " +
                                       topology.name);
  }
  Tensor<float> coords({c, t, persons * n});
  for (std::int64_t ci = 0; ci < c; ++ci) {
    for (std::int64_t ti = 0; ti < t; ++ti) {
      for (int m = 0; m < persons; ++m) {
        for (std::int64_t j = 0; j < n; ++j) coords.at({ci, ti, m * n + j}) = sequence->data.at({ci, ti, m, j});
      }
    }
  }
  return build_adjacency(strategy, topology, persons, &coords, options);
}

}  // namespace tpgcn
