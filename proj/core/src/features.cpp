#include "tpgcn/features.hpp"

#include <cmath>
#include <numbers>

#include "detail/container.hpp"

namespace tpgcn {

std::string to_string(GraphScaleMode mode) {
  switch (mode) {
    case GraphScaleMode::Baseline: return "baseline";
    case GraphScaleMode::Mutual: return "mutual";
    case GraphScaleMode::RandomSwap: return "randomswap";
    case GraphScaleMode::Symmetry: return "symmetry";
  }
  return "unknown";
}

GraphScaleMode parse_graph_scale(const std::string& text) {
  for (auto m : {GraphScaleMode::Baseline, GraphScaleMode::Mutual, GraphScaleMode::RandomSwap, GraphScaleMode::Symmetry}) {
    if (to_string(m) == text) return m;
  }
  fail(ErrorCode::InvalidArgument, "unknown graph-scale mode '" + text + "'");
}

int graphs_per_sample(GraphScaleMode mode) {
  return mode == GraphScaleMode::Baseline || mode == GraphScaleMode::Symmetry ? 2 : 1;
}

int persons_per_graph(GraphScaleMode mode) { return mode == GraphScaleMode::Baseline ? 1 : 2; }

std::string_view branch_tag(Branch b) {
  switch (b) {
    case Branch::Joint: return "J";
    case Branch::Bone: return "B";
    case Branch::JointMotion: return "JM";
    case Branch::BoneMotion: return "BM";
  }
  return "?";
}

Branch parse_branch(std::string_view tag) {
  for (Branch b : kAllBranches) {
    if (branch_tag(b) == tag) return b;
  }
  fail(ErrorCode::InvalidArgument, "unknown branch tag '" + std::string(tag) + "'");
}

namespace {

int persons_in(const Tensor<float>& coords, const SkeletonTopology& topology) {
  if (coords.rank() != 3) fail(ErrorCode::ShapeMismatch, "graph coordinates must be [C,T,V], got " + shape_str(coords.shape()));
  const std::int64_t v = coords.dim(2);
  if (topology.joint_count <= 0 || v % topology.joint_count != 0) {
    fail(ErrorCode::ShapeMismatch, std::to_string(v) + " vertices do not tile " + topology.name);
  }
  return static_cast<int>(v / topology.joint_count);
}

}  // namespace

Tensor<float> joint_branch(const Tensor<float>& coords, const SkeletonTopology& topology) {
  const int persons = persons_in(coords, topology);
  const std::int64_t c_count = coords.dim(0), t_count = coords.dim(1), v = coords.dim(2);
  const std::int64_t n = topology.joint_count;
  Tensor<float> out({2 * c_count, t_count, v});
  for (std::int64_t c = 0; c < c_count; ++c) {
    for (std::int64_t t = 0; t < t_count; ++t) {
      const float* src = coords.data() + (c * t_count + t) * v;
      float* raw = out.data() + (c * t_count + t) * v;
      float* rel = out.data() + ((c_count + c) * t_count + t) * v;
      for (int p = 0; p < persons; ++p) {
        const float center = src[p * n + topology.center_joint];
        for (std::int64_t j = 0; j < n; ++j) {
          raw[p * n + j] = src[p * n + j];
          rel[p * n + j] = src[p * n + j] - center;
        }
      }
    }
  }
  return out;
}

Tensor<float> bone_vectors(const Tensor<float>& coords, const SkeletonTopology& topology) {
  const int persons = persons_in(coords, topology);
  const std::int64_t c_count = coords.dim(0), t_count = coords.dim(1), v = coords.dim(2);
  const std::int64_t n = topology.joint_count;
  const std::vector<int> parent = topology.parents();
  Tensor<float> out({c_count, t_count, v});
  for (std::int64_t ct = 0; ct < c_count * t_count; ++ct) {
    const float* src = coords.data() + ct * v;
    float* dst = out.data() + ct * v;
    for (int p = 0; p < persons; ++p) {
      for (std::int64_t j = 0; j < n; ++j) {
        dst[p * n + j] = src[p * n + j] - src[p * n + parent[static_cast<std::size_t>(j)]];
      }
    }
  }
  return out;
}

Tensor<float> bone_branch(const Tensor<float>& coords, const SkeletonTopology& topology) {
  const Tensor<float> bones = bone_vectors(coords, topology);
  const std::int64_t c_count = bones.dim(0), t_count = bones.dim(1), v = bones.dim(2);
  const std::int64_t plane = t_count * v;
  Tensor<float> out({2 * c_count, t_count, v});
  std::copy_n(bones.data(), bones.numel(), out.data());
  for (std::int64_t k = 0; k < plane; ++k) {
    double norm2 = 0.0;
    for (std::int64_t c = 0; c < c_count; ++c) {
      const double l = bones[c * plane + k];
      norm2 += l * l;
    }
    const double norm = std::sqrt(norm2);
    for (std::int64_t c = 0; c < c_count; ++c) {
      const double cosine = norm > 0.0 ? std::clamp(bones[c * plane + k] / norm, -1.0, 1.0) : 0.0;
      out[(c_count + c) * plane + k] = static_cast<float>(std::acos(cosine));
    }
  }
  return out;
}

Tensor<float> motion_branch(const Tensor<float>& stream) {
  if (stream.rank() != 3 || stream.dim(1) < 1) {
    fail(ErrorCode::ShapeMismatch, "motion input must be [C,T,V] with T >= 1, got " + shape_str(stream.shape()));
  }
  const std::int64_t c_count = stream.dim(0), t_count = stream.dim(1), v = stream.dim(2);
  Tensor<float> out({2 * c_count, t_count, v});
  std::vector<float> velocity(static_cast<std::size_t>(t_count * v));
  for (std::int64_t c = 0; c < c_count; ++c) {
    const float* x = stream.data() + c * t_count * v;
    float* vel = out.data() + c * t_count * v;
    float* acc = out.data() + (c_count + c) * t_count * v;
    for (std::int64_t j = 0; j < v; ++j) {
      vel[j] = x[j];
      acc[j] = x[j];
    }
    for (std::int64_t t = 1; t < t_count; ++t) {
      for (std::int64_t j = 0; j < v; ++j) {
        vel[t * v + j] = x[t * v + j] - x[(t - 1) * v + j];
        acc[t * v + j] = vel[t * v + j] - vel[(t - 1) * v + j];
      }
    }
  }
  return out;
}

namespace {

Tensor<float> flatten_bodies(const SkeletonSequence& seq, const std::vector<int>& order) {
  const std::int64_t c_count = seq.channels(), t_count = seq.frames(), n = seq.joints();
  const auto persons = static_cast<std::int64_t>(order.size());
  Tensor<float> out({c_count, t_count, persons * n});
  for (std::int64_t c = 0; c < c_count; ++c) {
    for (std::int64_t t = 0; t < t_count; ++t) {
      for (std::int64_t p = 0; p < persons; ++p) {
        const float* src = seq.data.data() + ((c * t_count + t) * seq.bodies() + order[static_cast<std::size_t>(p)]) * n;
        std::copy_n(src, n, out.data() + (c * t_count + t) * persons * n + p * n);
      }
    }
  }
  return out;
}

}  // namespace

std::vector<Tensor<float>> apply_graph_scale(const SkeletonSequence& seq, GraphScaleMode mode, std::mt19937_64* rng,
                                             bool training) {
  if (seq.data.rank() != 4 || seq.bodies() != 2) {
    fail(ErrorCode::ShapeMismatch, "graph-scale modes need two body slots, got " + shape_str(seq.data.shape()));
  }
  switch (mode) {
    case GraphScaleMode::Mutual: return {flatten_bodies(seq, {0, 1})};
    case GraphScaleMode::RandomSwap: {
      const bool swap = training && rng != nullptr && ((*rng)() >> 63) != 0;
      return {flatten_bodies(seq, swap ? std::vector<int>{1, 0} : std::vector<int>{0, 1})};
    }
    case GraphScaleMode::Symmetry: return {flatten_bodies(seq, {0, 1}), flatten_bodies(seq, {1, 0})};
    case GraphScaleMode::Baseline: return {flatten_bodies(seq, {0}), flatten_bodies(seq, {1})};
  }
  fail(ErrorCode::InvalidArgument, "unhandled graph-scale mode");
}

bool second_body_empty(const SkeletonSequence& seq) {
  if (seq.bodies() < 2) return false;
  const std::int64_t n = seq.joints();
  for (std::int64_t ct = 0; ct < seq.channels() * seq.frames(); ++ct) {
    const float* slot = seq.data.data() + (ct * seq.bodies() + 1) * n;
    for (std::int64_t j = 0; j < n; ++j) {
      if (slot[j] != 0.0f) return false;
    }
  }
  return true;
}

SkeletonSequence mirror_second_body(const SkeletonSequence& seq, MirrorMode mode) {
  if (!second_body_empty(seq)) fail(ErrorCode::InvalidArgument, "mirror needs an empty second body slot");
  const SkeletonTopology topology = SkeletonTopology::for_joint_count(static_cast<int>(seq.joints()));
  SkeletonSequence out = seq;
  const std::int64_t n = seq.joints(), t_count = seq.frames();
  for (std::int64_t c = 0; c < seq.channels(); ++c) {
    for (std::int64_t t = 0; t < t_count; ++t) {
      const float* body0 = seq.data.data() + ((c * t_count + t) * 2 + 0) * n;
      float* body1 = out.data.data() + ((c * t_count + t) * 2 + 1) * n;
      const float center = body0[topology.center_joint];
      for (std::int64_t j = 0; j < n; ++j) {
        body1[j] = (mode == MirrorMode::Reflect && c == 0) ? 2.0f * center - body0[j] : body0[j];
      }
    }
  }
  return out;
}

FeatureBundle compute_features(const SkeletonSequence& seq, const SkeletonTopology& topology,
                               const FeatureOptions& options, std::mt19937_64* rng, bool training) {
  if (seq.joints() != topology.joint_count) {
    fail(ErrorCode::ShapeMismatch, "sequence has " + std::to_string(seq.joints()) + " joints, topology " +
                                       topology.name + " has " + std::to_string(topology.joint_count));
  }
  const auto graphs = apply_graph_scale(seq, options.mode, rng, training);
  FeatureBundle bundle;
  bundle.graphs_per_sample = static_cast<int>(graphs.size());
  const auto g_count = static_cast<std::int64_t>(graphs.size());
  const std::int64_t c2 = 2 * seq.channels(), t_count = seq.frames(), v = graphs.front().dim(2);
  for (auto& s : bundle.streams) s = Tensor<float>({g_count, c2, t_count, v});
  const bool per_sample_graph = options.strategy == Strategy::Geometric;
  const std::int64_t k_count = options.adjacency.max_hop + 1;
  if (per_sample_graph) bundle.adjacency = Tensor<float>({g_count, k_count, v, v});
  const std::int64_t slab = c2 * t_count * v;
  for (std::int64_t g = 0; g < g_count; ++g) {
    const Tensor<float>& coords = graphs[static_cast<std::size_t>(g)];
    const Tensor<float> bones = bone_vectors(coords, topology);
    const std::array<Tensor<float>, 4> parts{joint_branch(coords, topology), bone_branch(coords, topology),
                                             motion_branch(coords), motion_branch(bones)};
    for (std::size_t b = 0; b < 4; ++b) {
      std::copy_n(parts[b].data(), slab, bundle.streams[b].data() + g * slab);
    }
    if (per_sample_graph) {
      const LabeledAdjacency adj =
          build_adjacency(options.strategy, topology, persons_per_graph(options.mode), &coords, options.adjacency);
      float* dst = bundle.adjacency->data() + g * k_count * v * v;
      for (std::int64_t i = 0; i < adj.normalized.numel(); ++i) dst[i] = static_cast<float>(adj.normalized[i]);
    }
  }
  return bundle;
}

bool FeatureBundle::complete() const {
  for (const auto& s : streams) {
    if (s.empty()) return false;
  }
  return true;
}

std::string encode_bundle(const FeatureBundle& bundle, const SequenceMeta& meta) {
  std::string out;
  for (Branch b : kAllBranches) {
    const Tensor<float>& s = bundle.stream(b);
    if (s.empty()) continue;
    if (s.rank() != 4) fail(ErrorCode::ShapeMismatch, "bundle stream must be [G,2C,T,V]");
    const std::int64_t g_count = s.dim(0), c2 = s.dim(1), t_count = s.dim(2), v = s.dim(3);
    detail::ContainerRecord record;
    record.version = 2;
    record.label = meta.label;
    record.subject_id = meta.subject_id;
    record.camera_id = meta.camera_id;
    record.setup_id = meta.setup_id;
    record.branch_tag = static_cast<std::uint32_t>(b);
    record.data = Tensor<float>({c2, t_count, g_count, v});
    for (std::int64_t g = 0; g < g_count; ++g) {
      for (std::int64_t c = 0; c < c2; ++c) {
        for (std::int64_t t = 0; t < t_count; ++t) {
          std::copy_n(s.data() + ((g * c2 + c) * t_count + t) * v, v,
                      record.data.data() + ((c * t_count + t) * g_count + g) * v);
        }
      }
    }
    out += detail::encode_container(record);
  }
  return out;
}

FeatureBundle decode_bundle(std::string_view bytes, SequenceMeta* meta) {
  FeatureBundle bundle;
  std::size_t offset = 0;
  int next = 0;
  if (bytes.empty()) fail(ErrorCode::TruncatedFile, "empty bundle");
  while (offset < bytes.size()) {
    auto record = detail::decode_container(bytes, offset);
    if (record.version != 2 || !record.branch_tag) {
      fail(ErrorCode::UnsupportedVersion, "bundle records must be version 2 with a branch tag");
    }
    const auto tag = static_cast<int>(*record.branch_tag);
    if (tag < next || tag > 3) fail(ErrorCode::InvalidArgument, "bundle branch tags out of order");
    next = tag + 1;
    const std::int64_t c2 = record.data.dim(0), t_count = record.data.dim(1), g_count = record.data.dim(2),
                       v = record.data.dim(3);
    Tensor<float> s({g_count, c2, t_count, v});
    for (std::int64_t g = 0; g < g_count; ++g) {
      for (std::int64_t c = 0; c < c2; ++c) {
        for (std::int64_t t = 0; t < t_count; ++t) {
          std::copy_n(record.data.data() + ((c * t_count + t) * g_count + g) * v, v,
                      s.data() + ((g * c2 + c) * t_count + t) * v);
        }
      }
    }
    bundle.graphs_per_sample = static_cast<int>(g_count);
    bundle.streams[static_cast<std::size_t>(tag)] = std::move(s);
    if (meta != nullptr) {
      meta->label = record.label;
      meta->subject_id = record.subject_id;
      meta->camera_id = record.camera_id;
      meta->setup_id = record.setup_id;
    }
  }
  return bundle;
}

}  // namespace tpgcn
