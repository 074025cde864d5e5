#include "tpgcn/dataset.hpp"

#include <filesystem>

#include "detail/binary_io.hpp"
#include "detail/container.hpp"

namespace tpgcn {

SkeletonSequence swap_bodies(const SkeletonSequence& seq) {
  if (seq.bodies() != 2) fail(ErrorCode::ShapeMismatch, "swap needs two body slots, got " + shape_str(seq.data.shape()));
  SkeletonSequence out = seq;
  const std::int64_t n = seq.joints();
  for (std::int64_t ct = 0; ct < seq.channels() * seq.frames(); ++ct) {
    const float* src = seq.data.data() + ct * 2 * n;
    float* dst = out.data.data() + ct * 2 * n;
    std::copy_n(src, n, dst + n);
    std::copy_n(src + n, n, dst);
  }
  return out;
}

namespace {

SkeletonSequence prepare(const SkeletonSequence& raw, const DatasetOptions& options) {
  SkeletonSequence seq = raw;
  if (seq.bodies() == 1) {
    // Promote to two slots so single-body captures fit the two-person graph.
    Tensor<float> data({seq.channels(), seq.frames(), 2, seq.joints()});
    const std::int64_t n = seq.joints();
    for (std::int64_t ct = 0; ct < seq.channels() * seq.frames(); ++ct) {
      std::copy_n(seq.data.data() + ct * n, n, data.data() + ct * 2 * n);
    }
    seq.data = std::move(data);
  }
  if (seq.frames() != options.frames) seq = resample_temporal(seq, options.frames, options.resample);
  if (options.mirror_single && second_body_empty(seq)) seq = mirror_second_body(seq, options.mirror);
  return seq;
}

Sample make_sample(const SkeletonSequence& raw, const SkeletonTopology& topology, const DatasetOptions& options) {
  const SkeletonSequence seq = prepare(raw, options);
  Sample s;
  s.meta = seq.meta;
  s.bundle = compute_features(seq, topology, options.features, nullptr, false);
  if (options.features.mode == GraphScaleMode::RandomSwap) {
    s.swapped = compute_features(swap_bodies(seq), topology, options.features, nullptr, false);
  }
  return s;
}

// The first C channels of the joint stream are the raw coordinates of each graph.
void attach_adjacency(FeatureBundle& bundle, const SkeletonTopology& topology, const DatasetOptions& options) {
  const Tensor<float>& joint = bundle.joint();
  const std::int64_t g_count = joint.dim(0), c = joint.dim(1) / 2, t = joint.dim(2), v = joint.dim(3);
  const std::int64_t k = options.features.adjacency.max_hop + 1;
  const int persons = static_cast<int>(v / topology.joint_count);
  Tensor<float> adj({g_count, k, v, v});
  for (std::int64_t g = 0; g < g_count; ++g) {
    Tensor<float> coords({c, t, v});
    std::copy_n(joint.data() + g * 2 * c * t * v, c * t * v, coords.data());
    const Tensor<double> norm =
        build_adjacency(Strategy::Geometric, topology, persons, &coords, options.features.adjacency).normalized;
    for (std::int64_t i = 0; i < norm.numel(); ++i) adj[g * k * v * v + i] = static_cast<float>(norm[i]);
  }
  bundle.adjacency = std::move(adj);
}

}  // namespace

Dataset Dataset::from_sequences(const std::vector<SkeletonSequence>& sequences, std::uint32_t num_classes,
                                const DatasetOptions& options) {
  Dataset d;
  d.num_classes_ = num_classes;
  d.options_ = options;
  d.samples_.reserve(sequences.size());
  for (const auto& seq : sequences) {
    if (seq.meta.label >= num_classes) {
      fail(ErrorCode::ClassCountMismatch, "sample " + seq.meta.sample_id + " has label " +
                                              std::to_string(seq.meta.label) + " with " + std::to_string(num_classes) +
                                              " classes");
    }
    const SkeletonTopology topology = SkeletonTopology::for_joint_count(static_cast<int>(seq.joints()));
    d.samples_.push_back(make_sample(seq, topology, options));
  }
  return d;
}

Dataset Dataset::load(const DatasetManifest& manifest, const std::string& base_dir, const DatasetOptions& options) {
  manifest.validate();
  Dataset d;
  d.num_classes_ = manifest.num_classes;
  d.options_ = options;
  d.samples_.reserve(manifest.entries.size());
  const SkeletonTopology topology = SkeletonTopology::for_joint_count(static_cast<int>(manifest.joint_count));
  for (const auto& e : manifest.entries) {
    std::filesystem::path path(e.path);
    if (path.is_relative() && !base_dir.empty()) path = std::filesystem::path(base_dir) / path;
    const std::string bytes = detail::read_file(path.string());
    std::size_t offset = 0;
    const auto head = detail::decode_container(bytes, offset);
    if (head.version == 2) {
      if (options.features.mode == GraphScaleMode::RandomSwap) {
        fail(ErrorCode::InvalidArgument, "cached bundles cannot be person-swapped; ingest canonical sequences for randomswap");
      }
      Sample s;
      s.bundle = decode_bundle(bytes, &s.meta);
      s.meta.sample_id = e.sample_id;
      if (!s.bundle.complete()) fail(ErrorCode::ConfigMismatch, "cached bundle " + e.path + " lacks some branches");
      if (options.features.strategy == Strategy::Geometric) attach_adjacency(s.bundle, topology, options);
      d.samples_.push_back(std::move(s));
    } else {
      SkeletonSequence seq = read_canonical(bytes, e.sample_id);
      d.samples_.push_back(make_sample(seq, topology, options));
    }
    d.samples_.back().meta.label = e.label;
  }
  return d;
}

const FeatureBundle& Dataset::view(std::size_t i, bool training, std::mt19937_64* rng) const {
  const Sample& s = samples_.at(i);
  if (training && s.swapped && rng != nullptr && ((*rng)() >> 63) != 0) return *s.swapped;
  return s.bundle;
}

}  // namespace tpgcn
