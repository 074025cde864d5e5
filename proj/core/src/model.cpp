#include "tpgcn/model.hpp"

#include <map>
#include <random>

namespace tpgcn {

template <typename T>
ModelInput<T> make_input(const std::vector<const FeatureBundle*>& bundles) {
  if (bundles.empty()) fail(ErrorCode::DataEmpty, "empty batch");
  const FeatureBundle& first = *bundles.front();
  const bool with_adjacency = first.adjacency.has_value();
  ModelInput<T> input;
  input.graphs_per_sample = first.graphs_per_sample;
  for (Branch br : kAllBranches) {
    const Shape& s = first.stream(br).shape();
    const std::int64_t per = first.stream(br).numel();
    Tensor<T> batch({s[0] * static_cast<std::int64_t>(bundles.size()), s[1], s[2], s[3]});
    for (std::size_t i = 0; i < bundles.size(); ++i) {
      const Tensor<float>& src = bundles[i]->stream(br);
      if (src.shape() != s) {
        fail(ErrorCode::ShapeMismatch, "batch mixes stream shapes " + shape_str(s) + " and " + shape_str(src.shape()));
      }
      T* dst = batch.data() + static_cast<std::int64_t>(i) * per;
      for (std::int64_t k = 0; k < per; ++k) dst[k] = static_cast<T>(src[k]);
    }
    input.streams[static_cast<std::size_t>(br)] = ops::constant(std::move(batch));
  }
  if (with_adjacency) {
    const Shape& s = first.adjacency->shape();
    const std::int64_t per = first.adjacency->numel();
    Tensor<T> adj({s[0] * static_cast<std::int64_t>(bundles.size()), s[1], s[2], s[3]});
    for (std::size_t i = 0; i < bundles.size(); ++i) {
      if (!bundles[i]->adjacency || bundles[i]->adjacency->shape() != s) {
        fail(ErrorCode::ShapeMismatch, "batch mixes per-sample adjacency shapes");
      }
      T* dst = adj.data() + static_cast<std::int64_t>(i) * per;
      for (std::int64_t k = 0; k < per; ++k) dst[k] = static_cast<T>((*bundles[i]->adjacency)[k]);
    }
    input.adjacency = ops::constant(std::move(adj));
  }
  return input;
}

template <typename T>
Var<T> average_graph_logits(const Var<T>& logits, int graphs_per_sample) {
  if (graphs_per_sample == 1) return logits;
  const std::int64_t rows = logits.dim(0), classes = logits.dim(1);
  if (rows % graphs_per_sample != 0) {
    fail(ErrorCode::ShapeMismatch, std::to_string(rows) + " graph rows do not split into groups of " +
                                       std::to_string(graphs_per_sample));
  }
  return ops::mean(ops::reshape(logits, {rows / graphs_per_sample, graphs_per_sample, classes}), {1});
}

template <typename T>
Model<T>::Model(const ModelConfig& config)
    : config_(config), topology_(SkeletonTopology::for_joint_count(config.joint_count)) {
  config_.validate();
  std::mt19937_64 rng(config_.seed);
  const int persons = config_.persons();
  const std::int64_t k = config_.subsets();
  if (config_.strategy != Strategy::Geometric) {
    shared_adjacency_ =
        build_adjacency(config_.strategy, topology_, persons, nullptr, config_.adjacency).normalized.template cast<T>();
  }
  for (Branch br : kAllBranches) {
    const std::string prefix = "input." + std::string(branch_tag(br));
    input_bn_.emplace_back(prefix + ".bn", 2 * config_.coord_channels);
    auto& blocks = input_blocks_[static_cast<std::size_t>(br)];
    blocks.reserve(config_.input_plan.size());
    for (std::size_t i = 0; i < config_.input_plan.size(); ++i) {
      BlockSpec spec;
      spec.in = config_.input_plan[i].first;
      spec.out = config_.input_plan[i].second;
      spec.multiscale = i > 0;
      spec.attention = config_.attention;
      spec.edge_mask = config_.edge_mask;
      blocks.emplace_back(prefix + "." + std::to_string(i), spec, k, topology_, persons, rng);
    }
  }
  main_blocks_.reserve(config_.main_plan.size());
  for (std::size_t i = 0; i < config_.main_plan.size(); ++i) {
    BlockSpec spec;
    spec.in = config_.main_plan[i].first;
    spec.out = config_.main_plan[i].second;
    spec.stride = config_.main_strides[i];
    spec.attention = config_.attention;
    spec.edge_mask = config_.edge_mask;
    main_blocks_.emplace_back("main." + std::to_string(i), spec, k, topology_, persons, rng);
  }
  head_ = std::make_unique<Linear<T>>("head", config_.main_plan.back().second, config_.num_classes, rng);
}

template <typename T>
Var<T> Model<T>::forward(const ModelInput<T>& input, bool training) {
  const std::int64_t v = config_.vertices();
  Var<T> adjacency;
  if (input.adjacency) {
    adjacency = *input.adjacency;
  } else if (shared_adjacency_) {
    adjacency = ops::constant(*shared_adjacency_);
  } else {
    fail(ErrorCode::ConfigMismatch, "labeling '" + to_string(config_.strategy) + "' needs per-sample adjacency");
  }
  std::vector<Var<T>> branches;
  for (std::size_t b = 0; b < 4; ++b) {
    const Var<T>& x = input.streams[b];
    if (!x || x.shape().size() != 4 || x.dim(1) != 2 * config_.coord_channels || x.dim(3) != v) {
      fail(ErrorCode::ConfigMismatch, "stream " + std::string(branch_tag(kAllBranches[b])) + " has shape " +
                                          (x ? shape_str(x.shape()) : std::string("<none>")) + ", model expects [B," +
                                          std::to_string(2 * config_.coord_channels) + ",T," + std::to_string(v) + "]");
    }
    Var<T> h = input_bn_[b].forward(x, training);
    for (auto& block : input_blocks_[b]) h = block.forward(h, adjacency, training);
    branches.push_back(h);
  }
  Var<T> h = ops::concat(branches, 1);
  for (auto& block : main_blocks_) h = block.forward(h, adjacency, training);
  h = ops::mean(h, {2, 3});
  return head_->forward(h);
}

template <typename T>
void Model<T>::visit(const StateVisitor<T>& v) {
  for (std::size_t b = 0; b < 4; ++b) {
    input_bn_[b].visit(v);
    for (auto& block : input_blocks_[b]) block.visit(v);
  }
  for (auto& block : main_blocks_) block.visit(v);
  head_->visit(v);
}

template <typename T>
std::vector<Parameter<T>*> Model<T>::parameters() {
  return collect_parameters<T>(*this);
}

template <typename T>
std::int64_t Model<T>::count_params() {
  return count_parameters<T>(*this);
}

template <typename T>
std::int64_t Model<T>::estimate_flops() {
  MacCounter mc;
  const Shape in{1, 2 * config_.coord_channels, config_.frames, config_.vertices()};
  Shape branch_out;
  for (std::size_t b = 0; b < 4; ++b) {
    Shape h = in;
    for (const auto& block : input_blocks_[b]) h = block.trace(h, mc);
    branch_out = h;
  }
  Shape h = branch_out;
  h[1] *= 4;
  for (const auto& block : main_blocks_) h = block.trace(h, mc);
  head_->trace({1, h[1]}, mc);
  return 2 * mc.macs * graphs_per_sample(config_.mode);
}

template <typename T>
std::vector<NamedTensor<T>> Model<T>::state() {
  std::vector<NamedTensor<T>> out;
  visit({[&](Parameter<T>& p) { out.push_back({p.name(), p.value()}); },
         [&](const std::string& name, Tensor<T>& t) { out.push_back({name, t}); }});
  return out;
}

template <typename T>
void Model<T>::load_state(const std::vector<NamedTensor<T>>& entries) {
  std::map<std::string, const Tensor<T>*> by_name;
  for (const auto& e : entries) {
    if (!by_name.emplace(e.name, &e.value).second) fail(ErrorCode::CheckpointMismatch, "duplicate entry " + e.name);
  }
  std::size_t used = 0;
  auto assign = [&](const std::string& name, Tensor<T>& dst) {
    auto it = by_name.find(name);
    if (it == by_name.end()) fail(ErrorCode::CheckpointMismatch, "checkpoint lacks " + name);
    if (it->second->shape() != dst.shape()) {
      fail(ErrorCode::CheckpointMismatch, name + " has shape " + shape_str(it->second->shape()) + ", model expects " +
                                              shape_str(dst.shape()));
    }
    dst = *it->second;
    ++used;
  };
  visit({[&](Parameter<T>& p) { assign(p.name(), p.value()); }, assign});
  if (used != entries.size()) {
    fail(ErrorCode::CheckpointMismatch, std::to_string(entries.size() - used) + " checkpoint entries are not in the model");
  }
}

template <typename T>
void Model<T>::save(const std::string& path) {
  save_checkpoint(path, state());
}

template <typename T>
void Model<T>::load(const std::string& path) {
  load_state(load_checkpoint<T>(path));
}

#define TPGCN_INSTANTIATE_MODEL(T)                                                \
  template ModelInput<T> make_input<T>(const std::vector<const FeatureBundle*>&); \
  template Var<T> average_graph_logits<T>(const Var<T>&, int);                    \
  template class Model<T>;

TPGCN_INSTANTIATE_MODEL(float)
TPGCN_INSTANTIATE_MODEL(double)

}  // namespace tpgcn
