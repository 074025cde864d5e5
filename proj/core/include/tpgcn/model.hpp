#pragma once

#include <array>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "tpgcn/checkpoint.hpp"
#include "tpgcn/features.hpp"
#include "tpgcn/layers.hpp"
#include "tpgcn/model_config.hpp"

namespace tpgcn {

/// One mini-batch of graphs: each stream is [B*G, 2C, T, V], graphs of the same
/// sample adjacent. `adjacency` ([B*G, K, V, V]) is required for per-sample labelings.
template <typename T>
struct ModelInput {
  std::array<Var<T>, 4> streams;
  std::optional<Var<T>> adjacency;
  int graphs_per_sample = 1;
  std::int64_t samples() const { return streams[0].dim(0) / graphs_per_sample; }
};

/// Stacks feature bundles into a batch input.
template <typename T>
ModelInput<T> make_input(const std::vector<const FeatureBundle*>& bundles);

/// Averages [B*G, classes] graph logits over the G graphs of each sample.
template <typename T>
Var<T> average_graph_logits(const Var<T>& logits, int graphs_per_sample);

template <typename T>
class Model {
 public:
  explicit Model(const ModelConfig& config);
  Model(const Model&) = delete;
  Model& operator=(const Model&) = delete;

  const ModelConfig& config() const { return config_; }
  const SkeletonTopology& topology() const { return topology_; }
  /// Fixed normalized adjacency [K, V, V] for sample-independent labelings.
  const std::optional<Tensor<T>>& shared_adjacency() const { return shared_adjacency_; }

  /// Per-graph logits [B*G, classes].
  Var<T> forward(const ModelInput<T>& input, bool training);

  std::vector<Parameter<T>*> parameters();
  std::int64_t count_params();
  /// Closed-form 2 x MACs of one sample at config().frames, times graphs per sample.
  std::int64_t estimate_flops();

  std::vector<NamedTensor<T>> state();
  /// CheckpointMismatch on missing, extra or reshaped entries.
  void load_state(const std::vector<NamedTensor<T>>& entries);
  void save(const std::string& path);
  void load(const std::string& path);

  void visit(const StateVisitor<T>& v);

 private:
  ModelConfig config_;
  SkeletonTopology topology_;
  std::optional<Tensor<T>> shared_adjacency_;
  std::vector<BatchNorm<T>> input_bn_;
  std::array<std::vector<Block<T>>, 4> input_blocks_;
  std::vector<Block<T>> main_blocks_;
  std::unique_ptr<Linear<T>> head_;
};

}  // namespace tpgcn
