#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "tpgcn/ops.hpp"
#include "tpgcn/topology.hpp"

// Building blocks of the interaction network. Every layer takes [B, C, T, V].
namespace tpgcn {

/// Walks the trainable parameters and persistent buffers (batch-norm running
/// statistics) of a layer tree in a fixed order.
template <typename T>
struct StateVisitor {
  std::function<void(Parameter<T>&)> parameter;
  std::function<void(const std::string&, Tensor<T>&)> buffer;
};

/// Multiply-accumulate tally for the closed-form FLOP estimate (FLOPs = 2 * MACs).
struct MacCounter {
  std::int64_t macs = 0;
};

template <typename T>
class BatchNorm {
 public:
  BatchNorm(const std::string& name, std::int64_t channels);
  Var<T> forward(const Var<T>& x, bool training);
  void visit(const StateVisitor<T>& v);

  Parameter<T>& gamma() { return gamma_; }
  Parameter<T>& beta() { return beta_; }
  ops::BatchNormStats<T>& stats() { return stats_; }

 private:
  std::string name_;
  Parameter<T> gamma_, beta_;
  ops::BatchNormStats<T> stats_;
};

/// Kt x 1 convolution along T, "same" padding of dilation * (Kt - 1) / 2.
template <typename T>
class TemporalConv {
 public:
  TemporalConv(const std::string& name, std::int64_t in, std::int64_t out, std::int64_t kernel,
               std::int64_t stride, std::int64_t dilation, bool bias, std::mt19937_64& rng);
  Var<T> forward(const Var<T>& x) const;
  Shape trace(const Shape& in, MacCounter& mc) const;
  void visit(const StateVisitor<T>& v);

  Parameter<T>& weight() { return weight_; }
  std::optional<Parameter<T>>& bias() { return bias_; }

 private:
  std::int64_t in_, out_, kernel_;
  ops::TemporalConvSpec spec_;
  Parameter<T> weight_;
  std::optional<Parameter<T>> bias_;
};

/// x [B, In] -> [B, Out].
template <typename T>
class Linear {
 public:
  Linear(const std::string& name, std::int64_t in, std::int64_t out, std::mt19937_64& rng);
  Var<T> forward(const Var<T>& x) const;
  Shape trace(const Shape& in, MacCounter& mc) const;
  void visit(const StateVisitor<T>& v);

  Parameter<T>& weight() { return weight_; }
  Parameter<T>& bias() { return bias_; }

 private:
  Parameter<T> weight_, bias_;
};

/// Spatial graph convolution over K hop subsets: one 1x1 transform to K * C_out
/// channels (W_d stacked), then aggregation with the normalized adjacency, which
/// is optionally reweighted by a learnable edge mask initialized to ones.
template <typename T>
class SgcLayer {
 public:
  SgcLayer(const std::string& name, std::int64_t in, std::int64_t out, std::int64_t subsets,
           std::int64_t vertices, bool edge_mask, std::mt19937_64& rng);
  /// adjacency: [K, V, V] shared or [B, K, V, V] per sample.
  Var<T> forward(const Var<T>& x, const Var<T>& adjacency) const;
  Shape trace(const Shape& in, MacCounter& mc) const;
  void visit(const StateVisitor<T>& v);

  std::int64_t subsets() const { return subsets_; }
  TemporalConv<T>& transform() { return transform_; }
  std::optional<Parameter<T>>& edge_mask() { return mask_; }

 private:
  std::int64_t out_, subsets_, vertices_;
  TemporalConv<T> transform_;
  std::optional<Parameter<T>> mask_;
};

/// Standard 3x1 temporal convolution followed by batch norm.
template <typename T>
class TemporalUnit {
 public:
  TemporalUnit(const std::string& name, std::int64_t in, std::int64_t out, std::int64_t stride,
               std::mt19937_64& rng);
  Var<T> forward(const Var<T>& x, bool training);
  Shape trace(const Shape& in, MacCounter& mc) const;
  void visit(const StateVisitor<T>& v);

 private:
  TemporalConv<T> conv_;
  BatchNorm<T> bn_;
};

/// Residual path: identity when shapes match, strided 1x1 conv + BN otherwise.
template <typename T>
class Shortcut {
 public:
  Shortcut(const std::string& name, std::int64_t in, std::int64_t out, std::int64_t stride, std::mt19937_64& rng);
  Var<T> forward(const Var<T>& x, bool training);
  Shape trace(const Shape& in, MacCounter& mc) const;
  void visit(const StateVisitor<T>& v);
  bool identity() const { return !conv_; }

 private:
  std::optional<TemporalConv<T>> conv_;
  std::optional<BatchNorm<T>> bn_;
};

/// Four temporal branches on C_out / 4 channels each: 3x1 conv (dilation 1),
/// 3x1 conv (dilation 2), 3x1 max-pool, and a strided 1x1 bottleneck only.
template <typename T>
class MsTcn {
 public:
  MsTcn(const std::string& name, std::int64_t in, std::int64_t out, std::int64_t stride, bool residual,
        std::mt19937_64& rng);
  Var<T> forward(const Var<T>& x, bool training);
  Shape trace(const Shape& in, MacCounter& mc) const;
  void visit(const StateVisitor<T>& v);

 private:
  struct Bottleneck {
    TemporalConv<T> conv;
    BatchNorm<T> bn;
  };
  std::int64_t stride_;
  std::vector<Bottleneck> reduce_;  // one per branch
  TemporalConv<T> dil1_, dil2_;
  BatchNorm<T> dil1_bn_, dil2_bn_, pool_bn_;
  std::optional<Shortcut<T>> residual_;
};

/// Spatial-temporal part attention: frame scores from joint-averaged features and
/// body-part scores from frame-averaged features pooled onto 5 parts per person,
/// combined as an outer product and applied multiplicatively.
template <typename T>
class StPartAtt {
 public:
  StPartAtt(const std::string& name, std::int64_t channels, const SkeletonTopology& topology, int persons,
            std::mt19937_64& rng, std::int64_t reduction = 4);
  Var<T> forward(const Var<T>& x, bool training);
  Shape trace(const Shape& in, MacCounter& mc) const;
  void visit(const StateVisitor<T>& v);

  TemporalConv<T>& frame_fc() { return frame_fc_; }
  TemporalConv<T>& part_fc() { return part_fc_; }
  std::int64_t parts() const { return pool_.dim(1); }

 private:
  Tensor<T> pool_;        // [V, 2P]
  Tensor<T> membership_;  // [2P, V]
  TemporalConv<T> reduce_;
  BatchNorm<T> reduce_bn_;
  TemporalConv<T> frame_fc_, part_fc_;
};

struct BlockSpec {
  std::int64_t in = 0, out = 0, stride = 1;
  bool multiscale = true;  // MS-TCN, otherwise a single 3x1 temporal unit
  bool attention = true;
  bool edge_mask = true;
  bool residual = true;
};

/// SGC -> BN -> ReLU -> temporal layer -> part attention, plus a block residual, then ReLU.
template <typename T>
class Block {
 public:
  Block(const std::string& name, const BlockSpec& spec, std::int64_t subsets, const SkeletonTopology& topology,
        int persons, std::mt19937_64& rng);
  Var<T> forward(const Var<T>& x, const Var<T>& adjacency, bool training);
  Shape trace(const Shape& in, MacCounter& mc) const;
  void visit(const StateVisitor<T>& v);

  const BlockSpec& spec() const { return spec_; }

 private:
  BlockSpec spec_;
  SgcLayer<T> sgc_;
  BatchNorm<T> sgc_bn_;
  std::optional<TemporalUnit<T>> unit_;
  std::optional<MsTcn<T>> mstcn_;
  std::optional<StPartAtt<T>> att_;
  std::optional<Shortcut<T>> residual_;
};

/// Parameter tally of any layer tree.
template <typename T, typename L>
std::int64_t count_parameters(L& layer) {
  std::int64_t total = 0;
  layer.visit({[&](Parameter<T>& p) { total += p.numel(); }, [](const std::string&, Tensor<T>&) {}});
  return total;
}

template <typename T, typename L>
std::vector<Parameter<T>*> collect_parameters(L& layer) {
  std::vector<Parameter<T>*> out;
  layer.visit({[&](Parameter<T>& p) { out.push_back(&p); }, [](const std::string&, Tensor<T>&) {}});
  return out;
}

}  // namespace tpgcn
