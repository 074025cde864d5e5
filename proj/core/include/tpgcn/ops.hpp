#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "tpgcn/autodiff.hpp"

// Differentiable operators. Convolution-style ops take [batch, channel, T, V].
namespace tpgcn::ops {

template <typename T>
Var<T> constant(Tensor<T> value) {
  return Var<T>(std::move(value));
}

// Elementwise with numpy broadcasting.
template <typename T> Var<T> add(const Var<T>& a, const Var<T>& b);
template <typename T> Var<T> sub(const Var<T>& a, const Var<T>& b);
template <typename T> Var<T> mul(const Var<T>& a, const Var<T>& b);
template <typename T> Var<T> scale(const Var<T>& a, T factor);

template <typename T> Var<T> relu(const Var<T>& a);
template <typename T> Var<T> sigmoid(const Var<T>& a);

/// [M,K] x [K,N] -> [M,N]
template <typename T> Var<T> matmul(const Var<T>& a, const Var<T>& b);

template <typename T> Var<T> reshape(const Var<T>& a, Shape shape);
template <typename T> Var<T> concat(const std::vector<Var<T>>& parts, std::int64_t axis);
/// Half-open [begin, end) along one axis.
template <typename T> Var<T> slice(const Var<T>& a, std::int64_t axis, std::int64_t begin, std::int64_t end);

template <typename T> Var<T> sum(const Var<T>& a, const std::vector<std::int64_t>& axes, bool keepdim = false);
template <typename T> Var<T> mean(const Var<T>& a, const std::vector<std::int64_t>& axes, bool keepdim = false);
template <typename T> Var<T> max(const Var<T>& a, std::int64_t axis, bool keepdim = false);
template <typename T> Var<T> sum_all(const Var<T>& a);

/// Softmax over the last axis.
template <typename T> Var<T> softmax(const Var<T>& logits);
/// Mean over the batch of -log softmax(logits)[label]; logits [B, classes].
template <typename T> Var<T> cross_entropy(const Var<T>& logits, const std::vector<int>& labels);

struct TemporalConvSpec {
  std::int64_t stride = 1;
  std::int64_t dilation = 1;
  std::int64_t padding = 0;
};

/// Temporal convolution with a Kt x 1 kernel: x [B,Ci,T,V], weight [Co,Ci,Kt],
/// optional bias [Co]. Zero padding along T.
template <typename T>
Var<T> conv_temporal(const Var<T>& x, const Var<T>& weight, const std::optional<Var<T>>& bias,
                     TemporalConvSpec spec);

/// Max pooling along T with a Kt x 1 window; padded frames never win.
template <typename T>
Var<T> max_pool_temporal(const Var<T>& x, std::int64_t kernel, std::int64_t stride, std::int64_t padding);

template <typename T>
struct BatchNormStats {
  Tensor<T> running_mean;
  Tensor<T> running_var;
  explicit BatchNormStats(std::int64_t channels = 0)
      : running_mean(Shape{channels}, T{0}), running_var(Shape{channels}, T{1}) {}
};

struct BatchNormSpec {
  bool training = true;
  double momentum = 0.1;
  double eps = 1e-5;
};

/// Normalizes axis 1 of x [B,C,...]. Training mode uses batch statistics and
/// updates the running ones; eval mode is the affine map with running stats.
template <typename T>
Var<T> batch_norm(const Var<T>& x, const Var<T>& gamma, const Var<T>& beta, BatchNormStats<T>& stats,
                  BatchNormSpec spec);

/// Graph aggregation over the joint axis, summed across K subsets:
/// out[b,c,t,w] = sum_k sum_v y[b, k*C + c, t, v] * A[k, v, w].
/// y is [B, K*C, T, V]; A is [K,V,V] (shared) or [B,K,V,V] (per sample).
template <typename T>
Var<T> graph_aggregate(const Var<T>& y, const Var<T>& adjacency);

/// A node with a caller-supplied backward rule; exists so tests can fabricate faulty rules.
template <typename T>
Var<T> custom(Tensor<T> value, std::vector<Var<T>> inputs, std::function<void(Node<T>&)> backward) {
  return make_result(std::move(value), std::move(inputs), std::move(backward));
}

}  // namespace tpgcn::ops
