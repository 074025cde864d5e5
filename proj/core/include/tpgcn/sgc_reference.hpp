#pragma once

#include "tpgcn/tensor.hpp"

namespace tpgcn {

/// Slow per-vertex spatial graph convolution used as a test oracle. For each
/// vertex i it visits every neighbor j within `max_hop` hops (Floyd-Warshall on
/// the support of `weights`), labels it by its hop distance d, and accumulates
///   w_d(i, j) / sqrt(deg_d(i) deg_d(j)) * (W_d^T f_j + b_d)
/// where w_0 is the self loop, w_1 the edge weight and w_d (d >= 2) is 1, and
/// deg_d sums w_d over the hop-d ring (a zero ring contributes nothing).
///
/// f_in [B, Ci, T, V]; weights [V, V]; w [K, Ci, Co] with K = max_hop + 1;
/// bias [K, Co] or nullptr. Returns [B, Co, T, V].
template <typename T>
Tensor<T> sgc_reference(const Tensor<T>& f_in, const Tensor<double>& weights, int max_hop, const Tensor<T>& w,
                        const Tensor<T>* bias = nullptr);

}  // namespace tpgcn
