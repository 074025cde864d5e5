#include "tpgcn/sgc_reference.hpp"

#include <cmath>
#include <limits>

namespace tpgcn {

template <typename T>
Tensor<T> sgc_reference(const Tensor<T>& f_in, const Tensor<double>& weights, int max_hop, const Tensor<T>& w,
                        const Tensor<T>* bias) {
  const std::int64_t batch = f_in.dim(0), ci_count = f_in.dim(1), frames = f_in.dim(2), v = f_in.dim(3);
  const std::int64_t k_count = max_hop + 1, co_count = w.dim(2);
  if (weights.shape() != Shape{v, v} || w.dim(0) != k_count || w.dim(1) != ci_count ||
      (bias != nullptr && bias->shape() != Shape{k_count, co_count})) {
    fail(ErrorCode::ShapeMismatch, "sgc_reference: input " + shape_str(f_in.shape()) + ", graph " +
                                       shape_str(weights.shape()) + ", weights " + shape_str(w.shape()));
  }

  // Floyd-Warshall hop distances on the unweighted support.
  const int inf = std::numeric_limits<int>::max() / 4;
  std::vector<int> dist(static_cast<std::size_t>(v * v), inf);
  auto d_at = [&](std::int64_t i, std::int64_t j) -> int& { return dist[static_cast<std::size_t>(i * v + j)]; };
  for (std::int64_t i = 0; i < v; ++i) {
    d_at(i, i) = 0;
    for (std::int64_t j = 0; j < v; ++j) {
      if (i != j && weights[i * v + j] != 0.0) d_at(i, j) = 1;
    }
  }
  for (std::int64_t m = 0; m < v; ++m) {
    for (std::int64_t i = 0; i < v; ++i) {
      for (std::int64_t j = 0; j < v; ++j) {
        if (d_at(i, m) + d_at(m, j) < d_at(i, j)) d_at(i, j) = d_at(i, m) + d_at(m, j);
      }
    }
  }
  auto label_weight = [&](std::int64_t i, std::int64_t j) {
    const int d = d_at(i, j);
    if (d == 0) return 1.0;
    if (d == 1) return weights[i * v + j];
    return 1.0;
  };

  // deg[d][i] = sum of label weights over the hop-d ring of i.
  std::vector<double> deg(static_cast<std::size_t>(k_count * v), 0.0);
  for (std::int64_t i = 0; i < v; ++i) {
    for (std::int64_t j = 0; j < v; ++j) {
      const int d = d_at(i, j);
      if (d <= max_hop) deg[static_cast<std::size_t>(d * v + i)] += label_weight(i, j);
    }
  }

  Tensor<T> out({batch, co_count, frames, v});
  for (std::int64_t b = 0; b < batch; ++b) {
    for (std::int64_t t = 0; t < frames; ++t) {
      for (std::int64_t i = 0; i < v; ++i) {
        for (std::int64_t j = 0; j < v; ++j) {
          const int d = d_at(i, j);
          if (d > max_hop) continue;
          const double di = deg[static_cast<std::size_t>(d * v + i)];
          const double dj = deg[static_cast<std::size_t>(d * v + j)];
          if (di <= 0.0 || dj <= 0.0) continue;
          const double z = label_weight(i, j) / std::sqrt(di * dj);
          for (std::int64_t co = 0; co < co_count; ++co) {
            double acc = bias != nullptr ? static_cast<double>((*bias)[d * co_count + co]) : 0.0;
            for (std::int64_t c = 0; c < ci_count; ++c) {
              acc += static_cast<double>(w[(d * ci_count + c) * co_count + co]) *
                     static_cast<double>(f_in[((b * ci_count + c) * frames + t) * v + j]);
            }
            out[((b * co_count + co) * frames + t) * v + i] += static_cast<T>(z * acc);
          }
        }
      }
    }
  }
  return out;
}

template Tensor<float> sgc_reference(const Tensor<float>&, const Tensor<double>&, int, const Tensor<float>&,
                                     const Tensor<float>*);
template Tensor<double> sgc_reference(const Tensor<double>&, const Tensor<double>&, int, const Tensor<double>&,
                                      const Tensor<double>*);

}  // namespace tpgcn
