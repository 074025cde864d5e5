#include "tpgcn/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>

namespace tpgcn::ops {

namespace {

template <typename T>
using MatR = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MapR = Eigen::Map<MatR<T>>;
template <typename T>
using CMapR = Eigen::Map<const MatR<T>>;

template <typename T>
bool wants_grad(const Node<T>& self, std::size_t i) {
  return self.parents[i]->requires_grad;
}

template <typename T>
Tensor<T>& parent_grad(Node<T>& self, std::size_t i) {
  return self.parents[i]->ensure_grad();
}

// Iteration over an output shape with two operands broadcast into it.
struct BroadcastPlan {
  Shape out;
  Shape stride_a;
  Shape stride_b;
};

Shape broadcast_strides(const Shape& out, const Shape& in) {
  Shape strides(out.size(), 0);
  const Shape own = strides_of(in);
  const std::size_t lead = out.size() - in.size();
  for (std::size_t i = 0; i < in.size(); ++i) {
    strides[lead + i] = in[i] == 1 ? 0 : own[i];
  }
  return strides;
}

BroadcastPlan make_plan(const Shape& out, const Shape& a, const Shape& b) {
  return {out, broadcast_strides(out, a), broadcast_strides(out, b)};
}

template <typename F>
void for_each_broadcast(const BroadcastPlan& plan, F&& f) {
  const std::size_t rank = plan.out.size();
  const std::int64_t total = numel(plan.out);
  if (total == 0) return;
  if (rank == 0) {
    f(std::int64_t{0}, std::int64_t{0}, std::int64_t{0});
    return;
  }
  const std::int64_t inner = plan.out[rank - 1];
  const std::int64_t sa = plan.stride_a[rank - 1];
  const std::int64_t sb = plan.stride_b[rank - 1];
  std::vector<std::int64_t> idx(rank, 0);
  std::int64_t ia = 0, ib = 0;
  for (std::int64_t o = 0; o < total; o += inner) {
    for (std::int64_t i = 0; i < inner; ++i) f(o + i, ia + i * sa, ib + i * sb);
    for (std::size_t d = rank - 1; d-- > 0;) {
      ++idx[d];
      ia += plan.stride_a[d];
      ib += plan.stride_b[d];
      if (idx[d] < plan.out[d]) break;
      ia -= plan.stride_a[d] * plan.out[d];
      ib -= plan.stride_b[d] * plan.out[d];
      idx[d] = 0;
    }
  }
}

std::int64_t normalize_axis(std::int64_t axis, std::int64_t rank) {
  if (axis < 0) axis += rank;
  if (axis < 0 || axis >= rank) {
    fail(ErrorCode::IndexOutOfRange, "axis " + std::to_string(axis) + " for rank " + std::to_string(rank));
  }
  return axis;
}

void require_rank(const Shape& s, std::size_t rank, const char* op) {
  if (s.size() != rank) {
    fail(ErrorCode::ShapeMismatch,
         std::string(op) + " expects rank " + std::to_string(rank) + ", got " + shape_str(s));
  }
}

enum class BinaryKind { Add, Sub, Mul };

template <typename T>
Var<T> binary(const Var<T>& a, const Var<T>& b, BinaryKind kind) {
  const Shape out_shape = broadcast_shapes(a.shape(), b.shape());
  Tensor<T> out(out_shape);
  const T* pa = a.value().data();
  const T* pb = b.value().data();
  T* po = out.data();
  const bool same = a.shape() == b.shape();
  const auto plan = make_plan(out_shape, a.shape(), b.shape());
  switch (kind) {
    case BinaryKind::Add:
      if (same) {
        for (std::int64_t i = 0; i < out.numel(); ++i) po[i] = pa[i] + pb[i];
      } else {
        for_each_broadcast(plan, [&](std::int64_t o, std::int64_t ia, std::int64_t ib) { po[o] = pa[ia] + pb[ib]; });
      }
      break;
    case BinaryKind::Sub:
      for_each_broadcast(plan, [&](std::int64_t o, std::int64_t ia, std::int64_t ib) { po[o] = pa[ia] - pb[ib]; });
      break;
    case BinaryKind::Mul:
      if (same) {
        for (std::int64_t i = 0; i < out.numel(); ++i) po[i] = pa[i] * pb[i];
      } else {
        for_each_broadcast(plan, [&](std::int64_t o, std::int64_t ia, std::int64_t ib) { po[o] = pa[ia] * pb[ib]; });
      }
      break;
  }
  return make_result<T>(std::move(out), {a, b}, [plan, kind](Node<T>& self) {
    const T* g = self.grad.data();
    if (wants_grad(self, 0)) {
      T* ga = parent_grad(self, 0).data();
      if (kind == BinaryKind::Mul) {
        const T* pb = self.parents[1]->value.data();
        for_each_broadcast(plan, [&](std::int64_t o, std::int64_t ia, std::int64_t ib) { ga[ia] += g[o] * pb[ib]; });
      } else {
        for_each_broadcast(plan, [&](std::int64_t o, std::int64_t ia, std::int64_t) { ga[ia] += g[o]; });
      }
    }
    if (wants_grad(self, 1)) {
      T* gb = parent_grad(self, 1).data();
      if (kind == BinaryKind::Mul) {
        const T* pa = self.parents[0]->value.data();
        for_each_broadcast(plan, [&](std::int64_t o, std::int64_t ia, std::int64_t ib) { gb[ib] += g[o] * pa[ia]; });
      } else if (kind == BinaryKind::Sub) {
        for_each_broadcast(plan, [&](std::int64_t o, std::int64_t, std::int64_t ib) { gb[ib] -= g[o]; });
      } else {
        for_each_broadcast(plan, [&](std::int64_t o, std::int64_t, std::int64_t ib) { gb[ib] += g[o]; });
      }
    }
  });
}

}  // namespace

template <typename T>
Var<T> add(const Var<T>& a, const Var<T>& b) {
  return binary(a, b, BinaryKind::Add);
}

template <typename T>
Var<T> sub(const Var<T>& a, const Var<T>& b) {
  return binary(a, b, BinaryKind::Sub);
}

template <typename T>
Var<T> mul(const Var<T>& a, const Var<T>& b) {
  return binary(a, b, BinaryKind::Mul);
}

template <typename T>
Var<T> scale(const Var<T>& a, T factor) {
  Tensor<T> out(a.shape());
  const T* pa = a.value().data();
  for (std::int64_t i = 0; i < out.numel(); ++i) out[i] = pa[i] * factor;
  return make_result<T>(std::move(out), {a}, [factor](Node<T>& self) {
    T* ga = parent_grad(self, 0).data();
    const T* g = self.grad.data();
    for (std::int64_t i = 0; i < self.grad.numel(); ++i) ga[i] += g[i] * factor;
  });
}

template <typename T>
Var<T> relu(const Var<T>& a) {
  Tensor<T> out(a.shape());
  const T* pa = a.value().data();
  for (std::int64_t i = 0; i < out.numel(); ++i) out[i] = pa[i] > T{0} ? pa[i] : T{0};
  return make_result<T>(std::move(out), {a}, [](Node<T>& self) {
    T* ga = parent_grad(self, 0).data();
    const T* g = self.grad.data();
    const T* y = self.value.data();
    for (std::int64_t i = 0; i < self.grad.numel(); ++i) {
      if (y[i] > T{0}) ga[i] += g[i];
    }
  });
}

template <typename T>
Var<T> sigmoid(const Var<T>& a) {
  Tensor<T> out(a.shape());
  const T* pa = a.value().data();
  for (std::int64_t i = 0; i < out.numel(); ++i) out[i] = T{1} / (T{1} + std::exp(-pa[i]));
  return make_result<T>(std::move(out), {a}, [](Node<T>& self) {
    T* ga = parent_grad(self, 0).data();
    const T* g = self.grad.data();
    const T* y = self.value.data();
    for (std::int64_t i = 0; i < self.grad.numel(); ++i) ga[i] += g[i] * y[i] * (T{1} - y[i]);
  });
}

template <typename T>
Var<T> matmul(const Var<T>& a, const Var<T>& b) {
  require_rank(a.shape(), 2, "matmul");
  require_rank(b.shape(), 2, "matmul");
  const std::int64_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  if (b.dim(0) != k) {
    fail(ErrorCode::ShapeMismatch, "matmul " + shape_str(a.shape()) + " x " + shape_str(b.shape()));
  }
  Tensor<T> out({m, n});
  MapR<T>(out.data(), m, n).noalias() = CMapR<T>(a.value().data(), m, k) * CMapR<T>(b.value().data(), k, n);
  return make_result<T>(std::move(out), {a, b}, [m, k, n](Node<T>& self) {
    CMapR<T> g(self.grad.data(), m, n);
    if (wants_grad(self, 0)) {
      MapR<T>(parent_grad(self, 0).data(), m, k).noalias() += g * CMapR<T>(self.parents[1]->value.data(), k, n).transpose();
    }
    if (wants_grad(self, 1)) {
      MapR<T>(parent_grad(self, 1).data(), k, n).noalias() += CMapR<T>(self.parents[0]->value.data(), m, k).transpose() * g;
    }
  });
}

template <typename T>
Var<T> reshape(const Var<T>& a, Shape shape) {
  Tensor<T> out = a.value().reshaped(std::move(shape));
  return make_result<T>(std::move(out), {a}, [](Node<T>& self) {
    T* ga = parent_grad(self, 0).data();
    const T* g = self.grad.data();
    for (std::int64_t i = 0; i < self.grad.numel(); ++i) ga[i] += g[i];
  });
}

template <typename T>
Var<T> concat(const std::vector<Var<T>>& parts, std::int64_t axis) {
  if (parts.empty()) fail(ErrorCode::InvalidArgument, "concat of zero tensors");
  const Shape& first = parts.front().shape();
  axis = normalize_axis(axis, static_cast<std::int64_t>(first.size()));
  Shape out_shape = first;
  out_shape[static_cast<std::size_t>(axis)] = 0;
  for (const auto& p : parts) {
    Shape s = p.shape();
    if (s.size() != first.size()) {
      fail(ErrorCode::ShapeMismatch, "concat " + shape_str(first) + " with " + shape_str(s));
    }
    for (std::size_t d = 0; d < s.size(); ++d) {
      if (static_cast<std::int64_t>(d) != axis && s[d] != first[d]) {
        fail(ErrorCode::ShapeMismatch, "concat " + shape_str(first) + " with " + shape_str(s));
      }
    }
    out_shape[static_cast<std::size_t>(axis)] += s[static_cast<std::size_t>(axis)];
  }
  std::int64_t outer = 1;
  for (std::int64_t d = 0; d < axis; ++d) outer *= first[static_cast<std::size_t>(d)];
  std::vector<std::int64_t> chunk;
  for (const auto& p : parts) chunk.push_back(p.value().numel() / std::max<std::int64_t>(outer, 1));
  const std::int64_t out_chunk = numel(out_shape) / std::max<std::int64_t>(outer, 1);

  Tensor<T> out(out_shape);
  std::int64_t offset = 0;
  for (std::size_t p = 0; p < parts.size(); ++p) {
    const T* src = parts[p].value().data();
    for (std::int64_t o = 0; o < outer; ++o) {
      std::copy_n(src + o * chunk[p], chunk[p], out.data() + o * out_chunk + offset);
    }
    offset += chunk[p];
  }
  return make_result<T>(std::move(out), parts, [outer, chunk, out_chunk](Node<T>& self) {
    std::int64_t offset = 0;
    const T* g = self.grad.data();
    for (std::size_t p = 0; p < chunk.size(); ++p) {
      if (wants_grad(self, p)) {
        T* gp = parent_grad(self, p).data();
        for (std::int64_t o = 0; o < outer; ++o) {
          const T* src = g + o * out_chunk + offset;
          T* dst = gp + o * chunk[p];
          for (std::int64_t i = 0; i < chunk[p]; ++i) dst[i] += src[i];
        }
      }
      offset += chunk[p];
    }
  });
}

template <typename T>
Var<T> slice(const Var<T>& a, std::int64_t axis, std::int64_t begin, std::int64_t end) {
  const Shape& in = a.shape();
  axis = normalize_axis(axis, static_cast<std::int64_t>(in.size()));
  const std::int64_t extent = in[static_cast<std::size_t>(axis)];
  if (begin < 0 || end > extent || begin > end) {
    fail(ErrorCode::IndexOutOfRange, "slice [" + std::to_string(begin) + ", " + std::to_string(end) +
                                         ") of axis extent " + std::to_string(extent));
  }
  std::int64_t outer = 1, inner = 1;
  for (std::int64_t d = 0; d < axis; ++d) outer *= in[static_cast<std::size_t>(d)];
  for (std::size_t d = static_cast<std::size_t>(axis) + 1; d < in.size(); ++d) inner *= in[d];
  Shape out_shape = in;
  out_shape[static_cast<std::size_t>(axis)] = end - begin;
  Tensor<T> out(out_shape);
  const std::int64_t len = (end - begin) * inner;
  for (std::int64_t o = 0; o < outer; ++o) {
    std::copy_n(a.value().data() + o * extent * inner + begin * inner, len, out.data() + o * len);
  }
  return make_result<T>(std::move(out), {a}, [outer, extent, inner, begin, len](Node<T>& self) {
    T* ga = parent_grad(self, 0).data();
    const T* g = self.grad.data();
    for (std::int64_t o = 0; o < outer; ++o) {
      T* dst = ga + o * extent * inner + begin * inner;
      const T* src = g + o * len;
      for (std::int64_t i = 0; i < len; ++i) dst[i] += src[i];
    }
  });
}

namespace {

template <typename T>
Var<T> reduce_sum(const Var<T>& a, const std::vector<std::int64_t>& axes, bool keepdim, T factor) {
  const Shape& in = a.shape();
  const auto rank = static_cast<std::int64_t>(in.size());
  Shape kept = in;
  std::vector<bool> reduced(in.size(), false);
  for (auto ax : axes) {
    ax = normalize_axis(ax, rank);
    reduced[static_cast<std::size_t>(ax)] = true;
    kept[static_cast<std::size_t>(ax)] = 1;
  }
  Shape out_shape;
  if (keepdim) {
    out_shape = kept;
  } else {
    for (std::size_t d = 0; d < in.size(); ++d) {
      if (!reduced[d]) out_shape.push_back(in[d]);
    }
  }
  const auto plan = make_plan(in, in, kept);
  Tensor<T> out(out_shape);
  const T* pa = a.value().data();
  T* po = out.data();
  for_each_broadcast(plan, [&](std::int64_t, std::int64_t ia, std::int64_t io) { po[io] += pa[ia]; });
  if (factor != T{1}) {
    for (std::int64_t i = 0; i < out.numel(); ++i) po[i] *= factor;
  }
  return make_result<T>(std::move(out), {a}, [plan, factor](Node<T>& self) {
    T* ga = parent_grad(self, 0).data();
    const T* g = self.grad.data();
    for_each_broadcast(plan, [&](std::int64_t, std::int64_t ia, std::int64_t io) { ga[ia] += g[io] * factor; });
  });
}

}  // namespace

template <typename T>
Var<T> sum(const Var<T>& a, const std::vector<std::int64_t>& axes, bool keepdim) {
  return reduce_sum(a, axes, keepdim, T{1});
}

template <typename T>
Var<T> mean(const Var<T>& a, const std::vector<std::int64_t>& axes, bool keepdim) {
  std::int64_t count = 1;
  for (auto ax : axes) count *= a.dim(normalize_axis(ax, static_cast<std::int64_t>(a.shape().size())));
  return reduce_sum(a, axes, keepdim, T{1} / static_cast<T>(std::max<std::int64_t>(count, 1)));
}

template <typename T>
Var<T> sum_all(const Var<T>& a) {
  std::vector<std::int64_t> axes(a.shape().size());
  for (std::size_t i = 0; i < axes.size(); ++i) axes[i] = static_cast<std::int64_t>(i);
  return reduce_sum(a, axes, false, T{1});
}

template <typename T>
Var<T> max(const Var<T>& a, std::int64_t axis, bool keepdim) {
  const Shape& in = a.shape();
  axis = normalize_axis(axis, static_cast<std::int64_t>(in.size()));
  std::int64_t outer = 1, inner = 1;
  const std::int64_t extent = in[static_cast<std::size_t>(axis)];
  if (extent == 0) fail(ErrorCode::ShapeMismatch, "max over empty axis of " + shape_str(in));
  for (std::int64_t d = 0; d < axis; ++d) outer *= in[static_cast<std::size_t>(d)];
  for (std::size_t d = static_cast<std::size_t>(axis) + 1; d < in.size(); ++d) inner *= in[d];
  Shape out_shape = in;
  if (keepdim) {
    out_shape[static_cast<std::size_t>(axis)] = 1;
  } else {
    out_shape.erase(out_shape.begin() + axis);
  }
  Tensor<T> out(out_shape);
  auto argmax = std::make_shared<std::vector<std::int64_t>>(static_cast<std::size_t>(outer * inner));
  const T* pa = a.value().data();
  for (std::int64_t o = 0; o < outer; ++o) {
    for (std::int64_t i = 0; i < inner; ++i) {
      std::int64_t best = o * extent * inner + i;
      for (std::int64_t e = 1; e < extent; ++e) {
        const std::int64_t idx = (o * extent + e) * inner + i;
        if (pa[idx] > pa[best]) best = idx;
      }
      out[o * inner + i] = pa[best];
      (*argmax)[static_cast<std::size_t>(o * inner + i)] = best;
    }
  }
  return make_result<T>(std::move(out), {a}, [argmax](Node<T>& self) {
    T* ga = parent_grad(self, 0).data();
    const T* g = self.grad.data();
    for (std::size_t i = 0; i < argmax->size(); ++i) ga[(*argmax)[i]] += g[i];
  });
}

template <typename T>
Var<T> softmax(const Var<T>& logits) {
  const Shape& s = logits.shape();
  if (s.empty()) fail(ErrorCode::ShapeMismatch, "softmax of a scalar");
  const std::int64_t classes = s.back();
  const std::int64_t rows = logits.value().numel() / std::max<std::int64_t>(classes, 1);
  Tensor<T> out(s);
  const T* z = logits.value().data();
  for (std::int64_t r = 0; r < rows; ++r) {
    const T* zr = z + r * classes;
    T* yr = out.data() + r * classes;
    const T m = *std::max_element(zr, zr + classes);
    T total{0};
    for (std::int64_t c = 0; c < classes; ++c) {
      yr[c] = std::exp(zr[c] - m);
      total += yr[c];
    }
    for (std::int64_t c = 0; c < classes; ++c) yr[c] /= total;
  }
  return make_result<T>(std::move(out), {logits}, [rows, classes](Node<T>& self) {
    T* ga = parent_grad(self, 0).data();
    const T* g = self.grad.data();
    const T* y = self.value.data();
    for (std::int64_t r = 0; r < rows; ++r) {
      T dot{0};
      for (std::int64_t c = 0; c < classes; ++c) dot += g[r * classes + c] * y[r * classes + c];
      for (std::int64_t c = 0; c < classes; ++c) {
        ga[r * classes + c] += y[r * classes + c] * (g[r * classes + c] - dot);
      }
    }
  });
}

template <typename T>
Var<T> cross_entropy(const Var<T>& logits, const std::vector<int>& labels) {
  require_rank(logits.shape(), 2, "cross_entropy");
  const std::int64_t batch = logits.dim(0), classes = logits.dim(1);
  if (static_cast<std::int64_t>(labels.size()) != batch) {
    fail(ErrorCode::ShapeMismatch, "cross_entropy: " + std::to_string(labels.size()) +
                                       " labels for logits " + shape_str(logits.shape()));
  }
  auto probs = std::make_shared<std::vector<T>>(static_cast<std::size_t>(batch * classes));
  const T* z = logits.value().data();
  double loss = 0.0;
  for (std::int64_t b = 0; b < batch; ++b) {
    const int label = labels[static_cast<std::size_t>(b)];
    if (label < 0 || label >= classes) {
      fail(ErrorCode::IndexOutOfRange, "label " + std::to_string(label) + " with " + std::to_string(classes) + " classes");
    }
    const T* zr = z + b * classes;
    const T m = *std::max_element(zr, zr + classes);
    T total{0};
    for (std::int64_t c = 0; c < classes; ++c) total += std::exp(zr[c] - m);
    const T log_total = std::log(total);
    for (std::int64_t c = 0; c < classes; ++c) {
      (*probs)[static_cast<std::size_t>(b * classes + c)] = std::exp(zr[c] - m - log_total);
    }
    loss += static_cast<double>(log_total + m - zr[label]);
  }
  Tensor<T> out = Tensor<T>::scalar(static_cast<T>(loss / static_cast<double>(std::max<std::int64_t>(batch, 1))));
  return make_result<T>(std::move(out), {logits}, [probs, labels, batch, classes](Node<T>& self) {
    T* ga = parent_grad(self, 0).data();
    const T g = self.grad[0] / static_cast<T>(batch);
    for (std::int64_t b = 0; b < batch; ++b) {
      for (std::int64_t c = 0; c < classes; ++c) {
        const std::size_t i = static_cast<std::size_t>(b * classes + c);
        ga[i] += g * ((*probs)[i] - (c == labels[static_cast<std::size_t>(b)] ? T{1} : T{0}));
      }
    }
  });
}

namespace {

struct ConvGeometry {
  std::int64_t batch, in_channels, frames, joints, out_channels, kernel, out_frames;
  TemporalConvSpec spec;
  bool pointwise() const { return kernel == 1 && spec.stride == 1 && spec.padding == 0; }
};

template <typename T>
void im2col(const ConvGeometry& g, const T* x, T* cols) {
  const std::int64_t row_len = g.out_frames * g.joints;
  for (std::int64_t ci = 0; ci < g.in_channels; ++ci) {
    for (std::int64_t k = 0; k < g.kernel; ++k) {
      T* row = cols + (ci * g.kernel + k) * row_len;
      for (std::int64_t to = 0; to < g.out_frames; ++to) {
        const std::int64_t src = to * g.spec.stride - g.spec.padding + k * g.spec.dilation;
        T* dst = row + to * g.joints;
        if (src < 0 || src >= g.frames) {
          std::fill_n(dst, g.joints, T{0});
        } else {
          std::copy_n(x + (ci * g.frames + src) * g.joints, g.joints, dst);
        }
      }
    }
  }
}

template <typename T>
void col2im_add(const ConvGeometry& g, const T* cols, T* dx) {
  const std::int64_t row_len = g.out_frames * g.joints;
  for (std::int64_t ci = 0; ci < g.in_channels; ++ci) {
    for (std::int64_t k = 0; k < g.kernel; ++k) {
      const T* row = cols + (ci * g.kernel + k) * row_len;
      for (std::int64_t to = 0; to < g.out_frames; ++to) {
        const std::int64_t src = to * g.spec.stride - g.spec.padding + k * g.spec.dilation;
        if (src < 0 || src >= g.frames) continue;
        T* dst = dx + (ci * g.frames + src) * g.joints;
        const T* s = row + to * g.joints;
        for (std::int64_t v = 0; v < g.joints; ++v) dst[v] += s[v];
      }
    }
  }
}

}  // namespace

template <typename T>
Var<T> conv_temporal(const Var<T>& x, const Var<T>& weight, const std::optional<Var<T>>& bias,
                     TemporalConvSpec spec) {
  require_rank(x.shape(), 4, "conv_temporal input");
  require_rank(weight.shape(), 3, "conv_temporal weight");
  if (spec.stride < 1 || spec.dilation < 1 || spec.padding < 0) {
    fail(ErrorCode::InvalidArgument, "conv_temporal needs stride, dilation >= 1 and padding >= 0");
  }
  ConvGeometry g{x.dim(0), x.dim(1), x.dim(2), x.dim(3), weight.dim(0), weight.dim(2), 0, spec};
  if (weight.dim(1) != g.in_channels) {
    fail(ErrorCode::ShapeMismatch, "conv_temporal input " + shape_str(x.shape()) + " with weight " +
                                       shape_str(weight.shape()));
  }
  if (bias && (bias->shape() != Shape{g.out_channels})) {
    fail(ErrorCode::ShapeMismatch, "conv_temporal bias " + shape_str(bias->shape()) + " for weight " +
                                       shape_str(weight.shape()));
  }
  const std::int64_t span = spec.dilation * (g.kernel - 1) + 1;
  if (g.frames + 2 * spec.padding < span) {
    fail(ErrorCode::ShapeMismatch, "conv_temporal kernel span exceeds padded input " + shape_str(x.shape()));
  }
  g.out_frames = (g.frames + 2 * spec.padding - span) / spec.stride + 1;

  const std::int64_t cols_rows = g.in_channels * g.kernel;
  const std::int64_t cols_len = g.out_frames * g.joints;
  const std::int64_t in_step = g.in_channels * g.frames * g.joints;
  const std::int64_t out_step = g.out_channels * cols_len;
  Tensor<T> out({g.batch, g.out_channels, g.out_frames, g.joints});
  CMapR<T> w(weight.value().data(), g.out_channels, cols_rows);
  std::vector<T> cols(g.pointwise() ? 0 : static_cast<std::size_t>(cols_rows * cols_len));
  for (std::int64_t b = 0; b < g.batch; ++b) {
    const T* xb = x.value().data() + b * in_step;
    MapR<T> ob(out.data() + b * out_step, g.out_channels, cols_len);
    if (g.pointwise()) {
      ob.noalias() = w * CMapR<T>(xb, cols_rows, cols_len);
    } else {
      im2col(g, xb, cols.data());
      ob.noalias() = w * CMapR<T>(cols.data(), cols_rows, cols_len);
    }
    if (bias) {
      const T* pb = bias->value().data();
      for (std::int64_t co = 0; co < g.out_channels; ++co) ob.row(co).array() += pb[co];
    }
  }

  std::vector<Var<T>> inputs{x, weight};
  if (bias) inputs.push_back(*bias);
  const bool has_bias = bias.has_value();
  return make_result<T>(std::move(out), std::move(inputs), [g, has_bias, cols_rows, cols_len, in_step, out_step](Node<T>& self) {
    const T* xv = self.parents[0]->value.data();
    CMapR<T> w(self.parents[1]->value.data(), g.out_channels, cols_rows);
    const bool gx = wants_grad(self, 0), gw = wants_grad(self, 1);
    const bool gb = has_bias && wants_grad(self, 2);
    T* dx = gx ? parent_grad(self, 0).data() : nullptr;
    std::optional<MapR<T>> dw;
    if (gw) dw.emplace(parent_grad(self, 1).data(), g.out_channels, cols_rows);
    T* db = gb ? parent_grad(self, 2).data() : nullptr;
    std::vector<T> cols(g.pointwise() ? 0 : static_cast<std::size_t>(cols_rows * cols_len));
    MatR<T> dcols;
    for (std::int64_t b = 0; b < g.batch; ++b) {
      CMapR<T> gout(self.grad.data() + b * out_step, g.out_channels, cols_len);
      const T* xb = xv + b * in_step;
      if (gw) {
        if (g.pointwise()) {
          dw->noalias() += gout * CMapR<T>(xb, cols_rows, cols_len).transpose();
        } else {
          im2col(g, xb, cols.data());
          dw->noalias() += gout * CMapR<T>(cols.data(), cols_rows, cols_len).transpose();
        }
      }
      if (gx) {
        if (g.pointwise()) {
          MapR<T>(dx + b * in_step, cols_rows, cols_len).noalias() += w.transpose() * gout;
        } else {
          dcols.noalias() = w.transpose() * gout;
          col2im_add(g, dcols.data(), dx + b * in_step);
        }
      }
      if (gb) {
        for (std::int64_t co = 0; co < g.out_channels; ++co) db[co] += gout.row(co).sum();
      }
    }
  });
}

template <typename T>
Var<T> max_pool_temporal(const Var<T>& x, std::int64_t kernel, std::int64_t stride, std::int64_t padding) {
  require_rank(x.shape(), 4, "max_pool_temporal");
  if (kernel < 1 || stride < 1 || padding < 0 || padding >= kernel) {
    fail(ErrorCode::InvalidArgument, "max_pool_temporal needs kernel, stride >= 1 and 0 <= padding < kernel");
  }
  const std::int64_t batch = x.dim(0), channels = x.dim(1), frames = x.dim(2), joints = x.dim(3);
  if (frames + 2 * padding < kernel) fail(ErrorCode::ShapeMismatch, "pool window exceeds " + shape_str(x.shape()));
  const std::int64_t out_frames = (frames + 2 * padding - kernel) / stride + 1;
  Tensor<T> out({batch, channels, out_frames, joints});
  auto argmax = std::make_shared<std::vector<std::int64_t>>(static_cast<std::size_t>(out.numel()));
  const T* px = x.value().data();
  std::int64_t o = 0;
  for (std::int64_t bc = 0; bc < batch * channels; ++bc) {
    const T* plane = px + bc * frames * joints;
    for (std::int64_t to = 0; to < out_frames; ++to) {
      const std::int64_t lo = std::max<std::int64_t>(to * stride - padding, 0);
      const std::int64_t hi = std::min<std::int64_t>(to * stride - padding + kernel, frames);
      for (std::int64_t v = 0; v < joints; ++v, ++o) {
        std::int64_t best = lo * joints + v;
        for (std::int64_t t = lo + 1; t < hi; ++t) {
          if (plane[t * joints + v] > plane[best]) best = t * joints + v;
        }
        out[o] = plane[best];
        (*argmax)[static_cast<std::size_t>(o)] = bc * frames * joints + best;
      }
    }
  }
  return make_result<T>(std::move(out), {x}, [argmax](Node<T>& self) {
    T* gx = parent_grad(self, 0).data();
    const T* g = self.grad.data();
    for (std::size_t i = 0; i < argmax->size(); ++i) gx[(*argmax)[i]] += g[i];
  });
}

template <typename T>
Var<T> batch_norm(const Var<T>& x, const Var<T>& gamma, const Var<T>& beta, BatchNormStats<T>& stats,
                  BatchNormSpec spec) {
  if (x.shape().size() < 2) fail(ErrorCode::ShapeMismatch, "batch_norm input " + shape_str(x.shape()));
  const std::int64_t batch = x.dim(0), channels = x.dim(1);
  const std::int64_t inner = x.value().numel() / std::max<std::int64_t>(batch * channels, 1);
  const Shape cshape{channels};
  if (gamma.shape() != cshape || beta.shape() != cshape || stats.running_mean.shape() != cshape ||
      stats.running_var.shape() != cshape) {
    fail(ErrorCode::ShapeMismatch, "batch_norm input " + shape_str(x.shape()) + " with affine " +
                                       shape_str(gamma.shape()));
  }
  const std::int64_t count = batch * inner;
  auto mean = std::make_shared<std::vector<T>>(static_cast<std::size_t>(channels));
  auto inv_std = std::make_shared<std::vector<T>>(static_cast<std::size_t>(channels));
  const T* px = x.value().data();
  for (std::int64_t c = 0; c < channels; ++c) {
    if (spec.training) {
      double s = 0.0;
      for (std::int64_t b = 0; b < batch; ++b) {
        const T* p = px + (b * channels + c) * inner;
        for (std::int64_t i = 0; i < inner; ++i) s += p[i];
      }
      const double mu = s / static_cast<double>(count);
      double ss = 0.0;
      for (std::int64_t b = 0; b < batch; ++b) {
        const T* p = px + (b * channels + c) * inner;
        for (std::int64_t i = 0; i < inner; ++i) {
          const double d = p[i] - mu;
          ss += d * d;
        }
      }
      const double var = ss / static_cast<double>(count);
      (*mean)[c] = static_cast<T>(mu);
      (*inv_std)[c] = static_cast<T>(1.0 / std::sqrt(var + spec.eps));
      const double unbiased = count > 1 ? var * static_cast<double>(count) / static_cast<double>(count - 1) : var;
      stats.running_mean[c] = static_cast<T>((1.0 - spec.momentum) * stats.running_mean[c] + spec.momentum * mu);
      stats.running_var[c] = static_cast<T>((1.0 - spec.momentum) * stats.running_var[c] + spec.momentum * unbiased);
    } else {
      (*mean)[c] = stats.running_mean[c];
      (*inv_std)[c] = static_cast<T>(1.0 / std::sqrt(static_cast<double>(stats.running_var[c]) + spec.eps));
    }
  }
  Tensor<T> out(x.shape());
  const T* pg = gamma.value().data();
  const T* pb = beta.value().data();
  for (std::int64_t b = 0; b < batch; ++b) {
    for (std::int64_t c = 0; c < channels; ++c) {
      const T* p = px + (b * channels + c) * inner;
      T* q = out.data() + (b * channels + c) * inner;
      const T a = pg[c] * (*inv_std)[c];
      const T shift = pb[c] - a * (*mean)[c];
      for (std::int64_t i = 0; i < inner; ++i) q[i] = a * p[i] + shift;
    }
  }
  const bool training = spec.training;
  return make_result<T>(std::move(out), {x, gamma, beta},
                        [mean, inv_std, batch, channels, inner, count, training](Node<T>& self) {
    const T* px = self.parents[0]->value.data();
    const T* pg = self.parents[1]->value.data();
    const T* g = self.grad.data();
    const bool gx = wants_grad(self, 0), gg = wants_grad(self, 1), gb = wants_grad(self, 2);
    T* dx = gx ? parent_grad(self, 0).data() : nullptr;
    T* dgamma = gg ? parent_grad(self, 1).data() : nullptr;
    T* dbeta = gb ? parent_grad(self, 2).data() : nullptr;
    for (std::int64_t c = 0; c < channels; ++c) {
      const T mu = (*mean)[c], is = (*inv_std)[c];
      double sum_g = 0.0, sum_gx = 0.0;
      for (std::int64_t b = 0; b < batch; ++b) {
        const T* p = px + (b * channels + c) * inner;
        const T* q = g + (b * channels + c) * inner;
        for (std::int64_t i = 0; i < inner; ++i) {
          sum_g += q[i];
          sum_gx += q[i] * (p[i] - mu) * is;
        }
      }
      if (gg) dgamma[c] += static_cast<T>(sum_gx);
      if (gb) dbeta[c] += static_cast<T>(sum_g);
      if (!gx) continue;
      const T a = pg[c] * is;
      const T mean_g = static_cast<T>(sum_g / static_cast<double>(count));
      const T mean_gx = static_cast<T>(sum_gx / static_cast<double>(count));
      for (std::int64_t b = 0; b < batch; ++b) {
        const T* p = px + (b * channels + c) * inner;
        const T* q = g + (b * channels + c) * inner;
        T* d = dx + (b * channels + c) * inner;
        if (training) {
          for (std::int64_t i = 0; i < inner; ++i) {
            const T xhat = (p[i] - mu) * is;
            d[i] += a * (q[i] - mean_g - xhat * mean_gx);
          }
        } else {
          for (std::int64_t i = 0; i < inner; ++i) d[i] += a * q[i];
        }
      }
    }
  });
}

template <typename T>
Var<T> graph_aggregate(const Var<T>& y, const Var<T>& adjacency) {
  require_rank(y.shape(), 4, "graph_aggregate features");
  const Shape& as = adjacency.shape();
  if (as.size() != 3 && as.size() != 4) {
    fail(ErrorCode::ShapeMismatch, "graph_aggregate adjacency must be [K,V,V] or [B,K,V,V], got " + shape_str(as));
  }
  const bool per_sample = as.size() == 4;
  const std::int64_t batch = y.dim(0), frames = y.dim(2), joints = y.dim(3);
  const std::int64_t subsets = adjacency.dim(-3);
  if (adjacency.dim(-1) != joints || adjacency.dim(-2) != joints || subsets < 1 || y.dim(1) % subsets != 0 ||
      (per_sample && adjacency.dim(0) != batch)) {
    fail(ErrorCode::ShapeMismatch, "graph_aggregate features " + shape_str(y.shape()) + " with adjacency " +
                                       shape_str(as));
  }
  const std::int64_t channels = y.dim(1) / subsets;
  const std::int64_t rows = channels * frames;
  const std::int64_t vv = joints * joints;
  Tensor<T> out({batch, channels, frames, joints});
  const T* py = y.value().data();
  const T* pa = adjacency.value().data();
  for (std::int64_t b = 0; b < batch; ++b) {
    MapR<T> ob(out.data() + b * rows * joints, rows, joints);
    for (std::int64_t k = 0; k < subsets; ++k) {
      CMapR<T> yk(py + (b * subsets + k) * rows * joints, rows, joints);
      CMapR<T> ak(pa + ((per_sample ? b * subsets : 0) + k) * vv, joints, joints);
      ob.noalias() += yk * ak;
    }
  }
  return make_result<T>(std::move(out), {y, adjacency},
                        [batch, subsets, rows, joints, vv, per_sample](Node<T>& self) {
    const T* py = self.parents[0]->value.data();
    const T* pa = self.parents[1]->value.data();
    const bool gy = wants_grad(self, 0), ga = wants_grad(self, 1);
    T* dy = gy ? parent_grad(self, 0).data() : nullptr;
    T* da = ga ? parent_grad(self, 1).data() : nullptr;
    for (std::int64_t b = 0; b < batch; ++b) {
      CMapR<T> gb(self.grad.data() + b * rows * joints, rows, joints);
      for (std::int64_t k = 0; k < subsets; ++k) {
        const std::int64_t a_off = ((per_sample ? b * subsets : 0) + k) * vv;
        const std::int64_t y_off = (b * subsets + k) * rows * joints;
        if (gy) MapR<T>(dy + y_off, rows, joints).noalias() += gb * CMapR<T>(pa + a_off, joints, joints).transpose();
        if (ga) MapR<T>(da + a_off, joints, joints).noalias() += CMapR<T>(py + y_off, rows, joints).transpose() * gb;
      }
    }
  });
}

#define TPGCN_INSTANTIATE_OPS(T)                                                                       \
  template Var<T> add(const Var<T>&, const Var<T>&);                                                  \
  template Var<T> sub(const Var<T>&, const Var<T>&);                                                  \
  template Var<T> mul(const Var<T>&, const Var<T>&);                                                  \
  template Var<T> scale(const Var<T>&, T);                                                            \
  template Var<T> relu(const Var<T>&);                                                                \
  template Var<T> sigmoid(const Var<T>&);                                                             \
  template Var<T> matmul(const Var<T>&, const Var<T>&);                                               \
  template Var<T> reshape(const Var<T>&, Shape);                                                      \
  template Var<T> concat(const std::vector<Var<T>>&, std::int64_t);                                   \
  template Var<T> slice(const Var<T>&, std::int64_t, std::int64_t, std::int64_t);                     \
  template Var<T> sum(const Var<T>&, const std::vector<std::int64_t>&, bool);                         \
  template Var<T> mean(const Var<T>&, const std::vector<std::int64_t>&, bool);                        \
  template Var<T> max(const Var<T>&, std::int64_t, bool);                                             \
  template Var<T> sum_all(const Var<T>&);                                                             \
  template Var<T> softmax(const Var<T>&);                                                             \
  template Var<T> cross_entropy(const Var<T>&, const std::vector<int>&);                              \
  template Var<T> conv_temporal(const Var<T>&, const Var<T>&, const std::optional<Var<T>>&,           \
                                TemporalConvSpec);                                                    \
  template Var<T> max_pool_temporal(const Var<T>&, std::int64_t, std::int64_t, std::int64_t);         \
  template Var<T> batch_norm(const Var<T>&, const Var<T>&, const Var<T>&, BatchNormStats<T>&,         \
                             BatchNormSpec);                                                          \
  template Var<T> graph_aggregate(const Var<T>&, const Var<T>&);

TPGCN_INSTANTIATE_OPS(float)
TPGCN_INSTANTIATE_OPS(double)

#undef TPGCN_INSTANTIATE_OPS

}  // namespace tpgcn::ops
