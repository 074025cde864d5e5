#include "tpgcn/layers.hpp"

#include <cmath>

namespace tpgcn {

namespace {

template <typename T>
Tensor<T> normal_tensor(Shape shape, double stddev, std::mt19937_64& rng) {
  Tensor<T> t(std::move(shape));
  std::normal_distribution<double> dist(0.0, stddev);
  for (std::int64_t i = 0; i < t.numel(); ++i) t[i] = static_cast<T>(dist(rng));
  return t;
}

template <typename T>
Tensor<T> uniform_tensor(Shape shape, double bound, std::mt19937_64& rng) {
  Tensor<T> t(std::move(shape));
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (std::int64_t i = 0; i < t.numel(); ++i) t[i] = static_cast<T>(dist(rng));
  return t;
}

std::int64_t out_frames(std::int64_t frames, std::int64_t stride) { return (frames - 1) / stride + 1; }

}  // namespace

// ---- BatchNorm

template <typename T>
BatchNorm<T>::BatchNorm(const std::string& name, std::int64_t channels)
    : name_(name),
      gamma_(name + ".gamma", Tensor<T>(Shape{channels}, T{1}), false),
      beta_(name + ".beta", Tensor<T>(Shape{channels}, T{0}), false),
      stats_(channels) {}

template <typename T>
Var<T> BatchNorm<T>::forward(const Var<T>& x, bool training) {
  ops::BatchNormSpec spec;
  spec.training = training;
  return ops::batch_norm(x, gamma_.var(), beta_.var(), stats_, spec);
}

template <typename T>
void BatchNorm<T>::visit(const StateVisitor<T>& v) {
  v.parameter(gamma_);
  v.parameter(beta_);
  v.buffer(name_ + ".running_mean", stats_.running_mean);
  v.buffer(name_ + ".running_var", stats_.running_var);
}

// ---- TemporalConv

template <typename T>
TemporalConv<T>::TemporalConv(const std::string& name, std::int64_t in, std::int64_t out, std::int64_t kernel,
                              std::int64_t stride, std::int64_t dilation, bool bias, std::mt19937_64& rng)
    : in_(in),
      out_(out),
      kernel_(kernel),
      spec_{stride, dilation, dilation * (kernel - 1) / 2},
      weight_(name + ".weight", normal_tensor<T>({out, in, kernel}, std::sqrt(2.0 / static_cast<double>(out * kernel)), rng)) {
  if (bias) bias_.emplace(name + ".bias", Tensor<T>(Shape{out}, T{0}), false);
}

template <typename T>
Var<T> TemporalConv<T>::forward(const Var<T>& x) const {
  std::optional<Var<T>> b;
  if (bias_) b = bias_->var();
  return ops::conv_temporal(x, weight_.var(), b, spec_);
}

template <typename T>
Shape TemporalConv<T>::trace(const Shape& in, MacCounter& mc) const {
  if (in.size() != 4 || in[1] != in_) fail(ErrorCode::ShapeMismatch, "conv expects " + std::to_string(in_) + " channels, got " + shape_str(in));
  const std::int64_t span = spec_.dilation * (kernel_ - 1) + 1;
  const std::int64_t t_out = (in[2] + 2 * spec_.padding - span) / spec_.stride + 1;
  mc.macs += in[0] * out_ * t_out * in[3] * in_ * kernel_;
  return {in[0], out_, t_out, in[3]};
}

template <typename T>
void TemporalConv<T>::visit(const StateVisitor<T>& v) {
  v.parameter(weight_);
  if (bias_) v.parameter(*bias_);
}

// ---- Linear

template <typename T>
Linear<T>::Linear(const std::string& name, std::int64_t in, std::int64_t out, std::mt19937_64& rng)
    : weight_(name + ".weight", uniform_tensor<T>({in, out}, 1.0 / std::sqrt(static_cast<double>(in)), rng)),
      bias_(name + ".bias", Tensor<T>(Shape{out}, T{0}), false) {}

template <typename T>
Var<T> Linear<T>::forward(const Var<T>& x) const {
  return ops::add(ops::matmul(x, weight_.var()), bias_.var());
}

template <typename T>
Shape Linear<T>::trace(const Shape& in, MacCounter& mc) const {
  const std::int64_t i = weight_.value().dim(0), o = weight_.value().dim(1);
  if (in.size() != 2 || in[1] != i) fail(ErrorCode::ShapeMismatch, "linear expects [B," + std::to_string(i) + "], got " + shape_str(in));
  mc.macs += in[0] * i * o;
  return {in[0], o};
}

template <typename T>
void Linear<T>::visit(const StateVisitor<T>& v) {
  v.parameter(weight_);
  v.parameter(bias_);
}

// ---- SgcLayer

template <typename T>
SgcLayer<T>::SgcLayer(const std::string& name, std::int64_t in, std::int64_t out, std::int64_t subsets,
                      std::int64_t vertices, bool edge_mask, std::mt19937_64& rng)
    : out_(out),
      subsets_(subsets),
      vertices_(vertices),
      transform_(name + ".transform", in, out * subsets, 1, 1, 1, true, rng) {
  if (edge_mask) mask_.emplace(name + ".edge_mask", Tensor<T>(Shape{subsets, vertices, vertices}, T{1}), false);
}

template <typename T>
Var<T> SgcLayer<T>::forward(const Var<T>& x, const Var<T>& adjacency) const {
  const Shape& as = adjacency.shape();
  if (as.size() < 3 || adjacency.dim(-3) != subsets_ || adjacency.dim(-1) != vertices_ || x.shape().size() != 4 ||
      x.dim(3) != vertices_) {
    fail(ErrorCode::ShapeMismatch, "SGC input " + shape_str(x.shape()) + " with adjacency " + shape_str(as) +
                                       " for " + std::to_string(subsets_) + " subsets of " +
                                       std::to_string(vertices_) + " vertices");
  }
  const Var<T> a = mask_ ? ops::mul(adjacency, mask_->var()) : adjacency;
  return ops::graph_aggregate(transform_.forward(x), a);
}

template <typename T>
Shape SgcLayer<T>::trace(const Shape& in, MacCounter& mc) const {
  const Shape y = transform_.trace(in, mc);
  mc.macs += y[0] * y[1] * y[2] * vertices_ * vertices_;
  return {y[0], out_, y[2], y[3]};
}

template <typename T>
void SgcLayer<T>::visit(const StateVisitor<T>& v) {
  transform_.visit(v);
  if (mask_) v.parameter(*mask_);
}

// ---- TemporalUnit

template <typename T>
TemporalUnit<T>::TemporalUnit(const std::string& name, std::int64_t in, std::int64_t out, std::int64_t stride,
                              std::mt19937_64& rng)
    : conv_(name + ".conv", in, out, 3, stride, 1, true, rng), bn_(name + ".bn", out) {}

template <typename T>
Var<T> TemporalUnit<T>::forward(const Var<T>& x, bool training) {
  return bn_.forward(conv_.forward(x), training);
}

template <typename T>
Shape TemporalUnit<T>::trace(const Shape& in, MacCounter& mc) const {
  return conv_.trace(in, mc);
}

template <typename T>
void TemporalUnit<T>::visit(const StateVisitor<T>& v) {
  conv_.visit(v);
  bn_.visit(v);
}

// ---- Shortcut

template <typename T>
Shortcut<T>::Shortcut(const std::string& name, std::int64_t in, std::int64_t out, std::int64_t stride,
                      std::mt19937_64& rng) {
  if (in != out || stride != 1) {
    conv_.emplace(name + ".conv", in, out, 1, stride, 1, true, rng);
    bn_.emplace(name + ".bn", out);
  }
}

template <typename T>
Var<T> Shortcut<T>::forward(const Var<T>& x, bool training) {
  if (!conv_) return x;
  return bn_->forward(conv_->forward(x), training);
}

template <typename T>
Shape Shortcut<T>::trace(const Shape& in, MacCounter& mc) const {
  return conv_ ? conv_->trace(in, mc) : in;
}

template <typename T>
void Shortcut<T>::visit(const StateVisitor<T>& v) {
  if (!conv_) return;
  conv_->visit(v);
  bn_->visit(v);
}

// ---- MsTcn

template <typename T>
MsTcn<T>::MsTcn(const std::string& name, std::int64_t in, std::int64_t out, std::int64_t stride, bool residual,
                std::mt19937_64& rng)
    : stride_(stride),
      dil1_(name + ".b0.conv", out / 4, out / 4, 3, stride, 1, true, rng),
      dil2_(name + ".b1.conv", out / 4, out / 4, 3, stride, 2, true, rng),
      dil1_bn_(name + ".b0.bn", out / 4),
      dil2_bn_(name + ".b1.bn", out / 4),
      pool_bn_(name + ".b2.bn", out / 4) {
  if (out % 4 != 0) fail(ErrorCode::ConfigMismatch, "MS-TCN output channels must be divisible by 4, got " + std::to_string(out));
  const std::int64_t branch = out / 4;
  for (int b = 0; b < 4; ++b) {
    const std::string prefix = name + ".b" + std::to_string(b) + ".reduce";
    reduce_.push_back(Bottleneck{TemporalConv<T>(prefix, in, branch, 1, b == 3 ? stride : 1, 1, true, rng),
                                 BatchNorm<T>(prefix + "_bn", branch)});
  }
  if (residual) residual_.emplace(name + ".residual", in, out, stride, rng);
}

template <typename T>
Var<T> MsTcn<T>::forward(const Var<T>& x, bool training) {
  std::vector<Var<T>> outs;
  outs.reserve(4);
  for (std::size_t b = 0; b < 4; ++b) {
    Var<T> h = reduce_[b].bn.forward(reduce_[b].conv.forward(x), training);
    if (b == 3) {
      outs.push_back(h);
      continue;
    }
    h = ops::relu(h);
    if (b == 0) {
      outs.push_back(dil1_bn_.forward(dil1_.forward(h), training));
    } else if (b == 1) {
      outs.push_back(dil2_bn_.forward(dil2_.forward(h), training));
    } else {
      outs.push_back(pool_bn_.forward(ops::max_pool_temporal(h, 3, stride_, 1), training));
    }
  }
  Var<T> y = ops::concat(outs, 1);
  if (residual_) y = ops::add(y, residual_->forward(x, training));
  return y;
}

template <typename T>
Shape MsTcn<T>::trace(const Shape& in, MacCounter& mc) const {
  Shape branch_out;
  for (std::size_t b = 0; b < 4; ++b) {
    Shape h = reduce_[b].conv.trace(in, mc);
    if (b == 0) h = dil1_.trace(h, mc);
    if (b == 1) h = dil2_.trace(h, mc);
    if (b == 2) h[2] = out_frames(h[2], stride_);
    branch_out = h;
  }
  branch_out[1] *= 4;
  if (residual_) residual_->trace(in, mc);
  return branch_out;
}

template <typename T>
void MsTcn<T>::visit(const StateVisitor<T>& v) {
  for (std::size_t b = 0; b < 4; ++b) {
    reduce_[b].conv.visit(v);
    reduce_[b].bn.visit(v);
    if (b == 0) {
      dil1_.visit(v);
      dil1_bn_.visit(v);
    } else if (b == 1) {
      dil2_.visit(v);
      dil2_bn_.visit(v);
    } else if (b == 2) {
      pool_bn_.visit(v);
    }
  }
  if (residual_) residual_->visit(v);
}

// ---- StPartAtt

template <typename T>
StPartAtt<T>::StPartAtt(const std::string& name, std::int64_t channels, const SkeletonTopology& topology,
                        int persons, std::mt19937_64& rng, std::int64_t reduction)
    : pool_(part_pool_matrix(topology, persons).template cast<T>()),
      membership_(part_membership(topology, persons).template cast<T>()),
      reduce_(name + ".reduce", channels, channels / reduction, 1, 1, 1, true, rng),
      reduce_bn_(name + ".reduce_bn", channels / reduction),
      frame_fc_(name + ".frame_fc", channels / reduction, channels, 1, 1, 1, true, rng),
      part_fc_(name + ".part_fc", channels / reduction, channels, 1, 1, 1, true, rng) {
  if (reduction < 1 || channels % reduction != 0) {
    fail(ErrorCode::ConfigMismatch, "attention channels " + std::to_string(channels) + " not divisible by " +
                                        std::to_string(reduction));
  }
}

template <typename T>
Var<T> StPartAtt<T>::forward(const Var<T>& x, bool training) {
  if (x.shape().size() != 4) fail(ErrorCode::ShapeMismatch, "attention input " + shape_str(x.shape()));
  const std::int64_t b = x.dim(0), c = x.dim(1), t = x.dim(2), v = x.dim(3);
  const std::int64_t parts = pool_.dim(1);
  if (v != pool_.dim(0)) {
    fail(ErrorCode::PartMapIncomplete, "part map covers " + std::to_string(pool_.dim(0)) + " joints, input has " +
                                           std::to_string(v));
  }
  const Var<T> frames = ops::mean(x, {3}, true);  // [B,C,T,1]
  Var<T> part = ops::reshape(ops::mean(x, {2}, false), {b * c, v});
  part = ops::reshape(ops::matmul(part, ops::constant(pool_)), {b, c, parts, 1});
  Var<T> h = ops::concat(std::vector<Var<T>>{frames, part}, 2);  // [B,C,T+2P,1]
  h = ops::relu(reduce_bn_.forward(reduce_.forward(h), training));
  const Var<T> frame_score = ops::sigmoid(frame_fc_.forward(ops::slice(h, 2, 0, t)));      // [B,C,T,1]
  Var<T> part_score = ops::sigmoid(part_fc_.forward(ops::slice(h, 2, t, t + parts)));      // [B,C,2P,1]
  part_score = ops::reshape(ops::matmul(ops::reshape(part_score, {b * c, parts}), ops::constant(membership_)),
                            {b, c, 1, v});
  return ops::mul(x, ops::mul(frame_score, part_score));
}

template <typename T>
Shape StPartAtt<T>::trace(const Shape& in, MacCounter& mc) const {
  const std::int64_t parts = pool_.dim(1);
  mc.macs += in[0] * in[1] * in[3] * parts * 2;  // part pooling and expansion
  const Shape pooled{in[0], in[1], in[2] + parts, 1};
  const Shape r = reduce_.trace(pooled, mc);
  frame_fc_.trace({r[0], r[1], in[2], 1}, mc);
  part_fc_.trace({r[0], r[1], parts, 1}, mc);
  return in;
}

template <typename T>
void StPartAtt<T>::visit(const StateVisitor<T>& v) {
  reduce_.visit(v);
  reduce_bn_.visit(v);
  frame_fc_.visit(v);
  part_fc_.visit(v);
}

// ---- Block

template <typename T>
Block<T>::Block(const std::string& name, const BlockSpec& spec, std::int64_t subsets,
                const SkeletonTopology& topology, int persons, std::mt19937_64& rng)
    : spec_(spec),
      sgc_(name + ".sgc", spec.in, spec.out, subsets, static_cast<std::int64_t>(persons) * topology.joint_count,
           spec.edge_mask, rng),
      sgc_bn_(name + ".sgc_bn", spec.out) {
  if (spec.multiscale) {
    mstcn_.emplace(name + ".tcn", spec.out, spec.out, spec.stride, false, rng);
  } else {
    unit_.emplace(name + ".tcn", spec.out, spec.out, spec.stride, rng);
  }
  if (spec.attention) att_.emplace(name + ".att", spec.out, topology, persons, rng);
  if (spec.residual) residual_.emplace(name + ".residual", spec.in, spec.out, spec.stride, rng);
}

template <typename T>
Var<T> Block<T>::forward(const Var<T>& x, const Var<T>& adjacency, bool training) {
  if (x.shape().size() != 4 || x.dim(1) != spec_.in) {
    fail(ErrorCode::ShapeMismatch, "block expects " + std::to_string(spec_.in) + " channels, got " + shape_str(x.shape()));
  }
  Var<T> h = ops::relu(sgc_bn_.forward(sgc_.forward(x, adjacency), training));
  h = mstcn_ ? mstcn_->forward(h, training) : unit_->forward(h, training);
  if (att_) h = att_->forward(h, training);
  if (residual_) h = ops::add(h, residual_->forward(x, training));
  return ops::relu(h);
}

template <typename T>
Shape Block<T>::trace(const Shape& in, MacCounter& mc) const {
  Shape h = sgc_.trace(in, mc);
  h = mstcn_ ? mstcn_->trace(h, mc) : unit_->trace(h, mc);
  if (att_) h = att_->trace(h, mc);
  if (residual_) residual_->trace(in, mc);
  return h;
}

template <typename T>
void Block<T>::visit(const StateVisitor<T>& v) {
  sgc_.visit(v);
  sgc_bn_.visit(v);
  if (mstcn_) mstcn_->visit(v);
  if (unit_) unit_->visit(v);
  if (att_) att_->visit(v);
  if (residual_) residual_->visit(v);
}

#define TPGCN_INSTANTIATE_LAYERS(T) \
  template class BatchNorm<T>;      \
  template class TemporalConv<T>;   \
  template class Linear<T>;         \
  template class SgcLayer<T>;       \
  template class TemporalUnit<T>;   \
  template class Shortcut<T>;       \
  template class MsTcn<T>;          \
  template class StPartAtt<T>;      \
  template class Block<T>;

TPGCN_INSTANTIATE_LAYERS(float)
TPGCN_INSTANTIATE_LAYERS(double)

}  // namespace tpgcn
