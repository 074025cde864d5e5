#include "tpgcn/optimizer.hpp"

namespace tpgcn {

template <typename T>
SgdNesterov<T>::SgdNesterov(std::vector<Parameter<T>*> params, SgdOptions options)
    : params_(std::move(params)), options_(options) {
  buffers_.reserve(params_.size());
  for (auto* p : params_) buffers_.emplace_back(p->value().shape());
}

template <typename T>
void SgdNesterov<T>::step(double lr) {
  const T mu = static_cast<T>(options_.momentum);
  const T wd = static_cast<T>(options_.weight_decay);
  const T rate = static_cast<T>(lr);
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Parameter<T>& p = *params_[i];
    Tensor<T>& w = p.value();
    const Tensor<T>& g = p.grad();
    Tensor<T>& buf = buffers_[i];
    const bool decay = p.decay() && options_.weight_decay != 0.0;
    for (std::int64_t k = 0; k < w.numel(); ++k) {
      T d = g.empty() ? T{0} : g[k];
      if (decay) d += wd * w[k];
      buf[k] = mu * buf[k] + d;
      const T update = options_.nesterov ? d + mu * buf[k] : buf[k];
      w[k] -= rate * update;
    }
  }
}

template <typename T>
void SgdNesterov<T>::zero_grad() {
  for (auto* p : params_) p->zero_grad();
}

template class SgdNesterov<float>;
template class SgdNesterov<double>;

}  // namespace tpgcn
