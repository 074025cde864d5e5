#pragma once

#include <vector>

#include "tpgcn/autodiff.hpp"

namespace tpgcn {

struct SgdOptions {
  double momentum = 0.9;
  double weight_decay = 0.0002;
  bool nesterov = true;
};

/// SGD with (Nesterov) momentum. Per parameter: g += wd * w when the parameter
/// decays, buf = momentum * buf + g, step = g + momentum * buf (Nesterov) or buf,
/// w -= lr * step. Buffers start at zero and persist across steps.
template <typename T>
class SgdNesterov {
 public:
  SgdNesterov(std::vector<Parameter<T>*> params, SgdOptions options = {});

  void step(double lr);
  void zero_grad();
  const SgdOptions& options() const { return options_; }

 private:
  std::vector<Parameter<T>*> params_;
  std::vector<Tensor<T>> buffers_;
  SgdOptions options_;
};

}  // namespace tpgcn
