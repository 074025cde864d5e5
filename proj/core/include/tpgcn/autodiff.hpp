#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "tpgcn/tensor.hpp"

namespace tpgcn {

template <typename T>
class Tape;

/// One value in the computation graph. Leaves are either constants or parameters.
template <typename T>
struct Node {
  Tensor<T> value;
  Tensor<T> grad;  // empty until something flows into it
  bool requires_grad = false;
  const Tape<T>* tape = nullptr;
  std::vector<std::shared_ptr<Node>> parents;
  // Reads this->grad and accumulates into the parents' grads.
  std::function<void(Node&)> backward;

  Tensor<T>& ensure_grad() {
    if (grad.empty() && value.numel() > 0) grad = Tensor<T>(value.shape());
    if (grad.shape() != value.shape()) grad = Tensor<T>(value.shape());
    return grad;
  }
};

/// Handle to a graph node. Copies share the node.
template <typename T>
class Var {
 public:
  Var() = default;
  explicit Var(std::shared_ptr<Node<T>> node) : node_(std::move(node)) {}
  /// A constant leaf.
  explicit Var(Tensor<T> value) : node_(std::make_shared<Node<T>>()) { node_->value = std::move(value); }

  const Tensor<T>& value() const { return node_->value; }
  const Tensor<T>& grad() const { return node_->grad; }
  const Shape& shape() const { return node_->value.shape(); }
  std::int64_t dim(std::int64_t axis) const { return node_->value.dim(axis); }
  bool requires_grad() const { return node_ && node_->requires_grad; }
  const std::shared_ptr<Node<T>>& node() const { return node_; }
  explicit operator bool() const { return static_cast<bool>(node_); }

 private:
  std::shared_ptr<Node<T>> node_;
};

/// A named trainable tensor. The gradient slot is the leaf node's grad.
template <typename T>
class Parameter {
 public:
  Parameter(std::string name, Tensor<T> value, bool decay = true);

  const std::string& name() const { return name_; }
  Tensor<T>& value() { return node_->value; }
  const Tensor<T>& value() const { return node_->value; }
  Tensor<T>& grad() { return node_->ensure_grad(); }
  const Tensor<T>& grad() const { return node_->grad; }
  /// Whether weight decay applies (false for biases and normalization affines).
  bool decay() const { return decay_; }
  std::int64_t numel() const { return node_->value.numel(); }

  void zero_grad();
  Var<T> var() const { return Var<T>(node_); }

 private:
  std::string name_;
  bool decay_;
  std::shared_ptr<Node<T>> node_;
};

/// Records differentiable ops while active. Only one tape per scalar type per
/// thread is active at a time; scopes nest by saving the previous tape.
template <typename T>
class Tape {
 public:
  Tape();
  ~Tape();
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  static Tape* active();
  void record(const std::shared_ptr<Node<T>>& node);
  std::size_t size() const { return nodes_.size(); }

  /// Reverse sweep from a scalar loss; accumulates into every reachable parameter.
  void backward(const Var<T>& loss, T seed = T{1});

 private:
  std::vector<std::shared_ptr<Node<T>>> nodes_;
  Tape* previous_;
};

/// Runs the reverse sweep on the active tape; NoTape if none recorded the loss.
template <typename T>
void backward(const Var<T>& loss, T seed = T{1});

/// Builds a node from a forward value. Records it when a tape is active and any
/// parent requires grad; otherwise the backward rule is dropped.
template <typename T>
Var<T> make_result(Tensor<T> value, std::vector<Var<T>> parents, std::function<void(Node<T>&)> backward);

/// Debug mode: every op result is scanned for NaN/Inf and raises NonFiniteDetected.
void set_debug_checks(bool enabled);
bool debug_checks_enabled();

}  // namespace tpgcn
