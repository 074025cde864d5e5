#include "tpgcn/autodiff.hpp"

#include <atomic>

namespace tpgcn {

namespace {
std::atomic<bool> g_debug_checks{false};

template <typename T>
Tape<T>*& active_tape() {
  thread_local Tape<T>* tape = nullptr;
  return tape;
}
}  // namespace

void set_debug_checks(bool enabled) { g_debug_checks.store(enabled); }
bool debug_checks_enabled() { return g_debug_checks.load(); }

template <typename T>
Parameter<T>::Parameter(std::string name, Tensor<T> value, bool decay)
    : name_(std::move(name)), decay_(decay), node_(std::make_shared<Node<T>>()) {
  node_->value = std::move(value);
  node_->requires_grad = true;
  node_->grad = Tensor<T>(node_->value.shape());
}

template <typename T>
void Parameter<T>::zero_grad() {
  node_->ensure_grad().fill(T{0});
}

template <typename T>
Tape<T>::Tape() : previous_(active_tape<T>()) {
  active_tape<T>() = this;
}

template <typename T>
Tape<T>::~Tape() {
  active_tape<T>() = previous_;
}

template <typename T>
Tape<T>* Tape<T>::active() {
  return active_tape<T>();
}

template <typename T>
void Tape<T>::record(const std::shared_ptr<Node<T>>& node) {
  node->tape = this;
  nodes_.push_back(node);
}

template <typename T>
void Tape<T>::backward(const Var<T>& loss, T seed) {
  if (!loss || loss.node()->tape != this) {
    fail(ErrorCode::NoTape, "loss was not recorded on this tape");
  }
  if (loss.value().numel() != 1) {
    fail(ErrorCode::ShapeMismatch, "backward needs a scalar loss, got " + shape_str(loss.shape()));
  }
  loss.node()->ensure_grad()[0] += seed;
  // Creation order is a topological order, so the reverse visits consumers first.
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
    Node<T>& node = **it;
    if (node.grad.empty() || !node.backward) continue;
    node.backward(node);
  }
  // Intermediate grads are single-use; release them so a second sweep starts clean.
  for (auto& node : nodes_) {
    node->grad = Tensor<T>();
  }
}

template <typename T>
void backward(const Var<T>& loss, T seed) {
  Tape<T>* tape = Tape<T>::active();
  if (tape == nullptr) fail(ErrorCode::NoTape, "backward called with no active tape");
  tape->backward(loss, seed);
}

template <typename T>
Var<T> make_result(Tensor<T> value, std::vector<Var<T>> parents, std::function<void(Node<T>&)> backward) {
  if (debug_checks_enabled() && !value.all_finite()) {
    fail(ErrorCode::NonFiniteDetected, "op produced non-finite values in tensor " + shape_str(value.shape()));
  }
  auto node = std::make_shared<Node<T>>();
  node->value = std::move(value);
  Tape<T>* tape = Tape<T>::active();
  bool needs = false;
  for (const auto& p : parents) needs = needs || p.requires_grad();
  if (tape != nullptr && needs) {
    node->requires_grad = true;
    node->parents.reserve(parents.size());
    for (const auto& p : parents) node->parents.push_back(p.node());
    node->backward = std::move(backward);
    tape->record(node);
  }
  return Var<T>(std::move(node));
}

template class Parameter<float>;
template class Parameter<double>;
template class Tape<float>;
template class Tape<double>;
template void backward(const Var<float>&, float);
template void backward(const Var<double>&, double);
template Var<float> make_result(Tensor<float>, std::vector<Var<float>>, std::function<void(Node<float>&)>);
template Var<double> make_result(Tensor<double>, std::vector<Var<double>>, std::function<void(Node<double>&)>);

}  // namespace tpgcn
