#include "artgan/ndgrad/graph.hpp"

#include "artgan/errors.hpp"

namespace artgan::nd {

template <typename T>
void Graph<T>::ensure_live() const {
  if (freed_) throw ConfigError("graph already freed by a previous backward()");
}

template <typename T>
Var<T> Graph<T>::push(Node node) {
  ensure_live();
  node.value.check_finite(node.op);
  nodes_.push_back(std::move(node));
  return Var<T>(this, nodes_.size() - 1);
}

template <typename T>
Var<T> Graph<T>::constant(Tensor<T> value) {
  Node n;
  n.op = "constant";
  n.value = std::move(value);
  n.leaf = true;
  return push(std::move(n));
}

template <typename T>
Var<T> Graph<T>::input(Tensor<T> value) {
  Node n;
  n.op = "input";
  n.value = std::move(value);
  n.leaf = true;
  n.requires_grad = true;
  return push(std::move(n));
}

template <typename T>
Var<T> Graph<T>::parameter(Tensor<T>& param) {
  Node n;
  n.op = "parameter";
  n.value = Tensor<T>(param.shape(), param.vector());
  n.param = &param;
  n.leaf = true;
  n.requires_grad = true;
  return push(std::move(n));
}

template <typename T>
Var<T> Graph<T>::record(const char* op, Tensor<T> value, std::initializer_list<Var<T>> inputs,
                        BackwardFn backward) {
  Node n;
  n.op = op;
  n.value = std::move(value);
  for (const auto& in : inputs) {
    if (!in.valid()) continue;
    if (&in.graph() != this) throw ConfigError(std::string(op) + ": input recorded on another graph");
    if (nodes_.at(in.id()).requires_grad) n.requires_grad = true;
  }
  if (n.requires_grad) n.backward = std::move(backward);
  return push(std::move(n));
}

template <typename T>
const Tensor<T>& Graph<T>::value(std::size_t id) const {
  ensure_live();
  return nodes_.at(id).value;
}

template <typename T>
std::span<T> Graph<T>::grad_buffer(std::size_t id) {
  auto& n = nodes_.at(id);
  if (n.grad.empty()) n.grad.assign(n.value.size(), T(0));
  return n.grad;
}

template <typename T>
std::span<const T> Graph<T>::grad(Var<T> v) const {
  return nodes_.at(v.id()).grad;
}

template <typename T>
void Graph<T>::backward(Var<T> loss, bool retain) {
  ensure_live();
  if (&loss.graph() != this) throw ConfigError("backward: loss belongs to another graph");
  if (nodes_.at(loss.id()).value.size() != 1) {
    throw DimensionError("backward: loss must be a scalar, got " +
                         to_string(nodes_.at(loss.id()).value.shape()));
  }
  if (!nodes_[loss.id()].requires_grad) return;
  // Seed replaces rather than adds so a retained graph can be replayed.
  grad_buffer(loss.id())[0] = T(1);
  for (std::size_t i = loss.id() + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.requires_grad || n.grad.empty()) continue;
    check_finite<T>(n.grad, n.op);
    if (n.param) {
      n.param->enable_grad();
      auto dst = n.param->grad();
      for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += n.grad[k];
    }
    if (n.backward) n.backward(*this, i);
  }
  if (retain) {
    for (auto& n : nodes_) {
      if (!n.leaf || n.param) std::fill(n.grad.begin(), n.grad.end(), T(0));
    }
    return;
  }
  for (auto& n : nodes_) {
    n.backward = nullptr;
    if (!n.leaf) {
      n.value = Tensor<T>();
      n.grad.clear();
    }
  }
  freed_ = true;
}

template class Graph<float>;
template class Graph<double>;

}  // namespace artgan::nd
