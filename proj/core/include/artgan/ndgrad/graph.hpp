#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <span>
#include <vector>

#include "artgan/ndgrad/tensor.hpp"

namespace artgan::nd {

template <typename T>
class Graph;

/// Handle to a value recorded on a Graph. Cheap to copy; only valid while
/// its graph is alive.
template <typename T>
class Var {
 public:
  Var() = default;
  Var(Graph<T>* graph, std::size_t id) : graph_(graph), id_(id) {}

  bool valid() const { return graph_ != nullptr; }
  Graph<T>& graph() const { return *graph_; }
  std::size_t id() const { return id_; }

  const Tensor<T>& value() const;
  const Shape& shape() const { return value().shape(); }
  bool requires_grad() const;

 private:
  Graph<T>* graph_ = nullptr;
  std::size_t id_ = 0;
};

/// Tape of op records for one forward pass.
///
/// Records are appended in execution order, which is a topological order,
/// so backward walks the tape in reverse and visits every record at most
/// once. Gradients into a record accumulate additively. Parameter leaves
/// bound with parameter() add their gradient into the bound tensor's grad
/// buffer, which is how repeated backward passes accumulate.
template <typename T>
class Graph {
 public:
  /// Propagates grad(self) into the grads of the record's inputs.
  using BackwardFn = std::function<void(Graph&, std::size_t self)>;

  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  /// Leaf that never receives gradient.
  Var<T> constant(Tensor<T> value);
  /// Leaf whose gradient is kept on the tape (read it back with grad()).
  Var<T> input(Tensor<T> value);
  /// Leaf bound to a trainable tensor; backward adds into param.grad().
  Var<T> parameter(Tensor<T>& param);

  /// Appends an op record. `inputs` decide whether the record needs
  /// gradient; when none do, `backward` is dropped.
  Var<T> record(const char* op, Tensor<T> value, std::initializer_list<Var<T>> inputs,
                BackwardFn backward);

  const Tensor<T>& value(std::size_t id) const;
  bool requires_grad(std::size_t id) const { return nodes_.at(id).requires_grad; }
  /// Gradient slot of a record, zero-allocated on first use.
  std::span<T> grad_buffer(std::size_t id);
  /// Gradient accumulated into `v`; empty if it never received any.
  std::span<const T> grad(Var<T> v) const;

  /// Seeds d(loss)/d(loss) = 1 and runs the tape backwards. Unless
  /// `retain` is set the tape's intermediate values are released afterwards
  /// and the graph cannot be used again.
  void backward(Var<T> loss, bool retain = false);

  std::size_t size() const { return nodes_.size(); }
  bool freed() const { return freed_; }
  const char* op_name(std::size_t id) const { return nodes_.at(id).op; }

 private:
  struct Node {
    const char* op = "";
    Tensor<T> value;
    std::vector<T> grad;
    BackwardFn backward;
    Tensor<T>* param = nullptr;
    bool requires_grad = false;
    bool leaf = false;
  };

  void ensure_live() const;
  Var<T> push(Node node);

  std::deque<Node> nodes_;
  bool freed_ = false;
};

template <typename T>
const Tensor<T>& Var<T>::value() const {
  return graph_->value(id_);
}

template <typename T>
bool Var<T>::requires_grad() const {
  return graph_->requires_grad(id_);
}

extern template class Graph<float>;
extern template class Graph<double>;

}  // namespace artgan::nd
