#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "cgrp/tensor.hpp"

namespace cgrp {

struct Node;
using NodePtr = std::shared_ptr<Node>;

/// One vertex of the backward tape.
struct Node {
  Tensor value;
  Tensor grad;  // lazily allocated, same shape as value
  bool requires_grad = false;
  std::vector<NodePtr> parents;
  /// Reads this->grad and accumulates into the parents' grads.
  std::function<void(Node&)> backward_fn;

  Tensor& ensure_grad();
};

/// Handle to a node in the computation graph. Cheap to copy.
class Var {
 public:
  Var() = default;

  /// Leaf that does not participate in differentiation.
  static Var constant(Tensor value);
  /// Leaf with requires_grad set (parameters, probed inputs).
  static Var leaf(Tensor value);

  bool defined() const { return node_ != nullptr; }
  const Tensor& value() const { return node_->value; }
  Tensor& mutable_value() { return node_->value; }
  const Shape& shape() const { return node_->value.shape(); }
  int64_t numel() const { return node_->value.numel(); }
  double item() const { return node_->value.item(); }

  bool requires_grad() const { return node_->requires_grad; }
  /// Gradient accumulated by the last backward(); zeros if untouched.
  const Tensor& grad() const;
  void zero_grad();

  /// Same value, detached from the graph (stops gradient flow).
  Var detach() const { return constant(node_->value); }

  NodePtr node() const { return node_; }
  static Var from_node(NodePtr n);

 private:
  NodePtr node_;
};

/// Builds an interior node. requires_grad is inherited from the parents.
Var make_op(Tensor value, std::vector<Var> parents, std::function<void(Node&)> backward_fn);

/// Reverse-mode sweep from a scalar root. Each reachable node's grad is
/// accumulated; leaf grads persist until zero_grad().
void backward(const Var& root);

}  // namespace cgrp
