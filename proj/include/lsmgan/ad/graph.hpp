#pragma once

// Minimal reverse-mode differentiation. A Var is a shared handle to a node
// holding a value buffer, a lazily allocated gradient buffer and the rule
// that pushes its gradient to its parents. Parameters are leaf nodes owned
// by the networks; every forward pass builds fresh interior nodes, and the
// graph is released when the last handle to the loss goes away.

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace lsmgan::ad {

using Shape = std::vector<std::size_t>;

std::size_t numel(const Shape& shape);
std::string shape_string(const Shape& shape);

template <class Real>
struct Node {
  Shape shape;
  std::vector<Real> value;
  std::vector<Real> grad;
  bool requires_grad = false;
  std::string op;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward_rule;

  std::size_t size() const { return value.size(); }
  /// Gradient buffer, zero-filled on first access.
  Real* grad_data() {
    if (grad.size() != value.size()) grad.assign(value.size(), Real(0));
    return grad.data();
  }
};

template <class Real>
using Var = std::shared_ptr<Node<Real>>;

template <class Real>
Var<Real> constant(Shape shape, std::vector<Real> value);

template <class Real>
Var<Real> parameter(Shape shape, std::vector<Real> value, std::string name = "param");

/// Interior node; requires_grad is inherited from the parents.
template <class Real>
Var<Real> make_node(std::string op, Shape shape, std::vector<Real> value,
                    std::vector<Var<Real>> parents);

/// Reverse sweep from a single-element loss. Interior gradients are reset
/// first; leaf (parameter) gradients accumulate across calls.
/// Throws NonScalarLoss for a multi-element loss and NumericalError when
/// the loss or a parameter gradient is not finite.
template <class Real>
void backward(const Var<Real>& loss);

template <class Real>
void zero_grad(std::span<const Var<Real>> params);

/// Nodes reachable from root, parents before children.
template <class Real>
std::vector<Node<Real>*> topological_order(const Var<Real>& root);

template <class Real>
std::size_t count_ops(const Var<Real>& root, std::string_view op);

/// Throws NumericalError when any value in the node is NaN or infinite.
template <class Real>
void check_finite(const Var<Real>& v, std::string_view context);

}  // namespace lsmgan::ad
