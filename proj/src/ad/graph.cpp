#include "lsmgan/ad/graph.hpp"

#include <cmath>
#include <unordered_set>

#include "lsmgan/error.hpp"

namespace lsmgan::ad {

std::size_t numel(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

std::string shape_string(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

template <class Real>
Var<Real> constant(Shape shape, std::vector<Real> value) {
  if (numel(shape) != value.size())
    throw Error(ErrorCode::ShapeMismatch, "constant: buffer does not match " + shape_string(shape));
  auto n = std::make_shared<Node<Real>>();
  n->shape = std::move(shape);
  n->value = std::move(value);
  n->op = "constant";
  return n;
}

template <class Real>
Var<Real> parameter(Shape shape, std::vector<Real> value, std::string name) {
  auto n = constant<Real>(std::move(shape), std::move(value));
  n->requires_grad = true;
  n->op = std::move(name);
  return n;
}

template <class Real>
Var<Real> make_node(std::string op, Shape shape, std::vector<Real> value,
                    std::vector<Var<Real>> parents) {
  auto n = std::make_shared<Node<Real>>();
  n->shape = std::move(shape);
  n->value = std::move(value);
  n->op = std::move(op);
  for (const auto& p : parents) n->requires_grad = n->requires_grad || p->requires_grad;
  n->parents = std::move(parents);
  return n;
}

template <class Real>
std::vector<Node<Real>*> topological_order(const Var<Real>& root) {
  std::vector<Node<Real>*> order;
  std::unordered_set<Node<Real>*> seen;
  // Iterative DFS: deep generator stacks must not exhaust the call stack.
  std::vector<std::pair<Node<Real>*, std::size_t>> stack{{root.get(), 0}};
  seen.insert(root.get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node<Real>* parent = node->parents[next++].get();
      if (seen.insert(parent).second) stack.emplace_back(parent, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  return order;
}

template <class Real>
void backward(const Var<Real>& loss) {
  if (loss->size() != 1)
    throw Error(ErrorCode::NonScalarLoss, "loss has shape " + shape_string(loss->shape));
  if (!std::isfinite(static_cast<double>(loss->value[0])))
    throw Error(ErrorCode::NumericalError, "loss is not finite");
  if (!loss->requires_grad) return;
  auto order = topological_order(loss);
  for (Node<Real>* n : order)
    if (!n->parents.empty()) n->grad.assign(n->value.size(), Real(0));
  loss->grad_data()[0] += Real(1);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node<Real>* n = *it;
    if (n->requires_grad && n->backward_rule) n->backward_rule(*n);
  }
  for (Node<Real>* n : order) {
    if (!n->parents.empty()) {
      // Interior buffers are dead after the sweep.
      std::vector<Real>().swap(n->grad);
      continue;
    }
    if (!n->requires_grad) continue;
    for (Real g : n->grad)
      if (!std::isfinite(static_cast<double>(g)))
        throw Error(ErrorCode::NumericalError, "non-finite gradient in " + n->op);
  }
}

template <class Real>
void zero_grad(std::span<const Var<Real>> params) {
  for (const auto& p : params) std::fill(p->grad.begin(), p->grad.end(), Real(0));
}

template <class Real>
std::size_t count_ops(const Var<Real>& root, std::string_view op) {
  std::size_t count = 0;
  for (Node<Real>* n : topological_order(root))
    if (n->op == op) ++count;
  return count;
}

template <class Real>
void check_finite(const Var<Real>& v, std::string_view context) {
  for (Real x : v->value)
    if (!std::isfinite(static_cast<double>(x)))
      throw Error(ErrorCode::NumericalError, "non-finite value in " + std::string(context));
}

#define LSMGAN_INSTANTIATE(Real)                                                               \
  template Var<Real> constant<Real>(Shape, std::vector<Real>);                                 \
  template Var<Real> parameter<Real>(Shape, std::vector<Real>, std::string);                   \
  template Var<Real> make_node<Real>(std::string, Shape, std::vector<Real>,                    \
                                     std::vector<Var<Real>>);                                  \
  template std::vector<Node<Real>*> topological_order<Real>(const Var<Real>&);                 \
  template void backward<Real>(const Var<Real>&);                                              \
  template void zero_grad<Real>(std::span<const Var<Real>>);                                   \
  template std::size_t count_ops<Real>(const Var<Real>&, std::string_view);                    \
  template void check_finite<Real>(const Var<Real>&, std::string_view);

LSMGAN_INSTANTIATE(float)
LSMGAN_INSTANTIATE(double)
#undef LSMGAN_INSTANTIATE

}  // namespace lsmgan::ad
