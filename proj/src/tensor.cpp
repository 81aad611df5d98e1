#include "causal/tensor.hpp"

#include <unordered_set>
#include <utility>

namespace causal {

namespace {
thread_local bool g_no_grad = false;
}

std::size_t numel(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string to_string(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  return full(std::move(shape), 0.0, requires_grad);
}

Tensor Tensor::full(Shape shape, Scalar value, bool requires_grad) {
  auto n = static_cast<Eigen::Index>(numel(shape));
  return from(std::move(shape), Vector::Constant(n, value), requires_grad);
}

Tensor Tensor::from(Shape shape, Vector values, bool requires_grad) {
  if (numel(shape) != static_cast<std::size_t>(values.size())) {
    throw ShapeError("tensor shape " + to_string(shape) + " does not hold " +
                     std::to_string(values.size()) + " values");
  }
  auto node = std::make_shared<detail::Node>();
  node->shape = std::move(shape);
  node->value = std::move(values);
  node->requires_grad = requires_grad;
  return Tensor(std::move(node));
}

Tensor Tensor::from(Shape shape, std::initializer_list<Scalar> values, bool requires_grad) {
  Vector v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (auto x : values) v[i++] = x;
  return from(std::move(shape), std::move(v), requires_grad);
}

Tensor Tensor::scalar(Scalar value, bool requires_grad) {
  return from(Shape{}, Vector::Constant(1, value), requires_grad);
}

std::size_t Tensor::dim(std::size_t axis) const {
  if (axis >= rank()) {
    throw ShapeError("axis " + std::to_string(axis) + " out of range for shape " +
                     to_string(shape()));
  }
  return node_->shape[axis];
}

Scalar Tensor::item() const {
  if (size() != 1) throw ShapeError("item() on tensor of shape " + to_string(shape()));
  return node_->value[0];
}

Vector Tensor::grad() const {
  if (has_grad()) return node_->grad;
  return Vector::Zero(node_->value.size());
}

void Tensor::zero_grad() {
  node_->grad = Vector::Zero(node_->value.size());
}

Tensor Tensor::clone() const {
  return from(shape(), values(), requires_grad());
}

Tensor Tensor::make_result(Shape shape, Vector value, std::vector<Tensor> inputs,
                           std::function<void(detail::Node&)> backward) {
  Tensor out = from(std::move(shape), std::move(value));
  if (g_no_grad) return out;
  bool any = false;
  for (const auto& t : inputs) any = any || t.requires_grad();
  if (!any) return out;
  auto& node = out.node();
  node.requires_grad = true;
  node.parents.reserve(inputs.size());
  for (auto& t : inputs) node.parents.push_back(t.node_);
  node.backward = std::move(backward);
  return out;
}

ComputeGraph::ComputeGraph(const Tensor& root) {
  // Iterative post-order DFS.
  std::unordered_set<const detail::Node*> seen;
  std::vector<std::pair<detail::Node*, std::size_t>> stack;
  stack.emplace_back(&root.node(), 0);
  seen.insert(&root.node());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      detail::Node* parent = node->parents[next++].get();
      if (parent->requires_grad && seen.insert(parent).second) {
        stack.emplace_back(parent, 0);
      }
    } else {
      order_.push_back(node);
      stack.pop_back();
    }
  }
}

void backward(const Tensor& root) {
  if (root.size() != 1) {
    throw ShapeError("backward requires a scalar root, got shape " + to_string(root.shape()));
  }
  if (!root.requires_grad()) return;
  ComputeGraph graph(root);
  const auto& order = graph.nodes();
  for (auto* node : order) {
    if (node->backward) node->grad = Vector::Zero(node->value.size());
  }
  root.node().ensure_grad()[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    if ((*it)->backward) (*it)->backward(**it);
  }
}

NoGradGuard::NoGradGuard() : previous_(g_no_grad) { g_no_grad = true; }
NoGradGuard::~NoGradGuard() { g_no_grad = previous_; }
bool NoGradGuard::active() { return g_no_grad; }

}  // namespace causal
