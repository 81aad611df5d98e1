#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace causal {

using Scalar = double;
using Shape = std::vector<std::size_t>;
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
using RowMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixMap = Eigen::Map<RowMatrix>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

std::size_t numel(const Shape& shape);
std::string to_string(const Shape& shape);

namespace detail {

struct Node {
  Shape shape;
  Vector value;
  Vector grad;  // empty until touched by backward
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  // Pushes this node's grad into its parents' grads.
  std::function<void(Node&)> backward;

  Vector& ensure_grad() {
    if (grad.size() != value.size()) grad = Vector::Zero(value.size());
    return grad;
  }
};

}  // namespace detail

/// Dense row-major n-d array of doubles with a gradient slot.
///
/// A Tensor is a cheap handle: copies share the same storage. Operations in
/// ops.hpp build a dynamic graph whenever an input requires gradients;
/// `backward` walks that graph in reverse topological order.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, Scalar value, bool requires_grad = false);
  static Tensor from(Shape shape, Vector values, bool requires_grad = false);
  static Tensor from(Shape shape, std::initializer_list<Scalar> values,
                     bool requires_grad = false);
  static Tensor scalar(Scalar value, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  std::size_t dim(std::size_t axis) const;
  std::size_t rank() const { return node_->shape.size(); }
  std::size_t size() const { return static_cast<std::size_t>(node_->value.size()); }

  const Vector& values() const { return node_->value; }
  Vector& values() { return node_->value; }
  Scalar item() const;
  Scalar operator[](std::size_t i) const { return node_->value[static_cast<Eigen::Index>(i)]; }

  /// Gradient accumulated by backward; zeros when never touched.
  Vector grad() const;
  bool has_grad() const { return node_->grad.size() == node_->value.size(); }
  void zero_grad();

  bool requires_grad() const { return node_->requires_grad; }
  void set_requires_grad(bool flag) { node_->requires_grad = flag; }

  /// Deep copy of values, detached from any graph.
  Tensor clone() const;

  // Graph construction hooks used by ops.
  static Tensor make_result(Shape shape, Vector value, std::vector<Tensor> inputs,
                            std::function<void(detail::Node&)> backward);
  detail::Node& node() const { return *node_; }
  const std::shared_ptr<detail::Node>& node_ptr() const { return node_; }

 private:
  explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}
  std::shared_ptr<detail::Node> node_;
};

/// Topologically ordered view of the graph feeding a root tensor.
class ComputeGraph {
 public:
  explicit ComputeGraph(const Tensor& root);
  const std::vector<detail::Node*>& nodes() const { return order_; }

 private:
  std::vector<detail::Node*> order_;  // inputs before consumers
};

/// Reverse-mode pass from a scalar root. Leaf gradients accumulate across
/// calls; intermediate gradients are recomputed each call.
void backward(const Tensor& root);

/// Disables graph recording on this thread while alive.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

  static bool active();

 private:
  bool previous_;
};

}  // namespace causal
