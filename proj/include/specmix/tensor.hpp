#pragma once

// Reverse-mode differentiable tensors.
//
// A Tensor is a shared handle onto a graph node. Operations in ops.hpp build
// new nodes that remember their inputs and a closure that pushes the output
// gradient back into those inputs. backward() walks the graph once in reverse
// topological order. Leaf tensors (parameters) accumulate gradients across
// calls until zero_grad().
//
// Storage is row-major float64. Every op checks that its result is finite and
// throws NumericError otherwise.

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace specmix::ad {

using Shape = std::vector<std::size_t>;

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::size_t numel_of(const Shape& shape);
std::string shape_str(const Shape& shape);

struct Node {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;  // empty until first needed
  bool requires_grad = false;
  const char* op = "leaf";
  std::vector<std::shared_ptr<Node>> inputs;
  // Pushes self.grad into inputs' grads. Must not capture the owning node.
  std::function<void(Node& self)> backward_fn;

  void ensure_grad() {
    if (grad.size() != value.size()) grad.assign(value.size(), 0.0);
  }
};

class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor from(Shape shape, std::vector<double> data, bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);
  static Tensor identity(std::size_t n, bool requires_grad = false);

  bool defined() const { return static_cast<bool>(node_); }
  const Shape& shape() const { return node().shape; }
  std::size_t rank() const { return node().shape.size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t numel() const { return node().value.size(); }

  std::span<const double> data() const { return node().value; }
  // Direct writes are only meaningful on leaves (parameters, inputs).
  std::span<double> mutable_data() { return node().value; }
  // Empty span if no gradient has reached this tensor.
  std::span<const double> grad() const { return node().grad; }

  double item() const;
  double at(std::size_t i) const { return node().value.at(i); }
  double at(std::size_t i, std::size_t j) const;

  bool requires_grad() const { return node().requires_grad; }
  void set_requires_grad(bool on) { node().requires_grad = on; }
  void zero_grad();

  // New leaf holding a copy of the value, with no history.
  Tensor detach(bool requires_grad = false) const;

  const std::shared_ptr<Node>& node_ptr() const { return node_; }
  explicit Tensor(std::shared_ptr<Node> node) : node_(std::move(node)) {}

 private:
  Node& node() const;
  std::shared_ptr<Node> node_;
};

// Runs reverse accumulation from a scalar loss. Leaf gradients accumulate;
// intermediate gradients are reset first so repeated calls are consistent.
void backward(const Tensor& loss);

}  // namespace specmix::ad
