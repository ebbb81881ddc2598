#include "specmix/tensor.hpp"

#include <cmath>
#include <sstream>
#include <unordered_set>

namespace specmix::ad {

std::size_t numel_of(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) { return full(std::move(shape), 0.0, requires_grad); }

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
  auto node = std::make_shared<Node>();
  node->value.assign(numel_of(shape), value);
  node->shape = std::move(shape);
  node->requires_grad = requires_grad;
  return Tensor(std::move(node));
}

Tensor Tensor::from(Shape shape, std::vector<double> data, bool requires_grad) {
  if (numel_of(shape) != data.size()) {
    throw ShapeError("Tensor::from: " + std::to_string(data.size()) + " values for shape " + shape_str(shape));
  }
  for (double v : data) {
    if (!std::isfinite(v)) throw NumericError("Tensor::from: non-finite input value");
  }
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->value = std::move(data);
  node->requires_grad = requires_grad;
  return Tensor(std::move(node));
}

Tensor Tensor::scalar(double value, bool requires_grad) { return from({}, {value}, requires_grad); }

Tensor Tensor::identity(std::size_t n, bool requires_grad) {
  Tensor t = zeros({n, n}, requires_grad);
  auto d = t.mutable_data();
  for (std::size_t i = 0; i < n; ++i) d[i * n + i] = 1.0;
  return t;
}

Node& Tensor::node() const {
  if (!node_) throw std::logic_error("use of undefined Tensor");
  return *node_;
}

std::size_t Tensor::dim(std::size_t axis) const {
  const auto& s = shape();
  if (axis >= s.size()) throw ShapeError("dim: axis out of range for " + shape_str(s));
  return s[axis];
}

double Tensor::item() const {
  if (numel() != 1) throw ShapeError("item() on tensor of shape " + shape_str(shape()));
  return node().value[0];
}

double Tensor::at(std::size_t i, std::size_t j) const {
  const auto& s = shape();
  if (s.size() != 2) throw ShapeError("at(i, j) needs a rank-2 tensor");
  return node().value.at(i * s[1] + j);
}

void Tensor::zero_grad() {
  auto& n = node();
  if (!n.grad.empty()) std::fill(n.grad.begin(), n.grad.end(), 0.0);
}

Tensor Tensor::detach(bool requires_grad) const { return from(shape(), node().value, requires_grad); }

void backward(const Tensor& loss) {
  if (!loss.defined()) throw std::logic_error("backward on undefined tensor");
  if (loss.numel() != 1) throw ShapeError("backward needs a scalar loss, got " + shape_str(loss.shape()));
  if (!std::isfinite(loss.item())) throw NumericError("backward: loss is not finite");
  if (!loss.requires_grad()) return;

  // Iterative post-order DFS for the topological order.
  std::vector<Node*> order;
  std::unordered_set<Node*> seen;
  std::vector<std::pair<Node*, std::size_t>> stack;
  stack.emplace_back(loss.node_ptr().get(), 0);
  seen.insert(loss.node_ptr().get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->inputs.size()) {
      Node* child = node->inputs[next++].get();
      if (child->requires_grad && seen.insert(child).second) stack.emplace_back(child, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  for (Node* n : order) {
    if (n->backward_fn) {
      n->grad.assign(n->value.size(), 0.0);
    } else {
      n->ensure_grad();
    }
  }
  Node* root = loss.node_ptr().get();
  root->grad[0] += 1.0;

  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (!n->backward_fn) continue;
    for (double g : n->grad) {
      if (!std::isfinite(g)) throw NumericError(std::string("backward: non-finite gradient at ") + n->op);
    }
    for (auto& in : n->inputs) {
      if (in->requires_grad) in->ensure_grad();
    }
    n->backward_fn(*n);
  }
  for (Node* n : order) {
    if (n->backward_fn) continue;
    for (double g : n->grad) {
      if (!std::isfinite(g)) throw NumericError("backward: non-finite leaf gradient");
    }
  }
}

}  // namespace specmix::ad
