#include "specmix/ops.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <utility>

namespace specmix::ad {
namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMat>;
using MutMap = Eigen::Map<RowMat>;

using BackwardFn = std::function<void(Node&)>;

Tensor make_result(const char* op, Shape shape, std::vector<double> value, std::initializer_list<Tensor> inputs,
                   BackwardFn fn) {
  for (double v : value) {
    if (!std::isfinite(v)) throw NumericError(std::string("non-finite result in ") + op);
  }
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->value = std::move(value);
  node->op = op;
  bool needs = false;
  for (const auto& t : inputs) needs = needs || t.requires_grad();
  if (needs) {
    node->requires_grad = true;
    for (const auto& t : inputs) node->inputs.push_back(t.node_ptr());
    node->backward_fn = std::move(fn);
  }
  return Tensor(std::move(node));
}

Tensor make_result_n(const char* op, Shape shape, std::vector<double> value, const std::vector<Tensor>& inputs,
                     BackwardFn fn) {
  for (double v : value) {
    if (!std::isfinite(v)) throw NumericError(std::string("non-finite result in ") + op);
  }
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->value = std::move(value);
  node->op = op;
  bool needs = false;
  for (const auto& t : inputs) needs = needs || t.requires_grad();
  if (needs) {
    node->requires_grad = true;
    for (const auto& t : inputs) node->inputs.push_back(t.node_ptr());
    node->backward_fn = std::move(fn);
  }
  return Tensor(std::move(node));
}

void require(bool ok, const std::string& msg) {
  if (!ok) throw ShapeError(msg);
}

// b either has a's shape or equals a's trailing dims.
std::size_t broadcast_period(const Tensor& a, const Tensor& b, const char* op) {
  const auto& sa = a.shape();
  const auto& sb = b.shape();
  bool ok = sb.size() <= sa.size() && std::equal(sb.rbegin(), sb.rend(), sa.rbegin());
  require(ok, std::string(op) + ": cannot combine " + shape_str(sa) + " with " + shape_str(sb));
  return b.numel();
}

template <typename Fwd, typename Dfdx>
Tensor unary(const char* op, const Tensor& a, Fwd fwd, Dfdx dfdx) {
  const auto x = a.data();
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = fwd(x[i]);
  return make_result(op, a.shape(), std::move(out), {a}, [dfdx](Node& self) {
    auto& in = *self.inputs[0];
    if (!in.requires_grad) return;
    for (std::size_t i = 0; i < in.value.size(); ++i) in.grad[i] += self.grad[i] * dfdx(in.value[i], self.value[i]);
  });
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  require(a.rank() == 2 && b.rank() == 2, "matmul: rank-2 operands required, got " + shape_str(a.shape()) + " and " +
                                              shape_str(b.shape()));
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  require(b.dim(0) == k, "matmul: inner dims differ: " + shape_str(a.shape()) + " x " + shape_str(b.shape()));
  std::vector<double> out(m * n);
  MutMap(out.data(), m, n).noalias() = ConstMap(a.data().data(), m, k) * ConstMap(b.data().data(), k, n);
  return make_result("matmul", {m, n}, std::move(out), {a, b}, [m, k, n](Node& self) {
    auto& A = *self.inputs[0];
    auto& B = *self.inputs[1];
    ConstMap g(self.grad.data(), m, n);
    if (A.requires_grad) MutMap(A.grad.data(), m, k).noalias() += g * ConstMap(B.value.data(), k, n).transpose();
    if (B.requires_grad) MutMap(B.grad.data(), k, n).noalias() += ConstMap(A.value.data(), m, k).transpose() * g;
  });
}

Tensor bmm(const Tensor& a, const Tensor& b) {
  require(a.rank() == 3 && b.rank() == 3, "bmm: rank-3 operands required");
  const std::size_t batch = a.dim(0), m = a.dim(1), k = a.dim(2), n = b.dim(2);
  require(b.dim(0) == batch && b.dim(1) == k,
          "bmm: incompatible " + shape_str(a.shape()) + " x " + shape_str(b.shape()));
  std::vector<double> out(batch * m * n);
  const double* pa = a.data().data();
  const double* pb = b.data().data();
  for (std::size_t i = 0; i < batch; ++i) {
    MutMap(out.data() + i * m * n, m, n).noalias() =
        ConstMap(pa + i * m * k, m, k) * ConstMap(pb + i * k * n, k, n);
  }
  return make_result("bmm", {batch, m, n}, std::move(out), {a, b}, [batch, m, k, n](Node& self) {
    auto& A = *self.inputs[0];
    auto& B = *self.inputs[1];
    for (std::size_t i = 0; i < batch; ++i) {
      ConstMap g(self.grad.data() + i * m * n, m, n);
      if (A.requires_grad) {
        MutMap(A.grad.data() + i * m * k, m, k).noalias() += g * ConstMap(B.value.data() + i * k * n, k, n).transpose();
      }
      if (B.requires_grad) {
        MutMap(B.grad.data() + i * k * n, k, n).noalias() += ConstMap(A.value.data() + i * m * k, m, k).transpose() * g;
      }
    }
  });
}

Tensor transpose(const Tensor& a) {
  require(a.rank() == 2 || a.rank() == 3, "transpose: rank-2 or rank-3 tensor required");
  const bool batched = a.rank() == 3;
  const std::size_t batch = batched ? a.dim(0) : 1;
  const std::size_t r = a.dim(a.rank() - 2), c = a.dim(a.rank() - 1);
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < batch; ++i) {
    MutMap(out.data() + i * r * c, c, r) = ConstMap(a.data().data() + i * r * c, r, c).transpose();
  }
  Shape shape = batched ? Shape{batch, c, r} : Shape{c, r};
  return make_result("transpose", std::move(shape), std::move(out), {a}, [batch, r, c](Node& self) {
    auto& A = *self.inputs[0];
    for (std::size_t i = 0; i < batch; ++i) {
      MutMap(A.grad.data() + i * r * c, r, c) += ConstMap(self.grad.data() + i * r * c, c, r).transpose();
    }
  });
}

Tensor reshape(const Tensor& a, Shape shape) {
  require(numel_of(shape) == a.numel(), "reshape: " + shape_str(a.shape()) + " -> " + shape_str(shape));
  std::vector<double> out(a.data().begin(), a.data().end());
  return make_result("reshape", std::move(shape), std::move(out), {a}, [](Node& self) {
    auto& A = *self.inputs[0];
    for (std::size_t i = 0; i < A.grad.size(); ++i) A.grad[i] += self.grad[i];
  });
}

Tensor concat(const std::vector<Tensor>& parts, std::size_t axis) {
  require(!parts.empty(), "concat: no inputs");
  const Shape& first = parts.front().shape();
  require(axis < first.size(), "concat: axis out of range");
  Shape shape = first;
  shape[axis] = 0;
  for (const auto& p : parts) {
    const auto& s = p.shape();
    require(s.size() == first.size(), "concat: rank mismatch");
    for (std::size_t d = 0; d < s.size(); ++d) {
      if (d != axis) require(s[d] == first[d], "concat: shape mismatch " + shape_str(first) + " vs " + shape_str(s));
    }
    shape[axis] += s[axis];
  }
  std::size_t outer = 1, inner = 1;
  for (std::size_t d = 0; d < axis; ++d) outer *= first[d];
  for (std::size_t d = axis + 1; d < first.size(); ++d) inner *= first[d];
  std::vector<std::size_t> chunk(parts.size());
  for (std::size_t p = 0; p < parts.size(); ++p) chunk[p] = parts[p].shape()[axis] * inner;
  const std::size_t row = shape[axis] * inner;

  std::vector<double> out(numel_of(shape));
  for (std::size_t o = 0; o < outer; ++o) {
    std::size_t offset = o * row;
    for (std::size_t p = 0; p < parts.size(); ++p) {
      auto src = parts[p].data().subspan(o * chunk[p], chunk[p]);
      std::copy(src.begin(), src.end(), out.begin() + static_cast<std::ptrdiff_t>(offset));
      offset += chunk[p];
    }
  }
  return make_result_n("concat", std::move(shape), std::move(out), parts, [outer, row, chunk](Node& self) {
    for (std::size_t o = 0; o < outer; ++o) {
      std::size_t offset = o * row;
      for (std::size_t p = 0; p < self.inputs.size(); ++p) {
        auto& in = *self.inputs[p];
        if (in.requires_grad) {
          for (std::size_t j = 0; j < chunk[p]; ++j) in.grad[o * chunk[p] + j] += self.grad[offset + j];
        }
        offset += chunk[p];
      }
    }
  });
}

Tensor det(const Tensor& a) {
  require(a.rank() == 2 && a.dim(0) == a.dim(1), "det: square matrix required, got " + shape_str(a.shape()));
  const std::size_t n = a.dim(0);
  const RowMat m = ConstMap(a.data().data(), n, n);
  Eigen::PartialPivLU<RowMat> lu(m);
  const double value = lu.determinant();
  return make_result("det", {}, {value}, {a}, [n, value, lu](Node& self) {
    if (std::abs(value) < kDetGradFloor) return;
    auto& A = *self.inputs[0];
    const RowMat inv_t = lu.inverse().transpose();
    MutMap(A.grad.data(), n, n) += (self.grad[0] * value) * inv_t;
  });
}

Tensor add(const Tensor& a, const Tensor& b) {
  const std::size_t period = broadcast_period(a, b, "add");
  const auto x = a.data();
  const auto y = b.data();
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] + y[i % period];
  return make_result("add", a.shape(), std::move(out), {a, b}, [period](Node& self) {
    auto& A = *self.inputs[0];
    auto& B = *self.inputs[1];
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      if (A.requires_grad) A.grad[i] += self.grad[i];
      if (B.requires_grad) B.grad[i % period] += self.grad[i];
    }
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  const std::size_t period = broadcast_period(a, b, "sub");
  const auto x = a.data();
  const auto y = b.data();
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] - y[i % period];
  return make_result("sub", a.shape(), std::move(out), {a, b}, [period](Node& self) {
    auto& A = *self.inputs[0];
    auto& B = *self.inputs[1];
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      if (A.requires_grad) A.grad[i] += self.grad[i];
      if (B.requires_grad) B.grad[i % period] -= self.grad[i];
    }
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  const std::size_t period = broadcast_period(a, b, "mul");
  const auto x = a.data();
  const auto y = b.data();
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] * y[i % period];
  return make_result("mul", a.shape(), std::move(out), {a, b}, [period](Node& self) {
    auto& A = *self.inputs[0];
    auto& B = *self.inputs[1];
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      if (A.requires_grad) A.grad[i] += self.grad[i] * B.value[i % period];
      if (B.requires_grad) B.grad[i % period] += self.grad[i] * A.value[i];
    }
  });
}

Tensor div(const Tensor& a, const Tensor& b) {
  require(a.shape() == b.shape(), "div: shape mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  const auto x = a.data();
  const auto y = b.data();
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] / y[i];
  return make_result("div", a.shape(), std::move(out), {a, b}, [](Node& self) {
    auto& A = *self.inputs[0];
    auto& B = *self.inputs[1];
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      if (A.requires_grad) A.grad[i] += self.grad[i] / B.value[i];
      if (B.requires_grad) B.grad[i] -= self.grad[i] * self.value[i] / B.value[i];
    }
  });
}

Tensor scale(const Tensor& a, double factor) {
  return unary("scale", a, [factor](double x) { return factor * x; }, [factor](double, double) { return factor; });
}

Tensor add_scalar(const Tensor& a, double value) {
  return unary("add_scalar", a, [value](double x) { return x + value; }, [](double, double) { return 1.0; });
}

Tensor neg(const Tensor& a) { return scale(a, -1.0); }

Tensor relu(const Tensor& a) {
  return unary("relu", a, [](double x) { return x > 0.0 ? x : 0.0; },
               [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Tensor square(const Tensor& a) {
  return unary("square", a, [](double x) { return x * x; }, [](double x, double) { return 2.0 * x; });
}

Tensor sqrt(const Tensor& a) {
  for (double v : a.data()) {
    if (v < 0.0) throw NumericError("sqrt of negative value");
  }
  return unary("sqrt", a, [](double x) { return std::sqrt(x); }, [](double, double y) { return 0.5 / y; });
}

Tensor abs(const Tensor& a) {
  return unary("abs", a, [](double x) { return std::abs(x); },
               [](double x, double) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); });
}

Tensor acos(const Tensor& a) {
  static constexpr double lo = -1.0 + kAcosClamp;
  static constexpr double hi = 1.0 - kAcosClamp;
  return unary("acos", a, [](double x) { return std::acos(std::clamp(x, lo, hi)); },
               [](double x, double) {
                 const double c = std::clamp(x, lo, hi);
                 return -1.0 / std::sqrt(1.0 - c * c);
               });
}

Tensor softmax(const Tensor& a) {
  require(a.rank() >= 1 && a.shape().back() > 0, "softmax: empty last axis");
  const std::size_t n = a.shape().back();
  const std::size_t rows = a.numel() / n;
  const auto x = a.data();
  std::vector<double> out(x.size());
  for (std::size_t r = 0; r < rows; ++r) {
    const double* xi = x.data() + r * n;
    double* yi = out.data() + r * n;
    const double mx = *std::max_element(xi, xi + n);
    double total = 0.0;
    for (std::size_t j = 0; j < n; ++j) total += (yi[j] = std::exp(xi[j] - mx));
    for (std::size_t j = 0; j < n; ++j) yi[j] /= total;
  }
  return make_result("softmax", a.shape(), std::move(out), {a}, [rows, n](Node& self) {
    auto& A = *self.inputs[0];
    for (std::size_t r = 0; r < rows; ++r) {
      const double* y = self.value.data() + r * n;
      const double* g = self.grad.data() + r * n;
      double dot = 0.0;
      for (std::size_t j = 0; j < n; ++j) dot += g[j] * y[j];
      for (std::size_t j = 0; j < n; ++j) A.grad[r * n + j] += y[j] * (g[j] - dot);
    }
  });
}

Tensor sum(const Tensor& a) {
  double total = 0.0;
  for (double v : a.data()) total += v;
  return make_result("sum", {}, {total}, {a}, [](Node& self) {
    auto& A = *self.inputs[0];
    for (auto& g : A.grad) g += self.grad[0];
  });
}

Tensor mean(const Tensor& a) {
  require(a.numel() > 0, "mean of empty tensor");
  return scale(sum(a), 1.0 / static_cast<double>(a.numel()));
}

Tensor sum_last(const Tensor& a) {
  require(a.rank() >= 1, "sum_last: rank-0 input");
  const std::size_t n = a.shape().back();
  const std::size_t rows = n == 0 ? 0 : a.numel() / n;
  Shape shape(a.shape().begin(), a.shape().end() - 1);
  std::vector<double> out(rows, 0.0);
  const auto x = a.data();
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t j = 0; j < n; ++j) out[r] += x[r * n + j];
  }
  return make_result("sum_last", std::move(shape), std::move(out), {a}, [rows, n](Node& self) {
    auto& A = *self.inputs[0];
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t j = 0; j < n; ++j) A.grad[r * n + j] += self.grad[r];
    }
  });
}

}  // namespace specmix::ad
