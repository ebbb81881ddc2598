#include "specmix/attention.hpp"

#include <cmath>
#include <string>

#include "specmix/ops.hpp"

namespace specmix::ad {
namespace {

Tensor uniform_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(rows));
  std::uniform_real_distribution<double> dist(-bound, bound);
  std::vector<double> data(rows * cols);
  for (auto& v : data) v = dist(rng);
  return Tensor::from({rows, cols}, std::move(data), true);
}

// Applies a d_model x d_out projection to the last axis of a rank-2/3 tensor.
Tensor project(const Tensor& x, const Tensor& w) {
  if (x.rank() == 2) return matmul(x, w);
  const std::size_t b = x.dim(0), n = x.dim(1), d = x.dim(2);
  Tensor flat = matmul(reshape(x, {b * n, d}), w);
  return reshape(flat, {b, n, w.dim(1)});
}

void check_attention_shapes(const Tensor& q, const Tensor& k) {
  if (q.rank() != k.rank() || (q.rank() != 2 && q.rank() != 3)) {
    throw ShapeError("attention: Q and K must both be rank 2 or rank 3");
  }
  if (q.numel() == 0 || k.numel() == 0) throw ShapeError("attention: zero-dimension input");
  if (q.shape().back() != k.shape().back()) {
    throw ShapeError("attention: d_k differs between Q " + shape_str(q.shape()) + " and K " + shape_str(k.shape()));
  }
  if (q.rank() == 3 && q.dim(0) != k.dim(0)) throw ShapeError("attention: batch sizes differ");
}

}  // namespace

Tensor attention_weights(const Tensor& q, const Tensor& k) {
  check_attention_shapes(q, k);
  const double inv_sqrt_dk = 1.0 / std::sqrt(static_cast<double>(q.shape().back()));
  Tensor scores = q.rank() == 2 ? matmul(q, transpose(k)) : bmm(q, transpose(k));
  return softmax(scale(scores, inv_sqrt_dk));
}

Tensor scaled_dot_attention(const Tensor& q, const Tensor& k, const Tensor& v) {
  if (v.rank() != k.rank() || v.numel() == 0) throw ShapeError("attention: V must match K's rank and be nonempty");
  const std::size_t axis = k.rank() - 2;
  if (v.dim(axis) != k.dim(axis)) throw ShapeError("attention: K and V row counts differ");
  Tensor w = attention_weights(q, k);
  return q.rank() == 2 ? matmul(w, v) : bmm(w, v);
}

MultiHeadParams MultiHeadParams::random(std::size_t d_model, std::size_t heads, std::mt19937_64& rng) {
  if (heads == 0 || d_model % heads != 0) {
    throw ShapeError("multi-head attention: " + std::to_string(heads) + " heads do not divide d_model " +
                     std::to_string(d_model));
  }
  MultiHeadParams p;
  p.d_model = d_model;
  p.heads = heads;
  p.d_head = d_model / heads;
  for (std::size_t h = 0; h < heads; ++h) {
    p.wq.push_back(uniform_matrix(d_model, p.d_head, rng));
    p.wk.push_back(uniform_matrix(d_model, p.d_head, rng));
    p.wv.push_back(uniform_matrix(d_model, p.d_head, rng));
  }
  p.wo = uniform_matrix(heads * p.d_head, d_model, rng);
  return p;
}

MultiHeadParams MultiHeadParams::identity(std::size_t d_model, std::size_t heads) {
  if (heads == 0 || d_model % heads != 0) {
    throw ShapeError("multi-head attention: " + std::to_string(heads) + " heads do not divide d_model " +
                     std::to_string(d_model));
  }
  MultiHeadParams p;
  p.d_model = d_model;
  p.heads = heads;
  p.d_head = d_model / heads;
  for (std::size_t h = 0; h < heads; ++h) {
    Tensor slice = Tensor::zeros({d_model, p.d_head}, true);
    auto d = slice.mutable_data();
    for (std::size_t j = 0; j < p.d_head; ++j) d[(h * p.d_head + j) * p.d_head + j] = 1.0;
    p.wq.push_back(slice.detach(true));
    p.wk.push_back(slice.detach(true));
    p.wv.push_back(slice.detach(true));
  }
  p.wo = Tensor::identity(d_model, true);
  return p;
}

std::vector<Tensor> MultiHeadParams::parameters() const {
  std::vector<Tensor> out;
  for (std::size_t h = 0; h < heads; ++h) {
    out.push_back(wq[h]);
    out.push_back(wk[h]);
    out.push_back(wv[h]);
  }
  out.push_back(wo);
  return out;
}

void MultiHeadParams::set_requires_grad(bool on) {
  for (auto& t : parameters()) t.set_requires_grad(on);
}

std::size_t default_head_count(std::size_t d_model, std::size_t max_heads) {
  for (std::size_t h = std::min(max_heads, d_model); h > 1; --h) {
    if (d_model % h == 0) return h;
  }
  return 1;
}

Tensor multi_head_attention(const MultiHeadParams& p, const Tensor& q, const Tensor& k, const Tensor& v) {
  if (p.heads == 0 || p.wq.size() != p.heads) throw ShapeError("multi-head attention: uninitialised parameters");
  for (const Tensor* t : {&q, &k, &v}) {
    if (t->rank() < 2 || t->shape().back() != p.d_model) {
      throw ShapeError("multi-head attention: input " + shape_str(t->shape()) + " does not end in d_model " +
                       std::to_string(p.d_model));
    }
  }
  std::vector<Tensor> heads;
  heads.reserve(p.heads);
  for (std::size_t h = 0; h < p.heads; ++h) {
    heads.push_back(scaled_dot_attention(project(q, p.wq[h]), project(k, p.wk[h]), project(v, p.wv[h])));
  }
  Tensor joined = p.heads == 1 ? heads.front() : concat(heads, heads.front().rank() - 1);
  return project(joined, p.wo);
}

}  // namespace specmix::ad
