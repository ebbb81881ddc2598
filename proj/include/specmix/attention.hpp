#pragma once

#include <cstddef>
#include <random>
#include <vector>

#include "specmix/tensor.hpp"

namespace specmix::ad {

// softmax(Q K^T / sqrt(d_k)) V.
// Accepts rank-2 operands (Q: n_q x d_k, K: n_k x d_k, V: n_k x d_v) or the
// same shapes with a shared leading batch axis.
Tensor scaled_dot_attention(const Tensor& q, const Tensor& k, const Tensor& v);

// Attention weights only, softmax(Q K^T / sqrt(d_k)); same shape rules.
Tensor attention_weights(const Tensor& q, const Tensor& k);

// Projections of one multi-head attention block. Head h uses
// wq[h], wk[h] (d_model x d_head) and wv[h] (d_model x d_head); the
// concatenated heads go through wo (heads*d_head x d_model).
struct MultiHeadParams {
  std::size_t d_model = 0;
  std::size_t heads = 0;
  std::size_t d_head = 0;
  std::vector<Tensor> wq, wk, wv;
  Tensor wo;

  // Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) on every projection.
  static MultiHeadParams random(std::size_t d_model, std::size_t heads, std::mt19937_64& rng);
  // Column slices of the identity for the per-head projections and an
  // identity output projection. With heads == 1 every matrix is I.
  static MultiHeadParams identity(std::size_t d_model, std::size_t heads);

  std::vector<Tensor> parameters() const;
  void set_requires_grad(bool on);
};

// Largest divisor of d_model that does not exceed max_heads.
std::size_t default_head_count(std::size_t d_model, std::size_t max_heads = 4);

// Concat(head_1..head_H) W^O with head_h = Attention(Q Wq_h, K Wk_h, V Wv_h).
// Inputs are rank-2 (n x d_model) or batched rank-3 (B x n x d_model).
Tensor multi_head_attention(const MultiHeadParams& p, const Tensor& q, const Tensor& k, const Tensor& v);

}  // namespace specmix::ad
