#pragma once

// Reference implementations used only by the tests. Plain loops over
// std::vector, no Eigen, no tape.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

#include "specmix/attention.hpp"
#include "specmix/tensor.hpp"

namespace oracle {

using Mat = std::vector<std::vector<double>>;

inline Mat to_mat(const specmix::ad::Tensor& t) {
  Mat m(t.dim(0), std::vector<double>(t.dim(1)));
  for (std::size_t i = 0; i < t.dim(0); ++i)
    for (std::size_t j = 0; j < t.dim(1); ++j) m[i][j] = t.at(i, j);
  return m;
}

inline Mat matmul(const Mat& a, const Mat& b) {
  Mat c(a.size(), std::vector<double>(b[0].size(), 0.0));
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b[0].size(); ++j)
      for (std::size_t k = 0; k < b.size(); ++k) c[i][j] += a[i][k] * b[k][j];
  return c;
}

inline Mat transpose(const Mat& a) {
  Mat t(a[0].size(), std::vector<double>(a.size()));
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < a[0].size(); ++j) t[j][i] = a[i][j];
  return t;
}

inline std::vector<double> softmax(std::vector<double> x) {
  const double top = *std::max_element(x.begin(), x.end());
  double total = 0.0;
  for (auto& v : x) total += (v = std::exp(v - top));
  for (auto& v : x) v /= total;
  return x;
}

// softmax(Q K^T / sqrt(d)) V, one query row at a time.
inline Mat attention(const Mat& q, const Mat& k, const Mat& v) {
  const double d = static_cast<double>(q[0].size());
  Mat out;
  for (const auto& qi : q) {
    std::vector<double> scores;
    for (const auto& kj : k) {
      double s = 0.0;
      for (std::size_t t = 0; t < qi.size(); ++t) s += qi[t] * kj[t];
      scores.push_back(s / std::sqrt(d));
    }
    const auto w = softmax(scores);
    std::vector<double> row(v[0].size(), 0.0);
    for (std::size_t j = 0; j < v.size(); ++j)
      for (std::size_t t = 0; t < row.size(); ++t) row[t] += w[j] * v[j][t];
    out.push_back(row);
  }
  return out;
}

// Concat_h Attention(Q Wq_h, K Wk_h, V Wv_h) W^O, spelled out head by head.
inline Mat multi_head(const specmix::ad::MultiHeadParams& p, const Mat& q, const Mat& k, const Mat& v) {
  Mat concat(q.size());
  for (std::size_t h = 0; h < p.heads; ++h) {
    const Mat head = attention(matmul(q, to_mat(p.wq[h])), matmul(k, to_mat(p.wk[h])), matmul(v, to_mat(p.wv[h])));
    for (std::size_t i = 0; i < q.size(); ++i) concat[i].insert(concat[i].end(), head[i].begin(), head[i].end());
  }
  return matmul(concat, to_mat(p.wo));
}

// Leibniz expansion; fine for n <= 5.
inline double det(const Mat& a) {
  const std::size_t n = a.size();
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  double total = 0.0;
  do {
    int inversions = 0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) inversions += perm[i] > perm[j];
    double term = inversions % 2 ? -1.0 : 1.0;
    for (std::size_t i = 0; i < n; ++i) term *= a[i][perm[i]];
    total += term;
  } while (std::next_permutation(perm.begin(), perm.end()));
  return total;
}

inline double factorial(std::size_t n) { return n <= 1 ? 1.0 : static_cast<double>(n) * factorial(n - 1); }

// Lowest-cost assignment by trying every permutation; result[i] = column of row i.
inline std::vector<std::size_t> brute_force_assignment(const std::vector<std::vector<double>>& cost) {
  std::vector<std::size_t> perm(cost.size()), best;
  std::iota(perm.begin(), perm.end(), 0);
  double best_cost = std::numeric_limits<double>::infinity();
  do {
    double c = 0.0;
    for (std::size_t i = 0; i < perm.size(); ++i) c += cost[i][perm[i]];
    if (c < best_cost) {
      best_cost = c;
      best = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

inline double angle(const std::vector<double>& a, const std::vector<double>& b) {
  double ab = 0.0, aa = 0.0, bb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  return std::acos(std::clamp(ab / std::sqrt(aa * bb), -1.0, 1.0));
}

// Barycentric weights of x in the affine span of rows p (least squares via
// normal equations with the sum-to-one row appended; small dense solve).
inline std::vector<double> barycentric(const Mat& p, const std::vector<double>& x) {
  const std::size_t n = p.size(), d = x.size();
  // Minimise |sum_i w_i p_i - x|^2 + big*(sum w - 1)^2.
  const double big = 1e6;
  Mat a(n, std::vector<double>(n + 1, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double s = big;
      for (std::size_t t = 0; t < d; ++t) s += p[i][t] * p[j][t];
      a[i][j] = s;
    }
    double r = big;
    for (std::size_t t = 0; t < d; ++t) r += p[i][t] * x[t];
    a[i][n] = r;
  }
  // Gaussian elimination with partial pivoting.
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < n; ++r)
      if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
    std::swap(a[c], a[piv]);
    for (std::size_t r = 0; r < n; ++r) {
      if (r == c) continue;
      const double f = a[r][c] / a[c][c];
      for (std::size_t k = c; k <= n; ++k) a[r][k] -= f * a[c][k];
    }
  }
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) w[i] = a[i][n] / a[i][i];
  return w;
}

// Central finite differences of f() with respect to every entry of params,
// compared against the tape gradients. Returns the worst
// |analytic - numeric| / max(|analytic|, |numeric|, floor).
inline double gradient_error(const std::function<specmix::ad::Tensor()>& f, std::vector<specmix::ad::Tensor> params,
                             double step = 1e-5, double floor = 1e-3) {
  for (auto& p : params) p.zero_grad();
  specmix::ad::backward(f());
  std::vector<std::vector<double>> analytic;
  for (auto& p : params) {
    auto g = p.grad();
    analytic.emplace_back(g.begin(), g.end());
    if (analytic.back().empty()) analytic.back().assign(p.numel(), 0.0);
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto data = params[i].mutable_data();
    for (std::size_t j = 0; j < data.size(); ++j) {
      const double keep = data[j];
      data[j] = keep + step;
      const double up = f().item();
      data[j] = keep - step;
      const double down = f().item();
      data[j] = keep;
      const double numeric = (up - down) / (2.0 * step);
      const double a = analytic[i][j];
      const double err = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), floor});
      worst = std::max(worst, err);
    }
  }
  return worst;
}

inline specmix::ad::Tensor random_tensor(specmix::ad::Shape shape, std::mt19937_64& rng, double lo = -1.0,
                                         double hi = 1.0, bool requires_grad = true) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> data(specmix::ad::numel_of(shape));
  for (auto& v : data) v = u(rng);
  return specmix::ad::Tensor::from(std::move(shape), std::move(data), requires_grad);
}

}  // namespace oracle
