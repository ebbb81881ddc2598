#pragma once

#include <vector>

#include "specmix/tensor.hpp"

namespace specmix::ad {

// Lower clamp bound used by acos(): |x| <= 1 - kAcosClamp.
inline constexpr double kAcosClamp = 1e-7;
// Below this |det| the determinant's gradient is reported as zero.
inline constexpr double kDetGradFloor = 1e-12;

// Linear algebra. matmul is rank-2; bmm multiplies matching batches of
// rank-3 tensors. transpose swaps the last two axes of a rank-2/3 tensor.
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor bmm(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);
Tensor reshape(const Tensor& a, Shape shape);
Tensor concat(const std::vector<Tensor>& parts, std::size_t axis);
Tensor det(const Tensor& a);

// Elementwise. For add/sub/mul the right operand may also match the trailing
// dims of the left one (broadcast over the leading axes, e.g. a bias row).
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);
Tensor add_scalar(const Tensor& a, double value);
Tensor neg(const Tensor& a);
Tensor relu(const Tensor& a);
Tensor square(const Tensor& a);
Tensor sqrt(const Tensor& a);
Tensor abs(const Tensor& a);
Tensor acos(const Tensor& a);

// Softmax over the last axis.
Tensor softmax(const Tensor& a);

// Reductions.
Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);
// Sums the last axis away: [.., n] -> [..]; a rank-1 input gives a scalar.
Tensor sum_last(const Tensor& a);

inline Tensor operator+(const Tensor& a, const Tensor& b) { return add(a, b); }
inline Tensor operator-(const Tensor& a, const Tensor& b) { return sub(a, b); }
inline Tensor operator*(const Tensor& a, const Tensor& b) { return mul(a, b); }
inline Tensor operator*(const Tensor& a, double s) { return scale(a, s); }
inline Tensor operator*(double s, const Tensor& a) { return scale(a, s); }

}  // namespace specmix::ad
