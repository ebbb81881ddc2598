#pragma once

#include <cstdint>
#include <vector>

#include "specmix/tensor.hpp"

namespace specmix::ad {

struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t t = 0;
  std::vector<std::vector<double>> m;  // first moments, one per parameter
  std::vector<std::vector<double>> v;  // second moments
};

// One bias-corrected Adam update of every parameter from its accumulated
// gradient. Parameters with no gradient yet are treated as g = 0.
void adam_step(std::vector<Tensor>& params, AdamState& state, double learning_rate);

class Adam {
 public:
  explicit Adam(std::vector<Tensor> params, double beta1 = 0.9, double beta2 = 0.999, double epsilon = 1e-8);

  void zero_grad();
  void step(double learning_rate) { adam_step(params_, state_, learning_rate); }

  const AdamState& state() const { return state_; }
  const std::vector<Tensor>& params() const { return params_; }

 private:
  std::vector<Tensor> params_;
  AdamState state_;
};

}  // namespace specmix::ad
