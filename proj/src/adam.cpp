#include "specmix/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace specmix::ad {

void adam_step(std::vector<Tensor>& params, AdamState& state, double learning_rate) {
  if (!(learning_rate > 0.0)) throw std::invalid_argument("adam: learning rate must be positive");
  if (state.m.empty()) {
    for (const auto& p : params) {
      state.m.emplace_back(p.numel(), 0.0);
      state.v.emplace_back(p.numel(), 0.0);
    }
  }
  if (state.m.size() != params.size()) throw ShapeError("adam: parameter count changed between steps");

  ++state.t;
  const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& m = state.m[i];
    auto& v = state.v[i];
    if (m.size() != params[i].numel()) throw ShapeError("adam: moment shape differs from parameter");
    auto x = params[i].mutable_data();
    const auto g = params[i].grad();
    for (std::size_t j = 0; j < x.size(); ++j) {
      const double gj = g.empty() ? 0.0 : g[j];
      m[j] = state.beta1 * m[j] + (1.0 - state.beta1) * gj;
      v[j] = state.beta2 * v[j] + (1.0 - state.beta2) * gj * gj;
      x[j] -= learning_rate * (m[j] / c1) / (std::sqrt(v[j] / c2) + state.epsilon);
    }
  }
}

Adam::Adam(std::vector<Tensor> params, double beta1, double beta2, double epsilon) : params_(std::move(params)) {
  state_.beta1 = beta1;
  state_.beta2 = beta2;
  state_.epsilon = epsilon;
}

void Adam::zero_grad() {
  for (auto& p : params_) p.zero_grad();
}

}  // namespace specmix::ad
