#include "specmix/objectives.hpp"

#include <cmath>
#include <stdexcept>

#include "specmix/ops.hpp"

namespace specmix {

void LossWeights::validate() const {
  for (double w : {mse, sad, nonneg, minvol}) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw std::invalid_argument("loss weights must be finite and >= 0");
  }
}

Tensor mse_loss(const Tensor& predicted, const Tensor& target) {
  if (predicted.shape() != target.shape()) throw ad::ShapeError("mse_loss: shape mismatch");
  if (predicted.numel() == 0) throw ad::ShapeError("mse_loss: empty input");
  return ad::mean(ad::square(ad::sub(predicted, target)));
}

Tensor sad_loss(const Tensor& predicted, const Tensor& target) {
  if (predicted.shape() != target.shape()) throw ad::ShapeError("sad_loss: shape mismatch");
  if (predicted.numel() == 0 || predicted.rank() == 0) throw ad::ShapeError("sad_loss: empty input");
  const Tensor p = predicted.rank() == 1 ? ad::reshape(predicted, {1, predicted.dim(0)}) : predicted;
  const Tensor t = target.rank() == 1 ? ad::reshape(target, {1, target.dim(0)}) : target;
  const std::size_t n = p.shape().back();
  for (const Tensor* x : {&p, &t}) {
    const auto d = x->data();
    for (std::size_t r = 0; r < d.size() / n; ++r) {
      double sq = 0.0;
      for (std::size_t j = 0; j < n; ++j) sq += d[r * n + j] * d[r * n + j];
      if (sq == 0.0) throw std::domain_error("sad_loss: zero-norm vector in row " + std::to_string(r));
    }
  }
  Tensor dot = ad::sum_last(ad::mul(p, t));
  Tensor norms = ad::mul(ad::sqrt(ad::sum_last(ad::square(p))), ad::sqrt(ad::sum_last(ad::square(t))));
  return ad::mean(ad::acos(ad::div(dot, norms)));
}

Tensor nonneg_loss(const Tensor& signatures) { return ad::sum(ad::square(ad::relu(ad::neg(signatures)))); }

Tensor minvol_loss(const Tensor& endmember_rows, double control_volume, const PcaProjection& proj) {
  if (!(control_volume >= 0.0)) throw std::invalid_argument("minvol_loss: control volume must be >= 0");
  return ad::relu(ad::add_scalar(simplex_volume(endmember_rows, proj), -control_volume));
}

StageLossTerms stage_loss(const Tensor& reconstructed, const Tensor& observed, const Tensor& endmember_rows,
                          const LossWeights& weights, Stage stage, std::optional<double> control_volume,
                          const PcaProjection* proj) {
  weights.validate();
  StageLossTerms terms;
  Tensor mse = mse_loss(reconstructed, observed);
  Tensor sad = sad_loss(reconstructed, observed);
  Tensor nonneg = nonneg_loss(endmember_rows);
  terms.mse = mse.item();
  terms.sad = sad.item();
  terms.nonneg = nonneg.item();
  Tensor total = ad::add(ad::add(ad::scale(mse, weights.mse), ad::scale(sad, weights.sad)),
                         ad::scale(nonneg, weights.nonneg));
  if (stage == Stage::Two) {
    if (!control_volume) throw std::invalid_argument("stage_loss: stage 2 requires a control volume");
    if (proj == nullptr) throw std::invalid_argument("stage_loss: stage 2 requires the PCA projection");
    Tensor volume = simplex_volume(endmember_rows, *proj);
    Tensor minvol = ad::relu(ad::add_scalar(volume, -*control_volume));
    terms.volume = volume.item();
    terms.minvol = minvol.item();
    total = ad::add(total, ad::scale(minvol, weights.minvol));
  }
  terms.total = total;
  return terms;
}

}  // namespace specmix
