#pragma once

#include <optional>

#include "specmix/geometry.hpp"
#include "specmix/tensor.hpp"

namespace specmix {

using ad::Tensor;

/// Loss weights, bound by name.
struct LossWeights {
  double mse = 1.0;
  double sad = 0.0;
  double nonneg = 0.0;
  double minvol = 0.0;

  void validate() const;
};

/// Mean of squared differences over every component.
Tensor mse_loss(const Tensor& predicted, const Tensor& target);

/// Spectral angle between matching rows, averaged over rows. A rank-1 pair
/// is treated as a single row. Throws std::domain_error on zero-norm rows.
Tensor sad_loss(const Tensor& predicted, const Tensor& target);

/// Sum of squared negative parts.
Tensor nonneg_loss(const Tensor& signatures);

/// ReLU(volume(endmembers) - control_volume); endmembers as M x L rows.
Tensor minvol_loss(const Tensor& endmember_rows, double control_volume, const PcaProjection& proj);

enum class Stage { One = 1, Two = 2 };

struct StageLossTerms {
  Tensor total;
  double mse = 0.0, sad = 0.0, nonneg = 0.0, minvol = 0.0, volume = 0.0;
};

/// Stage one: mse*MSE + sad*SAD + nonneg*NonNeg. Stage two adds
/// minvol*MinVol, which needs the control volume and the projection.
StageLossTerms stage_loss(const Tensor& reconstructed, const Tensor& observed, const Tensor& endmember_rows,
                          const LossWeights& weights, Stage stage, std::optional<double> control_volume = std::nullopt,
                          const PcaProjection* proj = nullptr);

}  // namespace specmix
