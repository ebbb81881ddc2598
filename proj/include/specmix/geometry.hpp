#pragma once

#include <Eigen/Dense>
#include <cstddef>

#include "specmix/tensor.hpp"

namespace specmix {

class GeometryError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Affine projection onto the leading principal directions of a pixel cloud.
struct PcaProjection {
  Eigen::VectorXd mean;   // L
  Eigen::MatrixXd basis;  // dims x L, orthonormal rows

  std::size_t dims() const { return static_cast<std::size_t>(basis.rows()); }
  std::size_t bands() const { return static_cast<std::size_t>(basis.cols()); }

  /// basis * (x - mean) for every column of x (L x K) -> dims x K.
  Eigen::MatrixXd project(const Eigen::MatrixXd& x) const;
  /// mean + basis^T * z, the inverse on the subspace.
  Eigen::MatrixXd reconstruct(const Eigen::MatrixXd& z) const;
};

/// Fits a PCA on the columns of pixels (L x N) via the covariance
/// eigendecomposition. Each direction's sign is fixed so that its
/// largest-magnitude entry is positive.
PcaProjection pca_fit(const Eigen::MatrixXd& pixels, std::size_t dims);

/// Volume of the simplex whose vertices are the columns of projected
/// ((M-1) x M): |det([1; projected])| / (M-1)!.
double simplex_volume_projected(const Eigen::MatrixXd& projected);

/// Simplex volume of the endmember columns of signatures (L x M) after
/// projection to M-1 dimensions.
double simplex_volume(const Eigen::MatrixXd& signatures, const PcaProjection& proj);

/// Differentiable version for endmembers stored as rows (M x L tensor);
/// returns a scalar tensor.
ad::Tensor simplex_volume(const ad::Tensor& endmember_rows, const PcaProjection& proj);

}  // namespace specmix
