#include "specmix/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "specmix/ops.hpp"

namespace specmix {
namespace {

double factorial(std::size_t n) {
  double f = 1.0;
  for (std::size_t i = 2; i <= n; ++i) f *= static_cast<double>(i);
  return f;
}

void check_projection(std::size_t m, std::size_t bands, const PcaProjection& proj) {
  if (m < 2) throw GeometryError("simplex volume needs at least 2 endmembers");
  if (proj.dims() != m - 1) {
    throw GeometryError("projection has " + std::to_string(proj.dims()) + " dims, expected M-1 = " +
                        std::to_string(m - 1));
  }
  if (proj.bands() != bands) throw GeometryError("projection band count differs from signatures");
}

}  // namespace

Eigen::MatrixXd PcaProjection::project(const Eigen::MatrixXd& x) const {
  return basis * (x.colwise() - mean);
}

Eigen::MatrixXd PcaProjection::reconstruct(const Eigen::MatrixXd& z) const {
  return (basis.transpose() * z).colwise() + mean;
}

PcaProjection pca_fit(const Eigen::MatrixXd& pixels, std::size_t dims) {
  const auto bands = static_cast<std::size_t>(pixels.rows());
  const auto n = static_cast<std::size_t>(pixels.cols());
  if (dims == 0) throw GeometryError("pca_fit: dims must be positive");
  if (dims > bands || dims > n) {
    throw GeometryError("pca_fit: dims " + std::to_string(dims) + " exceeds bands " + std::to_string(bands) +
                        " or pixels " + std::to_string(n));
  }
  PcaProjection proj;
  proj.mean = pixels.rowwise().mean();
  const Eigen::MatrixXd centered = pixels.colwise() - proj.mean;
  const Eigen::MatrixXd cov = centered * centered.transpose() / static_cast<double>(n);
  if (cov.trace() <= 0.0) throw GeometryError("pca_fit: degenerate pixel cloud (zero variance)");

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  if (eig.info() != Eigen::Success) throw GeometryError("pca_fit: eigendecomposition failed");
  // Eigenvalues come back ascending.
  proj.basis.resize(static_cast<Eigen::Index>(dims), static_cast<Eigen::Index>(bands));
  for (std::size_t d = 0; d < dims; ++d) {
    Eigen::VectorXd dir = eig.eigenvectors().col(static_cast<Eigen::Index>(bands - 1 - d));
    Eigen::Index arg = 0;
    dir.cwiseAbs().maxCoeff(&arg);
    if (dir(arg) < 0.0) dir = -dir;
    proj.basis.row(static_cast<Eigen::Index>(d)) = dir.transpose();
  }
  return proj;
}

double simplex_volume_projected(const Eigen::MatrixXd& projected) {
  const auto m = static_cast<std::size_t>(projected.cols());
  if (m < 2) throw GeometryError("simplex volume needs at least 2 endmembers");
  if (static_cast<std::size_t>(projected.rows()) + 1 != m) {
    throw GeometryError("simplex_volume_projected: expected (M-1) x M coordinates");
  }
  // columns in lexicographic order so the LU pivots do not depend on input order
  std::vector<Eigen::Index> order(m);
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    for (Eigen::Index r = 0; r < projected.rows(); ++r) {
      if (projected(r, a) != projected(r, b)) return projected(r, a) < projected(r, b);
    }
    return false;
  });
  Eigen::MatrixXd s(m, m);
  s.row(0).setOnes();
  for (std::size_t j = 0; j < m; ++j)
    s.col(static_cast<Eigen::Index>(j)).tail(static_cast<Eigen::Index>(m - 1)) = projected.col(order[j]);
  return std::abs(s.determinant()) / factorial(m - 1);
}

double simplex_volume(const Eigen::MatrixXd& signatures, const PcaProjection& proj) {
  check_projection(static_cast<std::size_t>(signatures.cols()), static_cast<std::size_t>(signatures.rows()), proj);
  return simplex_volume_projected(proj.project(signatures));
}

ad::Tensor simplex_volume(const ad::Tensor& endmember_rows, const PcaProjection& proj) {
  if (endmember_rows.rank() != 2) throw GeometryError("simplex_volume: endmembers must be an M x L tensor");
  const std::size_t m = endmember_rows.dim(0);
  const std::size_t bands = endmember_rows.dim(1);
  check_projection(m, bands, proj);

  std::vector<double> mean(proj.mean.data(), proj.mean.data() + bands);
  // basis^T as an L x (M-1) tensor, row-major.
  std::vector<double> basis_t(bands * (m - 1));
  for (std::size_t l = 0; l < bands; ++l) {
    for (std::size_t d = 0; d + 1 < m; ++d) basis_t[l * (m - 1) + d] = proj.basis(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(l));
  }
  using namespace ad;
  Tensor centered = sub(endmember_rows, Tensor::from({bands}, std::move(mean)));
  Tensor coords = transpose(matmul(centered, Tensor::from({bands, m - 1}, std::move(basis_t))));
  Tensor stacked = concat({Tensor::full({1, m}, 1.0), coords}, 0);
  return scale(ad::abs(det(stacked)), 1.0 / factorial(m - 1));
}

}  // namespace specmix
