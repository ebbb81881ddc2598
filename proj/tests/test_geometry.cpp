#include <doctest.h>

#include <algorithm>
#include <random>

#include "oracles.hpp"
#include "specmix/fsnet.hpp"
#include "specmix/geometry.hpp"

using namespace specmix;

namespace {

Eigen::MatrixXd random_matrix(Eigen::Index r, Eigen::Index c, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
  return m;
}

// Volume straight from the definition: Leibniz det of [1; z] over (M-1)!.
double volume_oracle(const Eigen::MatrixXd& z) {
  const auto m = static_cast<std::size_t>(z.cols());
  oracle::Mat a(m, std::vector<double>(m, 1.0));
  for (std::size_t i = 1; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j) a[i][j] = z(static_cast<Eigen::Index>(i - 1), static_cast<Eigen::Index>(j));
  return std::abs(oracle::det(a)) / oracle::factorial(m - 1);
}

}  // namespace

TEST_SUITE("geometry") {
  TEST_CASE("unit right triangle has volume one half") {
    Eigen::MatrixXd z(2, 3);
    z << 0, 1, 0, 0, 0, 1;
    CHECK(simplex_volume_projected(z) == doctest::Approx(0.5).epsilon(1e-15));
  }

  TEST_CASE("repeated vertex gives zero volume") {
    Eigen::MatrixXd z(2, 3);
    z << 0.3, 0.3, 2, -1, -1, 5;
    CHECK(simplex_volume_projected(z) == doctest::Approx(0.0));
  }

  TEST_CASE("scaling by two multiplies volume by 2^(M-1)") {
    std::mt19937_64 rng(2);
    for (int m = 2; m <= 5; ++m) {
      const Eigen::MatrixXd z = random_matrix(m - 1, m, rng);
      CHECK(simplex_volume_projected(2.0 * z) ==
            doctest::Approx(std::pow(2.0, m - 1) * simplex_volume_projected(z)).epsilon(1e-12));
    }
  }

  TEST_CASE("matches brute-force determinant and is permutation invariant") {
    std::mt19937_64 rng(3);
    for (int m = 2; m <= 4; ++m) {
      for (int trial = 0; trial < 20; ++trial) {
        const Eigen::MatrixXd z = random_matrix(m - 1, m, rng);
        const double v = simplex_volume_projected(z);
        CHECK(v == doctest::Approx(volume_oracle(z)).epsilon(1e-12));
        std::vector<int> perm(static_cast<std::size_t>(m));
        std::iota(perm.begin(), perm.end(), 0);
        while (std::next_permutation(perm.begin(), perm.end())) {
          Eigen::MatrixXd p(z.rows(), z.cols());
          for (int j = 0; j < m; ++j) p.col(j) = z.col(perm[static_cast<std::size_t>(j)]);
          CHECK(simplex_volume_projected(p) == v);
        }
      }
    }
  }

  TEST_CASE("fewer than two vertices is an error") {
    CHECK_THROWS_AS(simplex_volume_projected(Eigen::MatrixXd(0, 1)), GeometryError);
    CHECK_THROWS_AS(simplex_volume_projected(Eigen::MatrixXd(2, 2)), GeometryError);
  }

  TEST_CASE("pca recovers a plane exactly") {
    std::mt19937_64 rng(4);
    const Eigen::MatrixXd basis = random_matrix(5, 2, rng);
    const Eigen::MatrixXd coeff = random_matrix(2, 40, rng);
    const Eigen::MatrixXd pts = (basis * coeff).colwise() + Eigen::VectorXd::Constant(5, 3.0);
    const PcaProjection p = pca_fit(pts, 2);
    CHECK((p.reconstruct(p.project(pts)) - pts).cwiseAbs().maxCoeff() < 1e-8);
    CHECK((p.basis * p.basis.transpose() - Eigen::MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-8);
  }

  TEST_CASE("pca on an isotropic cloud captures about 1/L of the variance") {
    std::mt19937_64 rng(5);
    const Eigen::MatrixXd pts = random_matrix(8, 20000, rng);
    const PcaProjection p = pca_fit(pts, 1);
    const Eigen::MatrixXd centred = pts.colwise() - pts.rowwise().mean();
    const double captured = p.project(pts).squaredNorm() / centred.squaredNorm();
    CHECK(captured == doctest::Approx(1.0 / 8.0).epsilon(0.15));
  }

  TEST_CASE("pca is translation invariant") {
    std::mt19937_64 rng(6);
    const Eigen::MatrixXd pts = random_matrix(6, 50, rng);
    const PcaProjection a = pca_fit(pts, 3);
    const PcaProjection b = pca_fit(pts.array() + 10.0, 3);
    CHECK((a.basis - b.basis).cwiseAbs().maxCoeff() < 1e-8);
    CHECK(((b.mean - a.mean).array() - 10.0).abs().maxCoeff() < 1e-9);
  }

  TEST_CASE("pca sign convention") {
    std::mt19937_64 rng(7);
    const PcaProjection p = pca_fit(random_matrix(6, 50, rng), 3);
    for (Eigen::Index r = 0; r < p.basis.rows(); ++r) {
      Eigen::Index arg = 0;
      p.basis.row(r).cwiseAbs().maxCoeff(&arg);
      CHECK(p.basis(r, arg) > 0.0);
    }
  }

  TEST_CASE("pca errors") {
    CHECK_THROWS_AS(pca_fit(Eigen::MatrixXd::Ones(4, 10), 2), GeometryError);
    CHECK_THROWS_AS(pca_fit(Eigen::MatrixXd::Random(4, 10), 0), GeometryError);
    CHECK_THROWS_AS(pca_fit(Eigen::MatrixXd::Random(4, 10), 5), GeometryError);
  }

  TEST_CASE("tensor volume matches the Eigen path and has correct gradients") {
    std::mt19937_64 rng(8);
    for (int m = 2; m <= 4; ++m) {
      const Eigen::MatrixXd pixels = random_matrix(6, 60, rng);
      const PcaProjection p = pca_fit(pixels, static_cast<std::size_t>(m - 1));
      const Eigen::MatrixXd s = random_matrix(6, m, rng);
      Tensor rows = rows_tensor(s.transpose(), true);
      CHECK(simplex_volume(rows, p).item() == doctest::Approx(simplex_volume(s, p)).epsilon(1e-12));
      CHECK(oracle::gradient_error([&] { return simplex_volume(rows, p); }, {rows}) < 1e-4);
    }
  }
}
