#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "specmix/fsnet.hpp"
#include "specmix/objectives.hpp"
#include "specmix/ops.hpp"

using namespace specmix;

namespace {

PcaProjection plane_projection() {
  // 3 bands, data spanning the first two axes
  Eigen::MatrixXd pts(3, 4);
  pts << 0, 1, 0, 1, 0, 0, 1, 1, 0, 0, 0, 0;
  return pca_fit(pts, 2);
}

}  // namespace

TEST_SUITE("objectives") {
  TEST_CASE("mse") {
    const Tensor a = Tensor::from({2, 2}, {1, 2, 3, 4});
    const Tensor b = Tensor::from({2, 2}, {1, 0, 3, 5});
    CHECK(mse_loss(a, b).item() == doctest::Approx((4.0 + 1.0) / 4.0));
    CHECK_THROWS_AS(mse_loss(a, Tensor::zeros({4})), ad::ShapeError);
  }

  TEST_CASE("sad") {
    const Tensor a = Tensor::from({2, 2}, {1, 0, 1, 1});
    const Tensor b = Tensor::from({2, 2}, {0, 1, 2, 2});
    // parallel rows bottom out at the acos clamp
    const double floor = std::acos(1.0 - ad::kAcosClamp);
    CHECK(sad_loss(a, b).item() == doctest::Approx((M_PI / 2 + floor) / 2).epsilon(1e-12));
    CHECK(sad_loss(Tensor::from({2}, {1, 1}), Tensor::from({2}, {1, 0})).item() == doctest::Approx(M_PI / 4));
    CHECK(sad_loss(a, a).item() == doctest::Approx(floor).epsilon(1e-6));
    CHECK_THROWS_AS(sad_loss(a, Tensor::from({2, 2}, {1, 1, 0, 0})), std::domain_error);
  }

  TEST_CASE("sad matches the angle oracle on random rows") {
    std::mt19937_64 rng(1);
    const Tensor a = oracle::random_tensor({5, 7}, rng, 0.1, 1.0, false);
    const Tensor b = oracle::random_tensor({5, 7}, rng, 0.1, 1.0, false);
    const auto ma = oracle::to_mat(a), mb = oracle::to_mat(b);
    double expect = 0.0;
    for (std::size_t r = 0; r < 5; ++r) expect += std::max(oracle::angle(ma[r], mb[r]), std::acos(1.0 - ad::kAcosClamp));
    CHECK(sad_loss(a, b).item() == doctest::Approx(expect / 5).epsilon(1e-12));
  }

  TEST_CASE("nonneg") {
    CHECK(nonneg_loss(Tensor::from({3}, {-0.5, 0.2, -1.0})).item() == doctest::Approx(1.25));
    CHECK(nonneg_loss(Tensor::from({2}, {0.0, 3.0})).item() == 0.0);
  }

  TEST_CASE("minvol is a hinge on the control volume") {
    const PcaProjection proj = plane_projection();
    // triangle with volume 0.5 in the plane
    const Tensor rows = Tensor::from({3, 3}, {0, 0, 0, 1, 0, 0, 0, 1, 0});
    CHECK(simplex_volume(rows, proj).item() == doctest::Approx(0.5));
    CHECK(minvol_loss(rows, 0.2, proj).item() == doctest::Approx(0.3));
    CHECK(minvol_loss(rows, 0.8, proj).item() == 0.0);
    CHECK_THROWS(minvol_loss(rows, -1.0, proj));
  }

  TEST_CASE("stage one composition") {
    std::mt19937_64 rng(2);
    const Tensor rec = oracle::random_tensor({4, 3}, rng, 0.1, 1.0, false);
    const Tensor obs = oracle::random_tensor({4, 3}, rng, 0.1, 1.0, false);
    const Tensor rows = oracle::random_tensor({3, 3}, rng, -0.2, 1.0, false);
    const LossWeights w{2.0, 0.5, 3.0, 100.0};
    const auto t = stage_loss(rec, obs, rows, w, Stage::One);
    const double expect = 2.0 * mse_loss(rec, obs).item() + 0.5 * sad_loss(rec, obs).item() + 3.0 * nonneg_loss(rows).item();
    CHECK(t.total.item() == doctest::Approx(expect).epsilon(1e-14));
    CHECK(t.minvol == 0.0);
  }

  TEST_CASE("stage two adds the weighted hinge") {
    const PcaProjection proj = plane_projection();
    const Tensor rows = Tensor::from({3, 3}, {0, 0, 0, 1, 0, 0, 0, 1, 0});
    const Tensor rec = Tensor::from({1, 3}, {1, 2, 3});
    const LossWeights w{1.0, 0.0, 0.0, 2.0};
    const auto t = stage_loss(rec, rec, rows, w, Stage::Two, 0.2, &proj);
    CHECK(t.volume == doctest::Approx(0.5));
    CHECK(t.minvol == doctest::Approx(0.3));
    CHECK(t.total.item() == doctest::Approx(0.6));
    const auto below = stage_loss(rec, rec, rows, w, Stage::Two, 0.9, &proj);
    CHECK(below.minvol == 0.0);
    CHECK(below.total.item() == doctest::Approx(0.0));
  }

  TEST_CASE("stage two without a control volume is an error") {
    const PcaProjection proj = plane_projection();
    const Tensor rows = Tensor::from({3, 3}, {0, 0, 0, 1, 0, 0, 0, 1, 0});
    const Tensor rec = Tensor::from({1, 3}, {1, 2, 3});
    CHECK_THROWS(stage_loss(rec, rec, rows, {}, Stage::Two, std::nullopt, &proj));
    CHECK_THROWS(stage_loss(rec, rec, rows, {}, Stage::Two, 0.1, nullptr));
  }

  TEST_CASE("weights are validated") {
    CHECK_THROWS(LossWeights{-1.0, 0, 0, 0}.validate());
    CHECK_THROWS(LossWeights{1.0, std::nan(""), 0, 0}.validate());
    CHECK_NOTHROW(LossWeights{1.0, 0, 0, 0}.validate());
  }

  TEST_CASE("minvol gradient reaches the endmembers only above the control volume") {
    const PcaProjection proj = plane_projection();
    Tensor rows = Tensor::from({3, 3}, {0, 0, 0, 1, 0, 0, 0, 1, 0}, true);
    ad::backward(minvol_loss(rows, 0.9, proj));
    for (double g : rows.grad()) CHECK(g == 0.0);
    rows.zero_grad();
    CHECK(oracle::gradient_error([&] { return minvol_loss(rows, 0.1, proj); }, {rows}) < 1e-4);
    double norm = 0.0;
    for (double g : rows.grad()) norm += g * g;
    CHECK(norm > 0.0);
  }

  TEST_CASE("stage loss gradients") {
    std::mt19937_64 rng(3);
    const PcaProjection proj = plane_projection();
    Tensor rows = oracle::random_tensor({3, 3}, rng, -0.2, 1.0, true);
    Tensor ab = oracle::random_tensor({4, 3}, rng, 0.1, 1.0, true);
    const Tensor obs = oracle::random_tensor({4, 3}, rng, 0.1, 1.0, false);
    const LossWeights w{1.0, 1.125, 0.5, 0.25};
    CHECK(oracle::gradient_error([&] { return stage_loss(reconstruct(rows, ab), obs, rows, w, Stage::Two, 0.0, &proj).total; },
                                 {rows, ab}) < 1e-4);
  }
}
