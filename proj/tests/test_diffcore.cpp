#include <doctest.h>

#include <cmath>
#include <random>

#include "gradient_suites.hpp"
#include "oracles.hpp"
#include "specmix/adam.hpp"
#include "specmix/ops.hpp"

using namespace specmix::ad;

TEST_SUITE("diffcore") {
  TEST_CASE("softmax of equal scores is uniform") {
    Tensor s = softmax(Tensor::from({3}, {0.0, 0.0, 0.0}));
    for (double v : s.data()) CHECK(v == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  }

  TEST_CASE("det of identity") { CHECK(det(Tensor::identity(3)).item() == 1.0); }

  TEST_CASE("relu clips negatives") {
    Tensor r = relu(Tensor::from({3}, {-2.0, 0.0, 3.0}));
    CHECK(r.at(0) == 0.0);
    CHECK(r.at(1) == 0.0);
    CHECK(r.at(2) == 3.0);
  }

  TEST_CASE("grad of sum is all ones") {
    Tensor x = Tensor::from({2, 3}, {1, -2, 3, 0.5, 7, -1}, true);
    backward(sum(x));
    for (double g : x.grad()) CHECK(g == 1.0);
  }

  TEST_CASE("grad of det at identity is identity") {
    Tensor a = Tensor::identity(2, true);
    backward(det(a));
    CHECK(a.grad()[0] == doctest::Approx(1.0));
    CHECK(a.grad()[1] == doctest::Approx(0.0));
    CHECK(a.grad()[2] == doctest::Approx(0.0));
    CHECK(a.grad()[3] == doctest::Approx(1.0));
  }

  TEST_CASE("det of singular matrix is zero with zero gradient") {
    Tensor a = Tensor::from({2, 2}, {1, 2, 2, 4}, true);
    Tensor d = det(a);
    CHECK(d.item() == doctest::Approx(0.0));
    backward(d);
    for (double g : a.grad()) CHECK(g == 0.0);
  }

  TEST_CASE("softmax rows sum to one") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 50; ++trial) {
      Tensor x = oracle::random_tensor({4, 6}, rng, -30.0, 30.0, false);
      Tensor s = softmax(x);
      for (std::size_t i = 0; i < 4; ++i) {
        double total = 0.0;
        for (std::size_t j = 0; j < 6; ++j) {
          CHECK(s.at(i, j) >= 0.0);
          total += s.at(i, j);
        }
        CHECK(std::abs(total - 1.0) <= 1e-12);
      }
    }
  }

  TEST_CASE("shape errors") {
    CHECK_THROWS_AS(matmul(Tensor::zeros({2, 3}), Tensor::zeros({2, 3})), ShapeError);
    CHECK_THROWS_AS(det(Tensor::zeros({2, 3})), ShapeError);
    CHECK_THROWS_AS(add(Tensor::zeros({2}), Tensor::zeros({3})), ShapeError);
    CHECK_THROWS_AS(reshape(Tensor::zeros({2, 3}), {4}), ShapeError);
    CHECK_THROWS_AS(backward(Tensor::zeros({2}, true)), ShapeError);
  }

  TEST_CASE("non-finite results are errors") {
    CHECK_THROWS_AS(scale(Tensor::from({1}, {1e308}), 10.0), NumericError);
    CHECK_THROWS_AS(sqrt(Tensor::from({1}, {-1.0})), NumericError);
  }

  TEST_CASE("acos is clamped at the boundary") {
    Tensor x = Tensor::from({2}, {1.0, -1.0}, true);
    Tensor y = acos(x);
    CHECK(y.at(0) == doctest::Approx(std::acos(1.0 - kAcosClamp)));
    backward(sum(y));
    CHECK(std::isfinite(x.grad()[0]));
    CHECK(std::isfinite(x.grad()[1]));
  }

  TEST_CASE("matmul matches naive product") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 20; ++trial) {
      Tensor a = oracle::random_tensor({3, 5}, rng, -1, 1, false);
      Tensor b = oracle::random_tensor({5, 4}, rng, -1, 1, false);
      const auto expect = oracle::matmul(oracle::to_mat(a), oracle::to_mat(b));
      Tensor c = matmul(a, b);
      for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 4; ++j) CHECK(c.at(i, j) == doctest::Approx(expect[i][j]).epsilon(1e-13));
    }
  }

  TEST_CASE("det matches Leibniz expansion") {
    std::mt19937_64 rng(12);
    for (std::size_t n = 1; n <= 5; ++n) {
      Tensor a = oracle::random_tensor({n, n}, rng, -2, 2, false);
      CHECK(det(a).item() == doctest::Approx(oracle::det(oracle::to_mat(a))).epsilon(1e-10));
    }
  }

  TEST_CASE("leaf gradients accumulate, intermediate ones do not") {
    Tensor x = Tensor::from({2}, {1.0, 2.0}, true);
    Tensor y = square(x);
    backward(sum(y));
    backward(sum(y));
    CHECK(x.grad()[0] == doctest::Approx(4.0));
    CHECK(x.grad()[1] == doctest::Approx(8.0));
    x.zero_grad();
    backward(sum(y));
    CHECK(x.grad()[1] == doctest::Approx(4.0));
  }

  TEST_CASE("finite-difference agreement for every op") {
    std::vector<suites::Failure> failures;
    suites::op_gradients(2024, 100, 1e-4, failures);
    for (const auto& f : failures) MESSAGE("op " << f.name << " trial " << f.trial << " error " << f.error);
    CHECK(failures.empty());
  }

  TEST_CASE("adam first step moves by the learning rate") {
    Tensor p = Tensor::from({3}, {1.0, -2.0, 0.5}, true);
    Adam opt({p});
    backward(sum(p));
    opt.step(1e-3);
    CHECK(p.at(0) == doctest::Approx(1.0 - 1e-3).epsilon(1e-9));
    CHECK(p.at(1) == doctest::Approx(-2.0 - 1e-3).epsilon(1e-9));
    CHECK(opt.state().t == 1);
  }

  TEST_CASE("adam leaves parameters alone under zero gradient") {
    Tensor p = Tensor::from({2}, {0.25, -4.0}, true);
    Adam opt({p});
    backward(scale(sum(p), 0.0));
    opt.step(0.1);
    CHECK(p.at(0) == 0.25);
    CHECK(p.at(1) == -4.0);
  }

  TEST_CASE("adam is deterministic") {
    auto run = [] {
      Tensor p = Tensor::from({2}, {0.3, 0.7}, true);
      Adam opt({p});
      for (int i = 0; i < 2; ++i) {
        opt.zero_grad();
        backward(sum(square(p)));
        opt.step(0.01);
      }
      return std::vector<double>(p.data().begin(), p.data().end());
    };
    CHECK(run() == run());
  }

  TEST_CASE("adam rejects a non-positive learning rate") {
    Tensor p = Tensor::from({1}, {1.0}, true);
    Adam opt({p});
    CHECK_THROWS(opt.step(0.0));
  }
}
