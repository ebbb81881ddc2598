#include <doctest.h>

#include <nlohmann/json.hpp>
#include <random>

#include "oracles.hpp"
#include "specmix/matching.hpp"
#include "specmix/metrics.hpp"

using namespace specmix;

namespace {

Eigen::MatrixXd positive(Eigen::Index r, Eigen::Index c, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.05, 1.0);
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
  return m;
}

Eigen::MatrixXd simplex_columns(Eigen::Index m, Eigen::Index n, std::mt19937_64& rng) {
  Eigen::MatrixXd a = positive(m, n, rng);
  return a.array().rowwise() / a.colwise().sum().array();
}

}  // namespace

TEST_SUITE("metrics") {
  TEST_CASE("spectral angle basics") {
    Eigen::VectorXd a(2), b(2);
    a << 1, 1;
    b << 1, 0;
    CHECK(spectral_angle(a, b) == doctest::Approx(M_PI / 4));
    CHECK(spectral_angle(a, a) == doctest::Approx(0.0).epsilon(1e-7));
    CHECK_THROWS_AS(spectral_angle(a, Eigen::VectorXd::Zero(2)), std::domain_error);
  }

  TEST_CASE("assignment equals brute force") {
    std::mt19937_64 rng(9);
    for (std::size_t n = 1; n <= 7; ++n) {
      for (int trial = 0; trial < 10; ++trial) {
        const Eigen::MatrixXd cost = positive(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n), rng);
        std::vector<std::vector<double>> c(n, std::vector<double>(n));
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t j = 0; j < n; ++j) c[i][j] = cost(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
        const auto best = oracle::brute_force_assignment(c);
        auto total = [&](const std::vector<std::size_t>& p) {
          double t = 0.0;
          for (std::size_t i = 0; i < n; ++i) t += c[i][p[i]];
          return t;
        };
        CHECK(total(min_cost_assignment(cost)) == doctest::Approx(total(best)).epsilon(1e-12));
        CHECK(total(hungarian(cost)) == doctest::Approx(total(best)).epsilon(1e-12));
      }
    }
  }

  TEST_CASE("identity prediction scores zero") {
    std::mt19937_64 rng(10);
    const Eigen::MatrixXd s = positive(20, 4, rng);
    const Eigen::MatrixXd a = simplex_columns(4, 50, rng);
    const EvalResult r = evaluate(s, a, s, a);
    CHECK(r.rmse_avg == doctest::Approx(0.0));
    CHECK(r.sad_avg == doctest::Approx(0.0).epsilon(1e-7));
  }

  TEST_CASE("permuted prediction scores zero after matching") {
    std::mt19937_64 rng(11);
    const Eigen::MatrixXd s = positive(20, 4, rng);
    const Eigen::MatrixXd a = simplex_columns(4, 50, rng);
    const std::vector<int> perm = {2, 0, 3, 1};
    Eigen::MatrixXd sp(20, 4), ap(4, 50);
    for (int i = 0; i < 4; ++i) {
      sp.col(i) = s.col(perm[static_cast<std::size_t>(i)]);
      ap.row(i) = a.row(perm[static_cast<std::size_t>(i)]);
    }
    const EvalResult r = evaluate(sp, ap, s, a);
    CHECK(r.rmse_avg == doctest::Approx(0.0));
    CHECK(r.sad_avg == doctest::Approx(0.0).epsilon(1e-7));
    for (int i = 0; i < 4; ++i) CHECK(r.permutation[static_cast<std::size_t>(i)] == static_cast<std::size_t>(perm[static_cast<std::size_t>(i)]));
  }

  TEST_CASE("random prediction matches a loop oracle") {
    std::mt19937_64 rng(12);
    const Eigen::MatrixXd s = positive(15, 3, rng), st = positive(15, 3, rng);
    const Eigen::MatrixXd a = simplex_columns(3, 40, rng), at = simplex_columns(3, 40, rng);
    const EvalResult r = evaluate(s, a, st, at);
    std::vector<std::vector<double>> cost(3, std::vector<double>(3));
    auto col = [](const Eigen::MatrixXd& m, Eigen::Index j) { return std::vector<double>(m.col(j).data(), m.col(j).data() + m.rows()); };
    for (Eigen::Index i = 0; i < 3; ++i)
      for (Eigen::Index j = 0; j < 3; ++j) cost[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = oracle::angle(col(s, i), col(st, j));
    const auto perm = oracle::brute_force_assignment(cost);
    double sad = 0.0, rmse = 0.0;
    for (std::size_t p = 0; p < 3; ++p) {
      sad += cost[p][perm[p]];
      double sq = 0.0;
      for (Eigen::Index k = 0; k < 40; ++k) {
        const double d = a(static_cast<Eigen::Index>(p), k) - at(static_cast<Eigen::Index>(perm[p]), k);
        sq += d * d;
      }
      rmse += std::sqrt(sq / 40.0);
    }
    CHECK(r.sad_avg == doctest::Approx(sad / 3).epsilon(1e-9));
    CHECK(r.rmse_avg == doctest::Approx(rmse / 3).epsilon(1e-9));
  }

  TEST_CASE("sad is scale invariant, rmse is not") {
    std::mt19937_64 rng(13);
    const Eigen::MatrixXd s = positive(10, 3, rng);
    const Eigen::MatrixXd a = simplex_columns(3, 30, rng);
    const EvalResult r = evaluate(2.0 * s, 0.5 * a, s, a);
    CHECK(r.sad_avg == doctest::Approx(0.0).epsilon(1e-7));
    CHECK(r.rmse_avg > 0.01);
  }

  TEST_CASE("orthogonal signatures give right angles") {
    const Eigen::MatrixXd s = Eigen::MatrixXd::Identity(4, 2);
    Eigen::MatrixXd t = Eigen::MatrixXd::Zero(4, 2);
    t(2, 0) = 1;
    t(3, 1) = 1;
    const auto sad = sad_per_endmember(s, t, {0, 1});
    CHECK(sad[0] == doctest::Approx(M_PI / 2));
    CHECK(sad[1] == doctest::Approx(M_PI / 2));
  }

  TEST_CASE("reports") {
    EvalResult r;
    r.permutation = {1, 0};
    r.rmse_per = {0.1, 0.2};
    r.sad_per = {0.01, 0.03};
    r.rmse_avg = 0.15;
    r.sad_avg = 0.02;
    const auto j = nlohmann::json::parse(to_json(r));
    CHECK(j["rmse_avg"].get<double>() == 0.15);
    CHECK(j["sad"].size() == 2);
    const std::string table = to_table(r, {"Tree", "Water"});
    CHECK(table.find("Tree") != std::string::npos);
    CHECK(table.find("Average") != std::string::npos);
    CHECK(table.find("0.1500") != std::string::npos);
  }

  TEST_CASE("mismatched endmember counts are rejected") {
    CHECK_THROWS(evaluate(Eigen::MatrixXd::Ones(4, 2), Eigen::MatrixXd::Ones(2, 5), Eigen::MatrixXd::Ones(4, 3),
                          Eigen::MatrixXd::Ones(3, 5)));
  }
}
