#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace specmix {

/// Per-endmember scores, indexed by ground-truth endmember.
struct EvalResult {
  std::vector<std::size_t> permutation;  // predicted index -> truth index
  std::vector<double> rmse_per;
  std::vector<double> sad_per;
  double rmse_avg = 0.0;
  double sad_avg = 0.0;
};

/// Bijection predicted -> truth minimising the total spectral angle.
std::vector<std::size_t> match_endmembers(const Eigen::MatrixXd& predicted, const Eigen::MatrixXd& truth);

/// RMSE over pixels between predicted row p and truth row perm[p]; the
/// result is indexed by truth row.
std::vector<double> rmse_per_endmember(const Eigen::MatrixXd& predicted, const Eigen::MatrixXd& truth,
                                       const std::vector<std::size_t>& perm);

/// Spectral angle between predicted column p and truth column perm[p];
/// indexed by truth column.
std::vector<double> sad_per_endmember(const Eigen::MatrixXd& predicted, const Eigen::MatrixXd& truth,
                                      const std::vector<std::size_t>& perm);

double average(const std::vector<double>& values);

/// Matches signatures by SAD and scores both signatures and abundances
/// under that one alignment.
EvalResult evaluate(const Eigen::MatrixXd& signatures, const Eigen::MatrixXd& abundances,
                    const Eigen::MatrixXd& truth_signatures, const Eigen::MatrixXd& truth_abundances);

std::string to_json(const EvalResult& r);
/// Aligned text table: one column per endmember plus "Average".
std::string to_table(const EvalResult& r, const std::vector<std::string>& names = {});

}  // namespace specmix
