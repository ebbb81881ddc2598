#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <vector>

namespace specmix {

// Spectral angle between two vectors in radians. Throws std::domain_error
// if either has zero norm.
double spectral_angle(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

// cost(i, j) = spectral_angle(rows.col(i), cols.col(j)).
Eigen::MatrixXd sad_cost_matrix(const Eigen::MatrixXd& rows, const Eigen::MatrixXd& cols);

// Minimum-cost perfect matching on a square cost matrix; result[i] is the
// column assigned to row i. Exhaustive search up to 6x6, Hungarian above.
std::vector<std::size_t> min_cost_assignment(const Eigen::MatrixXd& cost);

// Same contract, always via the Hungarian algorithm.
std::vector<std::size_t> hungarian(const Eigen::MatrixXd& cost);

}  // namespace specmix
