#include "specmix/metrics.hpp"

#include <cmath>
#include <iomanip>
#include <nlohmann/json.hpp>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "specmix/matching.hpp"

namespace specmix {

std::vector<std::size_t> match_endmembers(const Eigen::MatrixXd& predicted, const Eigen::MatrixXd& truth) {
  if (predicted.cols() != truth.cols()) {
    throw std::invalid_argument("match_endmembers: " + std::to_string(predicted.cols()) + " predicted vs " +
                                std::to_string(truth.cols()) + " true endmembers");
  }
  if (predicted.rows() != truth.rows()) throw std::invalid_argument("match_endmembers: band counts differ");
  return min_cost_assignment(sad_cost_matrix(predicted, truth));
}

std::vector<double> rmse_per_endmember(const Eigen::MatrixXd& predicted, const Eigen::MatrixXd& truth,
                                       const std::vector<std::size_t>& perm) {
  if (predicted.rows() != truth.rows() || predicted.cols() != truth.cols()) {
    throw std::invalid_argument("rmse_per_endmember: shape mismatch");
  }
  if (truth.cols() == 0) throw std::invalid_argument("rmse_per_endmember: no pixels");
  if (perm.size() != static_cast<std::size_t>(truth.rows())) throw std::invalid_argument("rmse: bad permutation");
  std::vector<double> out(perm.size());
  for (std::size_t p = 0; p < perm.size(); ++p) {
    const auto diff = predicted.row(static_cast<Eigen::Index>(p)) - truth.row(static_cast<Eigen::Index>(perm[p]));
    out[perm[p]] = std::sqrt(diff.squaredNorm() / static_cast<double>(truth.cols()));
  }
  return out;
}

std::vector<double> sad_per_endmember(const Eigen::MatrixXd& predicted, const Eigen::MatrixXd& truth,
                                      const std::vector<std::size_t>& perm) {
  if (predicted.rows() != truth.rows() || predicted.cols() != truth.cols()) {
    throw std::invalid_argument("sad_per_endmember: shape mismatch");
  }
  if (perm.size() != static_cast<std::size_t>(truth.cols())) throw std::invalid_argument("sad: bad permutation");
  std::vector<double> out(perm.size());
  for (std::size_t p = 0; p < perm.size(); ++p) {
    out[perm[p]] = spectral_angle(predicted.col(static_cast<Eigen::Index>(p)), truth.col(static_cast<Eigen::Index>(perm[p])));
  }
  return out;
}

double average(const std::vector<double>& values) {
  if (values.empty()) return 0.0;
  return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

EvalResult evaluate(const Eigen::MatrixXd& signatures, const Eigen::MatrixXd& abundances,
                    const Eigen::MatrixXd& truth_signatures, const Eigen::MatrixXd& truth_abundances) {
  EvalResult r;
  r.permutation = match_endmembers(signatures, truth_signatures);
  r.sad_per = sad_per_endmember(signatures, truth_signatures, r.permutation);
  r.rmse_per = rmse_per_endmember(abundances, truth_abundances, r.permutation);
  r.sad_avg = average(r.sad_per);
  r.rmse_avg = average(r.rmse_per);
  return r;
}

std::string to_json(const EvalResult& r) {
  nlohmann::json j;
  j["permutation"] = r.permutation;
  j["rmse"] = r.rmse_per;
  j["sad"] = r.sad_per;
  j["rmse_avg"] = r.rmse_avg;
  j["sad_avg"] = r.sad_avg;
  return j.dump(2);
}

std::string to_table(const EvalResult& r, const std::vector<std::string>& names) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(4);
  os << std::left << std::setw(8) << "Error";
  for (std::size_t i = 0; i < r.rmse_per.size(); ++i) {
    const std::string name = i < names.size() ? names[i] : "EM" + std::to_string(i + 1);
    os << std::right << std::setw(10) << name;
  }
  os << std::right << std::setw(10) << "Average" << '\n';
  auto row = [&](const char* label, const std::vector<double>& v, double avg) {
    os << std::left << std::setw(8) << label;
    for (double x : v) os << std::right << std::setw(10) << x;
    os << std::right << std::setw(10) << avg << '\n';
  };
  row("RMSE", r.rmse_per, r.rmse_avg);
  row("SAD", r.sad_per, r.sad_avg);
  return os.str();
}

}  // namespace specmix
