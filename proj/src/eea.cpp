#include "specmix/eea.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "specmix/geometry.hpp"
#include "specmix/matching.hpp"

namespace specmix {
namespace {

constexpr double kRankTol = 1e-9;

void check_request(const Eigen::MatrixXd& pixels, std::size_t endmembers) {
  const auto bands = static_cast<std::size_t>(pixels.rows());
  const auto n = static_cast<std::size_t>(pixels.cols());
  if (endmembers == 0) throw EeaError("endmember count must be positive");
  if (endmembers > bands || endmembers > n) {
    throw EeaError("cannot extract " + std::to_string(endmembers) + " endmembers from " + std::to_string(n) +
                   " pixels with " + std::to_string(bands) + " bands");
  }
  if (!pixels.allFinite()) throw EeaError("pixels contain non-finite values");
}

EndmemberSet from_indices(const Eigen::MatrixXd& pixels, std::vector<std::size_t> idx, EeaAlgorithm source) {
  EndmemberSet set;
  set.source = source;
  set.signatures.resize(pixels.rows(), static_cast<Eigen::Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) {
    set.signatures.col(static_cast<Eigen::Index>(i)) = pixels.col(static_cast<Eigen::Index>(idx[i]));
  }
  set.pixel_indices = std::move(idx);
  return set;
}

[[noreturn]] void rank_error(const char* algo, std::size_t found, std::size_t wanted) {
  throw EeaError(std::string(algo) + ": pixel cloud has rank " + std::to_string(found) + " < " +
                 std::to_string(wanted) + " endmembers");
}

// Cofactors of column `col` of square s: det(s with column col = x) = c . x.
Eigen::VectorXd column_cofactors(const Eigen::MatrixXd& s, Eigen::Index col) {
  const Eigen::Index m = s.rows();
  Eigen::VectorXd c(m);
  if (m == 1) {
    c(0) = 1.0;
    return c;
  }
  Eigen::MatrixXd minor(m - 1, m - 1);
  for (Eigen::Index r = 0; r < m; ++r) {
    for (Eigen::Index i = 0, mi = 0; i < m; ++i) {
      if (i == r) continue;
      for (Eigen::Index j = 0, mj = 0; j < m; ++j) {
        if (j == col) continue;
        minor(mi, mj++) = s(i, j);
      }
      ++mi;
    }
    c(r) = ((r + col) % 2 == 0 ? 1.0 : -1.0) * minor.determinant();
  }
  return c;
}

}  // namespace

std::string to_string(EeaAlgorithm algo) {
  switch (algo) {
    case EeaAlgorithm::Atgp:
      return "atgp";
    case EeaAlgorithm::Vca:
      return "vca";
    case EeaAlgorithm::Nfindr:
      return "nfindr";
  }
  return "unknown";
}

EeaAlgorithm parse_eea(const std::string& name) {
  std::string n = name;
  std::transform(n.begin(), n.end(), n.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  n.erase(std::remove(n.begin(), n.end(), '-'), n.end());
  if (n == "atgp") return EeaAlgorithm::Atgp;
  if (n == "vca") return EeaAlgorithm::Vca;
  if (n == "nfindr") return EeaAlgorithm::Nfindr;
  throw EeaError("unknown endmember extraction algorithm '" + name + "'");
}

std::vector<EeaAlgorithm> parse_eea_list(const std::string& text) {
  std::vector<EeaAlgorithm> out;
  std::istringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    item.erase(std::remove_if(item.begin(), item.end(), [](unsigned char c) { return std::isspace(c); }), item.end());
    if (item.empty()) continue;
    const EeaAlgorithm algo = parse_eea(item);
    if (std::find(out.begin(), out.end(), algo) != out.end()) throw EeaError("duplicate algorithm '" + item + "'");
    out.push_back(algo);
  }
  if (out.empty()) throw EeaError("empty algorithm list");
  return out;
}

EndmemberSet atgp(const Eigen::MatrixXd& pixels, std::size_t endmembers) {
  check_request(pixels, endmembers);
  Eigen::MatrixXd residual = pixels;
  Eigen::MatrixXd basis(pixels.rows(), 0);
  std::vector<std::size_t> picked;
  double scale = 0.0;
  for (std::size_t i = 0; i < endmembers; ++i) {
    Eigen::Index best = 0;
    const double norm = residual.colwise().squaredNorm().maxCoeff(&best);
    if (i == 0) scale = norm;
    if (norm <= kRankTol * kRankTol * scale || norm == 0.0) rank_error("atgp", i, endmembers);
    picked.push_back(static_cast<std::size_t>(best));
    // Orthonormal basis of the chosen pixels; residual = (I - Q Q^T) Y.
    Eigen::VectorXd q = residual.col(best) / std::sqrt(norm);
    basis.conservativeResize(Eigen::NoChange, basis.cols() + 1);
    basis.col(basis.cols() - 1) = q;
    residual -= q * (q.transpose() * residual);
  }
  return from_indices(pixels, std::move(picked), EeaAlgorithm::Atgp);
}

EndmemberSet vca(const Eigen::MatrixXd& pixels, std::size_t endmembers, std::uint64_t seed) {
  check_request(pixels, endmembers);
  const auto m = static_cast<Eigen::Index>(endmembers);
  const auto n = pixels.cols();

  // Signal subspace from the (uncentred) correlation matrix.
  const Eigen::MatrixXd corr = pixels * pixels.transpose() / static_cast<double>(n);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(corr);
  const Eigen::MatrixXd ud = eig.eigenvectors().rightCols(m);
  const Eigen::MatrixXd x = ud.transpose() * pixels;

  // Projective projection onto the hyperplane u^T x = 1.
  const Eigen::VectorXd u = x.rowwise().mean();
  const Eigen::RowVectorXd denom = u.transpose() * x;
  const double denom_scale = denom.cwiseAbs().maxCoeff();
  if (denom_scale == 0.0) rank_error("vca", 0, endmembers);
  Eigen::MatrixXd yp = x;
  for (Eigen::Index k = 0; k < n; ++k) {
    const double d = std::abs(denom(k)) < 1e-12 * denom_scale ? 1e-12 * denom_scale : denom(k);
    yp.col(k) /= d;
  }

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(m, m);
  a(m - 1, 0) = 1.0;
  std::vector<std::size_t> picked;
  const double extent = yp.colwise().norm().maxCoeff();
  for (Eigen::Index i = 0; i < m; ++i) {
    Eigen::VectorXd w(m);
    for (Eigen::Index j = 0; j < m; ++j) w(j) = normal(rng);
    const Eigen::MatrixXd pinv = a.completeOrthogonalDecomposition().pseudoInverse();
    Eigen::VectorXd f = w - a * (pinv * w);
    const double fn = f.norm();
    if (fn < kRankTol) rank_error("vca", static_cast<std::size_t>(i), endmembers);
    f /= fn;
    const Eigen::RowVectorXd v = f.transpose() * yp;
    Eigen::Index best = 0;
    const double reach = v.cwiseAbs().maxCoeff(&best);
    if (reach <= kRankTol * extent) rank_error("vca", static_cast<std::size_t>(i), endmembers);
    a.col(i) = yp.col(best);
    picked.push_back(static_cast<std::size_t>(best));
  }
  return from_indices(pixels, std::move(picked), EeaAlgorithm::Vca);
}

EndmemberSet nfindr(const Eigen::MatrixXd& pixels, std::size_t endmembers, std::uint64_t seed) {
  check_request(pixels, endmembers);
  const auto n = static_cast<std::size_t>(pixels.cols());
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::size_t> idx(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(endmembers));

  const bool flat = (pixels.colwise() - pixels.col(0)).squaredNorm() == 0.0;
  if (flat || endmembers == 1) {
    EndmemberSet set = from_indices(pixels, std::move(idx), EeaAlgorithm::Nfindr);
    set.degenerate = flat && endmembers > 1;
    return set;
  }

  const PcaProjection proj = pca_fit(pixels, endmembers - 1);
  const Eigen::MatrixXd z = proj.project(pixels);
  const auto m = static_cast<Eigen::Index>(endmembers);
  Eigen::MatrixXd lifted(m, static_cast<Eigen::Index>(n));
  lifted.row(0).setOnes();
  lifted.bottomRows(m - 1) = z;

  Eigen::MatrixXd simplex(m, m);
  for (Eigen::Index i = 0; i < m; ++i) simplex.col(i) = lifted.col(static_cast<Eigen::Index>(idx[static_cast<std::size_t>(i)]));
  double best = std::abs(simplex.determinant());
  if (best <= kRankTol) {
    // Random start spans less than M-1 dimensions (e.g. repeated pure pixels);
    // restart from greedy max-residual picks in the lifted space.
    idx = atgp(lifted, endmembers).pixel_indices;
    for (Eigen::Index i = 0; i < m; ++i) simplex.col(i) = lifted.col(static_cast<Eigen::Index>(idx[static_cast<std::size_t>(i)]));
    best = std::abs(simplex.determinant());
  }

  bool improved = true;
  while (improved) {
    improved = false;
    for (Eigen::Index i = 0; i < m; ++i) {
      const Eigen::VectorXd cof = column_cofactors(simplex, i);
      const Eigen::RowVectorXd dets = cof.transpose() * lifted;
      Eigen::Index arg = 0;
      const double top = dets.cwiseAbs().maxCoeff(&arg);
      if (top > best * (1.0 + 1e-12) && static_cast<std::size_t>(arg) != idx[static_cast<std::size_t>(i)]) {
        idx[static_cast<std::size_t>(i)] = static_cast<std::size_t>(arg);
        simplex.col(i) = lifted.col(arg);
        best = std::abs(simplex.determinant());
        improved = true;
      }
    }
  }
  if (best == 0.0) rank_error("nfindr", 0, endmembers);
  return from_indices(pixels, std::move(idx), EeaAlgorithm::Nfindr);
}

EndmemberSet run_eea(EeaAlgorithm algo, const Eigen::MatrixXd& pixels, std::size_t endmembers, std::uint64_t seed) {
  switch (algo) {
    case EeaAlgorithm::Atgp:
      return atgp(pixels, endmembers);
    case EeaAlgorithm::Vca:
      return vca(pixels, endmembers, seed);
    case EeaAlgorithm::Nfindr:
      return nfindr(pixels, endmembers, seed);
  }
  throw EeaError("unknown algorithm");
}

std::vector<EndmemberSet> run_eeas(const std::vector<EeaAlgorithm>& algos, const Eigen::MatrixXd& pixels,
                                   std::size_t endmembers, std::uint64_t seed) {
  std::vector<EndmemberSet> sets;
  sets.reserve(algos.size());
  for (auto algo : algos) sets.push_back(run_eea(algo, pixels, endmembers, seed));
  return sets;
}

EndmemberEnsemble build_ensembles(const std::vector<EndmemberSet>& sets, std::size_t endmembers) {
  if (sets.empty()) throw EeaError("build_ensembles: no endmember sets");
  for (const auto& s : sets) {
    if (static_cast<std::size_t>(s.signatures.cols()) != endmembers) {
      throw EeaError("build_ensembles: set from " + to_string(s.source) + " has " +
                     std::to_string(s.signatures.cols()) + " columns, expected " + std::to_string(endmembers));
    }
    if (s.signatures.rows() != sets.front().signatures.rows()) throw EeaError("build_ensembles: band counts differ");
  }
  const auto bands = sets.front().signatures.rows();
  EndmemberEnsemble ens;
  ens.groups.assign(endmembers, Eigen::MatrixXd(static_cast<Eigen::Index>(sets.size()), bands));
  for (std::size_t s = 0; s < sets.size(); ++s) {
    std::vector<std::size_t> assign(endmembers);
    if (s == 0) {
      std::iota(assign.begin(), assign.end(), 0);
    } else {
      assign = min_cost_assignment(sad_cost_matrix(sets.front().signatures, sets[s].signatures));
    }
    for (std::size_t i = 0; i < endmembers; ++i) {
      ens.groups[i].row(static_cast<Eigen::Index>(s)) = sets[s].signatures.col(static_cast<Eigen::Index>(assign[i])).transpose();
    }
    ens.sources.push_back(sets[s].source);
    ens.assignment.push_back(std::move(assign));
  }
  return ens;
}

}  // namespace specmix
