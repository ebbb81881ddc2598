#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace specmix {

class EeaError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class EeaAlgorithm { Atgp, Vca, Nfindr };

std::string to_string(EeaAlgorithm algo);
EeaAlgorithm parse_eea(const std::string& name);
/// Comma separated list, e.g. "vca,nfindr,atgp". Order is preserved.
std::vector<EeaAlgorithm> parse_eea_list(const std::string& text);

/// Endmembers picked from the image, one column per endmember.
struct EndmemberSet {
  Eigen::MatrixXd signatures;              // L x M
  std::vector<std::size_t> pixel_indices;  // source pixel of each column
  EeaAlgorithm source = EeaAlgorithm::Atgp;
  bool degenerate = false;                 // zero-volume result (N-FINDR on a flat cloud)
};

/// Candidate signatures per endmember. groups[i] is nEEA x L: row s is the
/// candidate that set s contributed to endmember i.
struct EndmemberEnsemble {
  std::vector<Eigen::MatrixXd> groups;
  std::vector<EeaAlgorithm> sources;
  // assignment[s][i] = column of set s placed into group i.
  std::vector<std::vector<std::size_t>> assignment;

  std::size_t endmembers() const { return groups.size(); }
  std::size_t members() const { return sources.size(); }
};

/// Automatic target generation: start from the largest-norm pixel, then
/// repeatedly take the pixel with the largest residual after projecting out
/// the span of those already chosen.
EndmemberSet atgp(const Eigen::MatrixXd& pixels, std::size_t endmembers);

/// Vertex component analysis with an M-dimensional signal subspace and the
/// projective projection; each step draws a random direction orthogonal to
/// the picked vertices and takes the most extreme pixel along it.
EndmemberSet vca(const Eigen::MatrixXd& pixels, std::size_t endmembers, std::uint64_t seed);

/// N-FINDR by sequential replacement in the (M-1)-dim PCA space, starting
/// from M random pixels; stops when a full sweep finds no swap that grows
/// the simplex volume.
EndmemberSet nfindr(const Eigen::MatrixXd& pixels, std::size_t endmembers, std::uint64_t seed);

EndmemberSet run_eea(EeaAlgorithm algo, const Eigen::MatrixXd& pixels, std::size_t endmembers, std::uint64_t seed);
std::vector<EndmemberSet> run_eeas(const std::vector<EeaAlgorithm>& algos, const Eigen::MatrixXd& pixels,
                                   std::size_t endmembers, std::uint64_t seed);

/// Aligns every set with sets[0] by minimum total SAD and groups the
/// candidates per endmember.
EndmemberEnsemble build_ensembles(const std::vector<EndmemberSet>& sets, std::size_t endmembers);

}  // namespace specmix
