#pragma once

// The three fusion networks over the differentiable core.
//
// Batched layouts put pixels on rows:
//   pixels        B x L
//   neighbourhood B x Nn x L
//   abundances    B x M
//   endmembers    M x L   (row i is endmember i, i.e. the transpose of S)

#include <cstddef>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "specmix/attention.hpp"
#include "specmix/eea.hpp"
#include "specmix/tensor.hpp"

namespace specmix {

using ad::Tensor;

/// Attention Neighbourhood: one multi-head block, pixel as query,
/// neighbourhood as keys and values.
struct AnParams {
  ad::MultiHeadParams mha;

  /// Query/key projections uniform; value path (per-head slices and W^O)
  /// starts at identity so the initial output is a similarity-weighted
  /// average of the neighbours.
  static AnParams init(std::size_t bands, std::size_t heads, std::mt19937_64& rng);
  std::vector<Tensor> parameters() const { return mha.parameters(); }
};

/// Abundance Predictor: Linear(L->L), self-attention, residual from the
/// block input, Linear(L->M), softmax.
struct ApParams {
  Tensor w_in, b_in;    // L x L, L
  ad::MultiHeadParams mha;
  Tensor w_out, b_out;  // L x M, M

  static ApParams init(std::size_t bands, std::size_t endmembers, std::size_t heads, std::mt19937_64& rng);
  std::vector<Tensor> parameters() const;
};

/// Signature Predictor: one attention block per endmember (Phi) and one
/// trainable query per endmember (Omega).
struct SpParams {
  std::vector<ad::MultiHeadParams> blocks;
  std::vector<Tensor> queries;  // each 1 x L

  /// Single-head identity blocks and queries at the group mean plus small
  /// seeded noise.
  static SpParams init(const EndmemberEnsemble& ensemble, std::mt19937_64& rng);
  /// The same blocks re-expressed with `heads` heads: identity column slices
  /// and an identity output projection. Queries are shared.
  SpParams expanded(std::size_t heads) const;

  std::vector<Tensor> block_parameters() const;
  std::vector<Tensor> query_parameters() const { return queries; }
  void freeze_blocks(bool frozen);
};

/// Context-aware pixels (B x L) from pixels (B x L) and neighbourhoods (B x Nn x L).
Tensor an_forward(const AnParams& theta, const Tensor& pixels, const Tensor& neighbourhoods);
/// Abundances (B x M) from context-aware pixels (B x L).
Tensor ap_forward(const ApParams& psi, const Tensor& context);
/// Endmembers as rows (M x L); group i is nEEA x L.
Tensor sp_forward(const SpParams& sp, const std::vector<Tensor>& groups);
/// Reconstructed pixels (B x L) = abundances (B x M) * endmembers (M x L).
Tensor reconstruct(const Tensor& endmember_rows, const Tensor& abundances);

/// Y_hat = S_hat * A_hat in matrix layout (L x M times M x N).
Eigen::MatrixXd reconstruct(const Eigen::MatrixXd& signatures, const Eigen::MatrixXd& abundances);

// Conversions between Eigen (column pixels) and tensors (row pixels).
Tensor rows_tensor(const Eigen::MatrixXd& m, bool requires_grad = false);  // copies m as-is, row-major
Eigen::MatrixXd to_matrix(const Tensor& t);                                // rank-2 tensor -> Eigen
std::vector<Tensor> ensemble_tensors(const EndmemberEnsemble& ensemble);

/// Named parameters for checkpoints: "an.", "ap." and "sp." prefixes.
std::vector<std::pair<std::string, Tensor>> named_parameters(const AnParams& an);
std::vector<std::pair<std::string, Tensor>> named_parameters(const ApParams& ap);
std::vector<std::pair<std::string, Tensor>> named_parameters(const SpParams& sp);

}  // namespace specmix
