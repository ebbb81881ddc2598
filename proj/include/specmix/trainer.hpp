#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "specmix/checkpoint.hpp"
#include "specmix/eea.hpp"
#include "specmix/fsnet.hpp"
#include "specmix/geometry.hpp"
#include "specmix/neighborhood.hpp"
#include "specmix/objectives.hpp"
#include "specmix/scene.hpp"

namespace specmix {

class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Seeds {
  std::uint64_t params = 0;
  std::uint64_t shuffle = 0;
  std::uint64_t noise = 0;  // noisy scene variants; training itself does not draw from it
};

struct TrainConfig {
  double learning_rate = 1e-4;
  std::size_t batch_size = 400;
  std::size_t epochs_an = 100;
  std::size_t epochs_stage1 = 1000;
  std::size_t epochs_stage2 = 500;
  LossWeights weights{};
  NeighborhoodSpec nbhd{};
  Seeds seeds{};
  std::size_t heads_an = 0;  // 0 picks default_head_count(L)
  std::size_t heads_ap = 0;
  std::size_t heads_sp = 0;
  std::filesystem::path checkpoint_dir;  // empty: no checkpoint files

  void validate() const;
};

struct TrainReport {
  std::size_t batches_per_epoch = 0;
  std::vector<double> an_loss;      // per epoch, pixel-weighted mean of batch losses
  std::vector<double> stage1_loss;
  std::vector<double> stage2_loss;
  std::vector<double> stage2_volume;  // per stage-2 batch
  std::vector<double> stage2_minvol;  // per stage-2 batch, unweighted ReLU term
  std::optional<double> control_volume;
  double an_seconds = 0.0;
  double stage1_seconds = 0.0;
  double stage2_seconds = 0.0;
  double prediction_seconds = 0.0;

  std::string to_json() const;
};

struct AnResult {
  AnParams theta;
  Eigen::MatrixXd context;  // L x N context-aware pixels
  TrainReport report;
};

struct ApSpResult {
  ApParams psi;
  SpParams sp;
  Eigen::MatrixXd abundances;  // M x N
  Eigen::MatrixXd signatures;  // L x M
  TrainReport report;
};

struct UnmixResult {
  std::vector<EndmemberSet> sets;
  EndmemberEnsemble ensemble;
  AnParams theta;
  ApParams psi;
  SpParams sp;
  Eigen::MatrixXd abundances;
  Eigen::MatrixXd signatures;
  TrainReport report;
};

/// Neighbour pixel indices (N x Nn, row-major) with border clamping.
std::vector<std::size_t> neighbor_indices(const HsImage& image, const std::vector<Offset>& offsets);

/// Runs the attention neighbourhood over every pixel.
Eigen::MatrixXd context_pixels(const AnParams& theta, const HsImage& image, const std::vector<Offset>& offsets);

/// Trains the attention neighbourhood on MSE(context, pixel) and then
/// generates the context-aware pixels once.
AnResult train_an(const HsImage& image, const TrainConfig& cfg);

/// Volume of the current signature predictor output under proj.
double control_volume(const SpParams& sp, const std::vector<Tensor>& groups, const PcaProjection& proj);

/// Two-stage training of the abundance and signature predictors, then the
/// full-image prediction.
ApSpResult train_ap_sp(const Eigen::MatrixXd& context, const HsImage& image, const EndmemberEnsemble& ensemble,
                       const TrainConfig& cfg);

/// EEAs -> ensembles -> attention neighbourhood -> two-stage AP/SP training.
UnmixResult unmix(const HsImage& image, std::size_t endmembers, const TrainConfig& cfg,
                  const std::vector<EeaAlgorithm>& eeas, std::uint64_t eea_seed);

/// Every tensor of a trained model, named for checkpoints.
NamedTensors model_tensors(const AnParams* theta, const ApParams* psi, const SpParams* sp);

}  // namespace specmix
