#include "specmix/scene.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "specmix/matching.hpp"

namespace specmix {

void HsImage::validate() const {
  if (static_cast<std::size_t>(pixels.cols()) != height * width) {
    throw SceneError("image has " + std::to_string(pixels.cols()) + " pixels, expected " +
                     std::to_string(height) + "x" + std::to_string(width));
  }
  if (!pixels.allFinite()) throw SceneError("image contains non-finite values");
}

void GroundTruth::validate(double tol) const {
  if (signatures.cols() != abundances.rows()) throw SceneError("ground truth: endmember count mismatch");
  if ((signatures.array() < 0.0).any()) throw SceneError("ground truth: negative signature entry");
  if ((abundances.array() < 0.0).any()) throw SceneError("ground truth: negative abundance");
  const Eigen::RowVectorXd sums = abundances.colwise().sum();
  if (((sums.array() - 1.0).abs() > tol).any()) throw SceneError("ground truth: abundance column does not sum to 1");
}

Eigen::MatrixXd random_library(std::size_t endmembers, std::size_t bands, std::uint64_t seed, double min_sad) {
  if (endmembers == 0 || bands == 0) throw SceneError("random_library: empty dimensions");
  std::mt19937_64 rng(seed);
  const double span = static_cast<double>(bands);
  std::uniform_real_distribution<double> amp(0.2, 1.0);
  std::uniform_real_distribution<double> center(0.0, std::max(span - 1.0, 1.0));
  std::uniform_real_distribution<double> width(std::max(span / 20.0, 1.0), std::max(span / 4.0, 1.5));
  std::uniform_real_distribution<double> peak(0.5, 0.95);

  Eigen::MatrixXd lib(bands, endmembers);
  for (std::size_t m = 0; m < endmembers; ++m) {
    bool accepted = false;
    for (int attempt = 0; attempt < 10000 && !accepted; ++attempt) {
      Eigen::VectorXd s = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(bands), 0.02);
      for (int g = 0; g < 3; ++g) {
        const double a = amp(rng), c = center(rng), w = width(rng);
        for (std::size_t l = 0; l < bands; ++l) {
          const double z = (static_cast<double>(l) - c) / w;
          s(static_cast<Eigen::Index>(l)) += a * std::exp(-0.5 * z * z);
        }
      }
      s *= peak(rng) / s.maxCoeff();
      accepted = true;
      for (std::size_t prev = 0; prev < m && accepted; ++prev) {
        accepted = spectral_angle(s, lib.col(static_cast<Eigen::Index>(prev))) >= min_sad;
      }
      if (accepted) lib.col(static_cast<Eigen::Index>(m)) = s;
    }
    if (!accepted) throw SceneError("random_library: could not reach the pairwise SAD bound");
  }
  return lib;
}

Scene synth_scene(std::size_t endmembers, std::size_t bands, std::size_t height, std::size_t width,
                  std::uint64_t seed, const std::optional<Eigen::MatrixXd>& library, const SceneOptions& options) {
  if (endmembers < 2) throw SceneError("synth_scene: need at least 2 endmembers");
  if (bands < endmembers) throw SceneError("synth_scene: need at least as many bands as endmembers");
  const std::size_t n = height * width;
  if (n < endmembers) throw SceneError("synth_scene: fewer pixels than endmembers");

  Scene scene;
  if (library) {
    if (static_cast<std::size_t>(library->cols()) != endmembers || static_cast<std::size_t>(library->rows()) != bands) {
      throw SceneError("synth_scene: library is " + std::to_string(library->rows()) + "x" +
                       std::to_string(library->cols()) + ", expected " + std::to_string(bands) + "x" +
                       std::to_string(endmembers));
    }
    scene.truth.signatures = *library;
  } else {
    scene.truth.signatures = random_library(endmembers, bands, seed ^ 0x5bd1e995ULL, options.min_library_sad);
  }

  std::mt19937_64 rng(seed);
  // Distinct seed pixels, seeds_per_class of them for every class.
  const std::size_t per_class = std::max<std::size_t>(1, std::min(options.seeds_per_class, n / endmembers));
  std::vector<std::size_t> cells(n);
  for (std::size_t i = 0; i < n; ++i) cells[i] = i;
  std::shuffle(cells.begin(), cells.end(), rng);
  std::vector<std::vector<std::size_t>> seeds(endmembers);
  for (std::size_t m = 0; m < endmembers; ++m) {
    seeds[m].assign(cells.begin() + static_cast<std::ptrdiff_t>(m * per_class),
                    cells.begin() + static_cast<std::ptrdiff_t>((m + 1) * per_class));
  }

  std::gamma_distribution<double> gamma(options.dirichlet_alpha, 1.0);
  Eigen::MatrixXd& a = scene.truth.abundances;
  a.resize(static_cast<Eigen::Index>(endmembers), static_cast<Eigen::Index>(n));
  std::vector<double> dist(endmembers);
  for (std::size_t k = 0; k < n; ++k) {
    const double r = static_cast<double>(k / width);
    const double c = static_cast<double>(k % width);
    for (std::size_t m = 0; m < endmembers; ++m) {
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t s : seeds[m]) {
        const double dr = r - static_cast<double>(s / width);
        const double dc = c - static_cast<double>(s % width);
        best = std::min(best, std::sqrt(dr * dr + dc * dc));
      }
      dist[m] = best;
    }
    const auto nearest = static_cast<std::size_t>(std::min_element(dist.begin(), dist.end()) - dist.begin());
    Eigen::VectorXd cell = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(endmembers));
    if (dist[nearest] == 0.0) {
      cell(static_cast<Eigen::Index>(nearest)) = 1.0;
    } else {
      for (std::size_t m = 0; m < endmembers; ++m) {
        cell(static_cast<Eigen::Index>(m)) = std::pow(dist[nearest] / dist[m], options.sharpness);
      }
      cell /= cell.sum();
    }

    Eigen::VectorXd mix(static_cast<Eigen::Index>(endmembers));
    for (std::size_t m = 0; m < endmembers; ++m) mix(static_cast<Eigen::Index>(m)) = gamma(rng);
    const double total = mix.sum();
    if (total > 0.0) {
      mix /= total;
    } else {
      mix.setConstant(1.0 / static_cast<double>(endmembers));
    }

    const bool keep_pure = options.pure_pixels && dist[nearest] == 0.0;
    a.col(static_cast<Eigen::Index>(k)) =
        keep_pure ? cell : ((1.0 - options.dirichlet_weight) * cell + options.dirichlet_weight * mix);
    a.col(static_cast<Eigen::Index>(k)) /= a.col(static_cast<Eigen::Index>(k)).sum();
  }

  scene.image.height = height;
  scene.image.width = width;
  scene.image.pixels = scene.truth.signatures * a;
  return scene;
}

HsImage add_noise(const HsImage& image, const NoiseSpec& spec) {
  if (std::isnan(spec.snr_db) || spec.snr_db == -std::numeric_limits<double>::infinity()) {
    throw SceneError("add_noise: snr_db must be finite or +inf");
  }
  HsImage out = image;
  if (std::isinf(spec.snr_db)) return out;
  const double signal_power = image.pixels.squaredNorm() / static_cast<double>(image.pixels.size());
  const double sigma = std::sqrt(signal_power / std::pow(10.0, spec.snr_db / 10.0));
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> noise(0.0, sigma);
  for (Eigen::Index j = 0; j < out.pixels.cols(); ++j) {
    for (Eigen::Index i = 0; i < out.pixels.rows(); ++i) out.pixels(i, j) += noise(rng);
  }
  return out;
}

double measured_snr_db(const HsImage& clean, const HsImage& noisy) {
  const double noise_power = (noisy.pixels - clean.pixels).squaredNorm();
  return 10.0 * std::log10(clean.pixels.squaredNorm() / noise_power);
}

}  // namespace specmix
