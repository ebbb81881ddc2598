#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>

namespace specmix {

class SceneError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Hyperspectral cube stored as an L x N matrix, one column per pixel.
/// Pixel k sits at row k / width, column k % width.
struct HsImage {
  std::size_t height = 0;
  std::size_t width = 0;
  Eigen::MatrixXd pixels;

  std::size_t bands() const { return static_cast<std::size_t>(pixels.rows()); }
  std::size_t size() const { return height * width; }
  std::size_t index(std::size_t row, std::size_t col) const { return row * width + col; }

  /// Throws SceneError if N != height * width or any entry is non-finite.
  void validate() const;
};

struct GroundTruth {
  Eigen::MatrixXd signatures;  // L x M
  Eigen::MatrixXd abundances;  // M x N

  /// Abundance columns nonnegative and summing to 1 within tol; signatures
  /// nonnegative.
  void validate(double tol = 1e-6) const;
};

struct Scene {
  HsImage image;
  GroundTruth truth;
};

/// Knobs of the cellular abundance recipe. Defaults are the documented
/// values; see README.
struct SceneOptions {
  std::size_t seeds_per_class = 3;
  double sharpness = 3.0;        // exponent on the inverse-distance scores
  double dirichlet_weight = 0.2; // share of the Dirichlet sample in each pixel
  double dirichlet_alpha = 1.0;
  bool pure_pixels = false;      // seed pixels keep a one-hot abundance
  double min_library_sad = 0.15; // rejection bound for generated spectra
};

/// Smooth random spectra (sums of three Gaussians over the band index) with
/// every pair at least min_sad radians apart.
Eigen::MatrixXd random_library(std::size_t endmembers, std::size_t bands, std::uint64_t seed, double min_sad = 0.15);

/// Cellular (Worley-style) abundance maps blended with Dirichlet noise,
/// mixed with the given or a generated library. The result is noiseless:
/// pixels == signatures * abundances.
Scene synth_scene(std::size_t endmembers, std::size_t bands, std::size_t height, std::size_t width,
                  std::uint64_t seed, const std::optional<Eigen::MatrixXd>& library = std::nullopt,
                  const SceneOptions& options = {});

struct NoiseSpec {
  double snr_db = std::numeric_limits<double>::infinity();  // +inf: no noise
  std::uint64_t seed = 0;
};

/// Adds white Gaussian noise with variance mean(Y^2) / 10^(snr_db / 10).
HsImage add_noise(const HsImage& image, const NoiseSpec& spec);

/// 10 log10(mean(clean^2) / mean((noisy - clean)^2)).
double measured_snr_db(const HsImage& clean, const HsImage& noisy);

}  // namespace specmix
