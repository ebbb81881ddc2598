#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "specmix/eea.hpp"
#include "specmix/geometry.hpp"
#include "specmix/metrics.hpp"
#include "specmix/neighborhood.hpp"
#include "specmix/scene.hpp"
#include "specmix/trainer.hpp"

namespace py = pybind11;
using namespace specmix;

namespace {

HsImage make_image(const Eigen::MatrixXd& pixels, std::size_t height, std::size_t width) {
  HsImage img;
  img.height = height;
  img.width = width;
  img.pixels = pixels;
  img.validate();
  return img;
}

py::dict set_to_dict(const EndmemberSet& s) {
  py::dict d;
  d["algorithm"] = to_string(s.source);
  d["signatures"] = s.signatures;
  d["pixel_indices"] = s.pixel_indices;
  d["degenerate"] = s.degenerate;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Hyperspectral unmixing core";

  py::register_exception<TrainingError>(m, "TrainingError", PyExc_RuntimeError);

  m.def(
      "synth_scene",
      [](std::size_t endmembers, std::size_t bands, std::size_t height, std::size_t width, std::uint64_t seed,
         bool pure_pixels) {
        SceneOptions opt;
        opt.pure_pixels = pure_pixels;
        const Scene s = synth_scene(endmembers, bands, height, width, seed, std::nullopt, opt);
        py::dict d;
        d["pixels"] = s.image.pixels;
        d["height"] = s.image.height;
        d["width"] = s.image.width;
        d["signatures"] = s.truth.signatures;
        d["abundances"] = s.truth.abundances;
        return d;
      },
      py::arg("endmembers"), py::arg("bands"), py::arg("height"), py::arg("width"), py::arg("seed") = 0,
      py::arg("pure_pixels") = false,
      "Synthetic scene. pixels: L x N, signatures: L x M, abundances: M x N (row-major pixel order).");

  m.def(
      "add_noise",
      [](const Eigen::MatrixXd& pixels, double snr_db, std::uint64_t seed) {
        return add_noise(make_image(pixels, 1, static_cast<std::size_t>(pixels.cols())), {snr_db, seed}).pixels;
      },
      py::arg("pixels"), py::arg("snr_db"), py::arg("seed") = 0, "Additive white Gaussian noise at the given SNR.");

  m.def(
      "atgp", [](const Eigen::MatrixXd& pixels, std::size_t endmembers) { return set_to_dict(atgp(pixels, endmembers)); },
      py::arg("pixels"), py::arg("endmembers"));
  m.def(
      "vca",
      [](const Eigen::MatrixXd& pixels, std::size_t endmembers, std::uint64_t seed) {
        return set_to_dict(vca(pixels, endmembers, seed));
      },
      py::arg("pixels"), py::arg("endmembers"), py::arg("seed") = 0);
  m.def(
      "nfindr",
      [](const Eigen::MatrixXd& pixels, std::size_t endmembers, std::uint64_t seed) {
        return set_to_dict(nfindr(pixels, endmembers, seed));
      },
      py::arg("pixels"), py::arg("endmembers"), py::arg("seed") = 0);

  m.def(
      "build_ensembles",
      [](const Eigen::MatrixXd& pixels, std::size_t endmembers, const std::string& algos, std::uint64_t seed) {
        const auto sets = run_eeas(parse_eea_list(algos), pixels, endmembers, seed);
        return build_ensembles(sets, endmembers).groups;
      },
      py::arg("pixels"), py::arg("endmembers"), py::arg("algos") = "atgp,vca,nfindr", py::arg("seed") = 0,
      "Runs the EEAs and returns one nEEA x L candidate matrix per endmember.");

  m.def(
      "simplex_volume",
      [](const Eigen::MatrixXd& signatures, const Eigen::MatrixXd& pixels) {
        return simplex_volume(signatures, pca_fit(pixels, static_cast<std::size_t>(signatures.cols()) - 1));
      },
      py::arg("signatures"), py::arg("pixels"),
      "Volume of the simplex spanned by the signature columns in the (M-1)-dim PCA space of pixels.");

  m.def(
      "unmix",
      [](const Eigen::MatrixXd& pixels, std::size_t height, std::size_t width, std::size_t endmembers,
         double learning_rate, std::size_t batch_size, std::size_t epochs_an, std::size_t epochs_stage1,
         std::size_t epochs_stage2, double weight_mse, double weight_sad, double weight_nonneg, double weight_minvol,
         const std::string& neighborhood, const std::string& eeas, std::uint64_t seed) {
        TrainConfig cfg;
        cfg.learning_rate = learning_rate;
        cfg.batch_size = batch_size;
        cfg.epochs_an = epochs_an;
        cfg.epochs_stage1 = epochs_stage1;
        cfg.epochs_stage2 = epochs_stage2;
        cfg.weights = {weight_mse, weight_sad, weight_nonneg, weight_minvol};
        cfg.nbhd = parse_neighborhood(neighborhood);
        cfg.seeds = {seed, seed, seed};
        const HsImage image = make_image(pixels, height, width);
        UnmixResult r;
        {
          py::gil_scoped_release release;
          r = unmix(image, endmembers, cfg, parse_eea_list(eeas), seed);
        }
        py::dict d;
        d["abundances"] = r.abundances;
        d["signatures"] = r.signatures;
        d["report"] = r.report.to_json();
        return d;
      },
      py::arg("pixels"), py::arg("height"), py::arg("width"), py::arg("endmembers"), py::kw_only(),
      py::arg("learning_rate") = 1e-4, py::arg("batch_size") = 400, py::arg("epochs_an") = 100,
      py::arg("epochs_stage1") = 1000, py::arg("epochs_stage2") = 500, py::arg("weight_mse") = 1.0,
      py::arg("weight_sad") = 0.0, py::arg("weight_nonneg") = 0.0, py::arg("weight_minvol") = 0.0,
      py::arg("neighborhood") = "shape=circle,level=4", py::arg("eeas") = "atgp,vca,nfindr", py::arg("seed") = 0,
      "Full pipeline. Returns abundances (M x N), signatures (L x M) and the JSON training report.");

  m.def(
      "evaluate",
      [](const Eigen::MatrixXd& signatures, const Eigen::MatrixXd& abundances, const Eigen::MatrixXd& true_signatures,
         const Eigen::MatrixXd& true_abundances) {
        const EvalResult r = evaluate(signatures, abundances, true_signatures, true_abundances);
        py::dict d;
        d["permutation"] = r.permutation;
        d["rmse"] = r.rmse_per;
        d["sad"] = r.sad_per;
        d["rmse_avg"] = r.rmse_avg;
        d["sad_avg"] = r.sad_avg;
        return d;
      },
      py::arg("signatures"), py::arg("abundances"), py::arg("true_signatures"), py::arg("true_abundances"));
}
