#include <doctest.h>

#include <filesystem>
#include <functional>
#include <nlohmann/json.hpp>

#include "specmix/metrics.hpp"
#include "specmix/trainer.hpp"

using namespace specmix;

namespace {

TrainConfig small_config() {
  TrainConfig cfg;
  cfg.learning_rate = 1e-3;
  cfg.batch_size = 64;
  cfg.epochs_an = 3;
  cfg.epochs_stage1 = 4;
  cfg.epochs_stage2 = 3;
  cfg.weights = {1.0, 1.125, 1e-8, 0.0025};
  cfg.nbhd = {NeighborhoodShape::Circle, 1, 0};
  cfg.seeds = {5, 6, 0};
  return cfg;
}

std::size_t hash_params(const std::vector<Tensor>& params) {
  std::size_t h = 0;
  for (const auto& t : params)
    for (double v : t.data()) h = h * 1000003u ^ std::hash<double>{}(v);
  return h;
}

bool is_identity_block(const ad::MultiHeadParams& b) {
  const auto ident = ad::MultiHeadParams::identity(b.d_model, b.heads);
  return b.heads == 1 && hash_params(b.parameters()) == hash_params(ident.parameters());
}

}  // namespace

TEST_SUITE("trainer") {
  TEST_CASE("neighbour indices clamp at the border") {
    HsImage img;
    img.height = 2;
    img.width = 3;
    img.pixels = Eigen::MatrixXd::Zero(1, 6);
    const auto idx = neighbor_indices(img, {{-1, 0}, {0, 1}});
    CHECK(idx == std::vector<std::size_t>{0, 1, 1, 2, 2, 2, 0, 4, 1, 5, 2, 5});
  }

  TEST_CASE("constant image: the attention neighbourhood reproduces the pixel") {
    HsImage img;
    img.height = 8;
    img.width = 8;
    img.pixels = Eigen::MatrixXd::Constant(6, 64, 0.3);
    TrainConfig cfg = small_config();
    cfg.epochs_an = 20;
    const AnResult r = train_an(img, cfg);
    REQUIRE(r.report.an_loss.size() == 20);
    CHECK(r.report.an_loss.back() <= 1e-6);
    CHECK((r.context - img.pixels).cwiseAbs().maxCoeff() <= 1e-9);
  }

  TEST_CASE("zero epochs still produce context pixels") {
    const Scene s = synth_scene(3, 12, 6, 6, 1);
    TrainConfig cfg = small_config();
    cfg.epochs_an = 0;
    const AnResult r = train_an(s.image, cfg);
    CHECK(r.report.an_loss.empty());
    CHECK(r.context.rows() == 12);
    CHECK(r.context.cols() == 36);
  }

  TEST_CASE("trace lengths, batching and simplex outputs") {
    const Scene s = synth_scene(3, 12, 10, 10, 2);
    TrainConfig cfg = small_config();
    const UnmixResult r = unmix(s.image, 3, cfg, {EeaAlgorithm::Atgp, EeaAlgorithm::Vca}, 3);
    CHECK(r.report.batches_per_epoch == 2);  // ceil(100 / 64)
    CHECK(r.report.an_loss.size() == 3);
    CHECK(r.report.stage1_loss.size() == 4);
    CHECK(r.report.stage2_loss.size() == 3);
    CHECK(r.report.stage2_volume.size() == 6);
    CHECK(r.report.stage2_minvol.size() == 6);
    REQUIRE(r.report.control_volume);
    CHECK(r.abundances.rows() == 3);
    CHECK(r.abundances.cols() == 100);
    CHECK(r.abundances.minCoeff() >= 0.0);
    CHECK((r.abundances.colwise().sum().array() - 1.0).abs().maxCoeff() <= 1e-6);
    CHECK(r.signatures.rows() == 12);
    CHECK(r.signatures.cols() == 3);
    CHECK(r.sp.blocks[0].heads == ad::default_head_count(12));
  }

  TEST_CASE("minvol term is zero whenever the volume is within the control volume") {
    const Scene s = synth_scene(3, 12, 10, 10, 3);
    TrainConfig cfg = small_config();
    cfg.epochs_stage2 = 6;
    const UnmixResult r = unmix(s.image, 3, cfg, {EeaAlgorithm::Atgp, EeaAlgorithm::Vca, EeaAlgorithm::Nfindr}, 3);
    const double vt = *r.report.control_volume;
    for (std::size_t i = 0; i < r.report.stage2_volume.size(); ++i) {
      if (r.report.stage2_volume[i] <= vt) CHECK(r.report.stage2_minvol[i] == 0.0);
      else CHECK(r.report.stage2_minvol[i] == doctest::Approx(r.report.stage2_volume[i] - vt));
    }
  }

  TEST_CASE("stage one leaves the blocks at identity and sets the control volume") {
    const Scene s = synth_scene(3, 12, 10, 10, 4);
    TrainConfig cfg = small_config();
    cfg.epochs_stage2 = 0;
    const UnmixResult r = unmix(s.image, 3, cfg, {EeaAlgorithm::Atgp, EeaAlgorithm::Vca}, 1);
    CHECK(r.report.stage2_loss.empty());
    for (const auto& b : r.sp.blocks) CHECK(is_identity_block(b));
    const auto groups = ensemble_tensors(r.ensemble);
    REQUIRE(r.report.control_volume);
    CHECK(*r.report.control_volume == control_volume(r.sp, groups, pca_fit(s.image.pixels, 2)));
  }

  TEST_CASE("control volume of the true endmembers") {
    const Scene s = synth_scene(3, 12, 10, 10, 5);
    EndmemberEnsemble e;
    for (Eigen::Index i = 0; i < 3; ++i) e.groups.push_back(s.truth.signatures.col(i).transpose());
    e.sources = {EeaAlgorithm::Atgp};
    std::mt19937_64 rng(1);
    const SpParams sp = SpParams::init(e, rng);
    const PcaProjection proj = pca_fit(s.image.pixels, 2);
    CHECK(control_volume(sp, ensemble_tensors(e), proj) ==
          doctest::Approx(simplex_volume(s.truth.signatures, proj)).epsilon(1e-12));
  }

  TEST_CASE("runs are deterministic") {
    const Scene s = synth_scene(3, 12, 10, 10, 6);
    const TrainConfig cfg = small_config();
    const std::vector<EeaAlgorithm> eeas = {EeaAlgorithm::Atgp, EeaAlgorithm::Vca, EeaAlgorithm::Nfindr};
    const UnmixResult a = unmix(s.image, 3, cfg, eeas, 2);
    const UnmixResult b = unmix(s.image, 3, cfg, eeas, 2);
    CHECK(a.abundances == b.abundances);
    CHECK(a.signatures == b.signatures);
    CHECK(a.report.stage1_loss == b.report.stage1_loss);
    CHECK(a.report.stage2_loss == b.report.stage2_loss);
    TrainConfig other = cfg;
    other.seeds.shuffle = 99;
    CHECK(unmix(s.image, 3, other, eeas, 2).report.stage1_loss != a.report.stage1_loss);
  }

  TEST_CASE("stage one selects the truth when it is in every hull") {
    const Scene s = synth_scene(3, 20, 12, 12, 7);
    const Eigen::MatrixXd& truth = s.truth.signatures;
    EndmemberEnsemble e;
    for (Eigen::Index i = 0; i < 3; ++i) {
      Eigen::MatrixXd g(3, 20);
      g.row(0) = truth.col(i).transpose();
      g.row(1) = (0.6 * truth.col(i) + 0.4 * truth.col((i + 1) % 3)).transpose();
      g.row(2) = (0.6 * truth.col(i) + 0.4 * truth.col((i + 2) % 3)).transpose();
      e.groups.push_back(g);
    }
    e.sources = {EeaAlgorithm::Atgp, EeaAlgorithm::Vca, EeaAlgorithm::Nfindr};
    TrainConfig cfg = small_config();
    cfg.learning_rate = 1e-2;
    cfg.batch_size = 144;
    cfg.epochs_stage1 = 3000;
    cfg.epochs_stage2 = 0;
    const ApSpResult r = train_ap_sp(s.image.pixels, s.image, e, cfg);
    const auto perm = match_endmembers(r.signatures, truth);
    const auto sad = sad_per_endmember(r.signatures, truth, perm);
    double avg = 0.0;
    for (double v : sad) avg += v / 3.0;
    CHECK(avg <= 0.02);
  }

  TEST_CASE("training loss decreases") {
    const Scene s = synth_scene(3, 12, 10, 10, 8);
    TrainConfig cfg = small_config();
    cfg.epochs_stage1 = 40;
    cfg.epochs_stage2 = 0;
    const UnmixResult r = unmix(s.image, 3, cfg, {EeaAlgorithm::Atgp, EeaAlgorithm::Vca}, 1);
    CHECK(r.report.stage1_loss.back() < r.report.stage1_loss.front());
  }

  TEST_CASE("divergence dumps the last good parameters") {
    const auto dir = std::filesystem::temp_directory_path() / "specmix_test_diverge";
    std::filesystem::remove_all(dir);
    HsImage img;
    img.height = 4;
    img.width = 4;
    img.pixels = Eigen::MatrixXd::Constant(4, 16, 1e200);
    img.pixels(0, 3) = 3e200;
    TrainConfig cfg = small_config();
    cfg.checkpoint_dir = dir;
    CHECK_THROWS_AS(train_an(img, cfg), TrainingError);
    CHECK(std::filesystem::exists(dir / "an_last_good.ckpt"));
  }

  TEST_CASE("configuration errors") {
    TrainConfig cfg = small_config();
    cfg.batch_size = 0;
    CHECK_THROWS(cfg.validate());
    cfg = small_config();
    cfg.learning_rate = -1.0;
    CHECK_THROWS(cfg.validate());
    cfg = small_config();
    cfg.heads_an = 5;
    const Scene s = synth_scene(3, 12, 4, 4, 1);
    CHECK_THROWS(train_an(s.image, cfg));
  }

  TEST_CASE("report json") {
    TrainReport r;
    r.batches_per_epoch = 3;
    r.stage1_loss = {1.0, 0.5};
    const auto j = nlohmann::json::parse(r.to_json());
    CHECK(j["batches_per_epoch"] == 3);
    CHECK(j["loss"]["stage1"].size() == 2);
    CHECK(j["control_volume"].is_null());
  }
}
