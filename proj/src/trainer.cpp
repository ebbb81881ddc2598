#include "specmix/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <nlohmann/json.hpp>
#include <numeric>
#include <random>

#include "specmix/adam.hpp"
#include "specmix/ops.hpp"

namespace specmix {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  // splitmix64 finaliser over (base, stream)
  std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::size_t resolve_heads(std::size_t requested, std::size_t bands, const char* which) {
  const std::size_t heads = requested == 0 ? ad::default_head_count(bands) : requested;
  if (bands % heads != 0) {
    throw std::invalid_argument(std::string(which) + " heads (" + std::to_string(heads) + ") must divide the band count " +
                                std::to_string(bands));
  }
  return heads;
}

// Rows `idx` of the column-pixel matrix as a B x L tensor.
Tensor gather_rows(const Eigen::MatrixXd& columns, std::span<const std::size_t> idx) {
  const auto bands = static_cast<std::size_t>(columns.rows());
  std::vector<double> data(idx.size() * bands);
  for (std::size_t b = 0; b < idx.size(); ++b) {
    const double* src = columns.col(static_cast<Eigen::Index>(idx[b])).data();
    std::copy(src, src + bands, data.begin() + static_cast<std::ptrdiff_t>(b * bands));
  }
  return Tensor::from({idx.size(), bands}, std::move(data));
}

Tensor gather_neighbourhoods(const Eigen::MatrixXd& columns, const std::vector<std::size_t>& neighbours,
                             std::size_t count, std::span<const std::size_t> idx) {
  const auto bands = static_cast<std::size_t>(columns.rows());
  std::vector<double> data(idx.size() * count * bands);
  auto out = data.begin();
  for (std::size_t k : idx) {
    for (std::size_t j = 0; j < count; ++j) {
      const double* src = columns.col(static_cast<Eigen::Index>(neighbours[k * count + j])).data();
      out = std::copy(src, src + bands, out);
    }
  }
  return Tensor::from({idx.size(), count, bands}, std::move(data));
}

// Epoch driver: shuffles without replacement and hands out ceil(N/D) batches,
// the last one possibly short.
class BatchSchedule {
 public:
  BatchSchedule(std::size_t n, std::size_t batch, std::uint64_t seed) : order_(n), batch_(batch), rng_(seed) {
    std::iota(order_.begin(), order_.end(), 0);
  }
  std::size_t batches() const { return (order_.size() + batch_ - 1) / batch_; }
  void reshuffle() { std::shuffle(order_.begin(), order_.end(), rng_); }
  std::span<const std::size_t> batch(std::size_t i) const {
    const std::size_t start = i * batch_;
    return std::span<const std::size_t>(order_).subspan(start, std::min(batch_, order_.size() - start));
  }

 private:
  std::vector<std::size_t> order_;
  std::size_t batch_;
  std::mt19937_64 rng_;
};

void dump_on_failure(const TrainConfig& cfg, const NamedTensors& tensors, const char* stage) {
  if (cfg.checkpoint_dir.empty()) return;
  try {
    std::filesystem::create_directories(cfg.checkpoint_dir);
    save_checkpoint(tensors, cfg.checkpoint_dir / (std::string(stage) + "_last_good.ckpt"));
  } catch (const std::exception&) {
    // the training error below is the one worth reporting
  }
}

void save_stage(const TrainConfig& cfg, const NamedTensors& tensors, const char* name) {
  if (cfg.checkpoint_dir.empty()) return;
  std::filesystem::create_directories(cfg.checkpoint_dir);
  save_checkpoint(tensors, cfg.checkpoint_dir / name);
}

Eigen::MatrixXd predict_abundances(const ApParams& psi, const Eigen::MatrixXd& context) {
  const auto n = static_cast<std::size_t>(context.cols());
  Eigen::MatrixXd out(psi.w_out.dim(1), context.cols());
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  constexpr std::size_t chunk = 1024;
  for (std::size_t start = 0; start < n; start += chunk) {
    const auto span = std::span<const std::size_t>(idx).subspan(start, std::min(chunk, n - start));
    const Eigen::MatrixXd part = to_matrix(ap_forward(psi, gather_rows(context, span)));
    out.middleCols(static_cast<Eigen::Index>(start), static_cast<Eigen::Index>(span.size())) = part.transpose();
  }
  return out;
}

}  // namespace

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw std::invalid_argument("learning rate must be > 0");
  if (batch_size == 0) throw std::invalid_argument("batch size must be >= 1");
  weights.validate();
  if (nbhd.level < 1) throw std::invalid_argument("neighborhood level must be >= 1");
}

std::string TrainReport::to_json() const {
  nlohmann::json j;
  j["batches_per_epoch"] = batches_per_epoch;
  j["loss"]["an"] = an_loss;
  j["loss"]["stage1"] = stage1_loss;
  j["loss"]["stage2"] = stage2_loss;
  j["stage2_volume"] = stage2_volume;
  j["stage2_minvol"] = stage2_minvol;
  j["control_volume"] = control_volume ? nlohmann::json(*control_volume) : nlohmann::json(nullptr);
  j["seconds"]["an"] = an_seconds;
  j["seconds"]["stage1"] = stage1_seconds;
  j["seconds"]["stage2"] = stage2_seconds;
  j["seconds"]["training"] = an_seconds + stage1_seconds + stage2_seconds;
  j["seconds"]["prediction"] = prediction_seconds;
  return j.dump(2);
}

std::vector<std::size_t> neighbor_indices(const HsImage& image, const std::vector<Offset>& offsets) {
  const auto h = static_cast<long>(image.height);
  const auto w = static_cast<long>(image.width);
  std::vector<std::size_t> out;
  out.reserve(image.size() * offsets.size());
  for (long r = 0; r < h; ++r) {
    for (long c = 0; c < w; ++c) {
      for (const auto& o : offsets) {
        const long rr = std::clamp(r + o.dy, 0L, h - 1);
        const long cc = std::clamp(c + o.dx, 0L, w - 1);
        out.push_back(static_cast<std::size_t>(rr * w + cc));
      }
    }
  }
  return out;
}

Eigen::MatrixXd context_pixels(const AnParams& theta, const HsImage& image, const std::vector<Offset>& offsets) {
  const auto neighbours = neighbor_indices(image, offsets);
  const std::size_t n = image.size();
  Eigen::MatrixXd out(image.pixels.rows(), image.pixels.cols());
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  constexpr std::size_t chunk = 512;
  for (std::size_t start = 0; start < n; start += chunk) {
    const auto span = std::span<const std::size_t>(idx).subspan(start, std::min(chunk, n - start));
    Tensor y = an_forward(theta, gather_rows(image.pixels, span),
                          gather_neighbourhoods(image.pixels, neighbours, offsets.size(), span));
    out.middleCols(static_cast<Eigen::Index>(start), static_cast<Eigen::Index>(span.size())) = to_matrix(y).transpose();
  }
  return out;
}

AnResult train_an(const HsImage& image, const TrainConfig& cfg) {
  cfg.validate();
  image.validate();
  if (image.size() == 0) throw std::invalid_argument("train_an: empty image");
  const auto start = Clock::now();
  const std::size_t bands = image.bands();
  const auto offsets = neighbor_offsets(cfg.nbhd);
  const auto neighbours = neighbor_indices(image, offsets);

  std::mt19937_64 init_rng(derive_seed(cfg.seeds.params, 0));
  AnResult result;
  result.theta = AnParams::init(bands, resolve_heads(cfg.heads_an, bands, "AN"), init_rng);
  ad::Adam opt(result.theta.parameters());
  BatchSchedule schedule(image.size(), cfg.batch_size, derive_seed(cfg.seeds.shuffle, 0));
  result.report.batches_per_epoch = schedule.batches();

  for (std::size_t epoch = 0; epoch < cfg.epochs_an; ++epoch) {
    schedule.reshuffle();
    double weighted = 0.0;
    for (std::size_t b = 0; b < schedule.batches(); ++b) {
      const auto idx = schedule.batch(b);
      try {
        Tensor y = gather_rows(image.pixels, idx);
        Tensor out = an_forward(result.theta, y, gather_neighbourhoods(image.pixels, neighbours, offsets.size(), idx));
        Tensor loss = mse_loss(out, y);
        opt.zero_grad();
        ad::backward(loss);
        opt.step(cfg.learning_rate);
        weighted += loss.item() * static_cast<double>(idx.size());
      } catch (const ad::NumericError& e) {
        dump_on_failure(cfg, named_parameters(result.theta), "an");
        throw TrainingError("AN training diverged at epoch " + std::to_string(epoch + 1) + ": " + e.what());
      }
    }
    result.report.an_loss.push_back(weighted / static_cast<double>(image.size()));
  }
  result.context = context_pixels(result.theta, image, offsets);
  result.report.an_seconds = seconds_since(start);
  save_stage(cfg, named_parameters(result.theta), "an.ckpt");
  return result;
}

double control_volume(const SpParams& sp, const std::vector<Tensor>& groups, const PcaProjection& proj) {
  return simplex_volume(sp_forward(sp, groups), proj).item();
}

ApSpResult train_ap_sp(const Eigen::MatrixXd& context, const HsImage& image, const EndmemberEnsemble& ensemble,
                       const TrainConfig& cfg) {
  cfg.validate();
  image.validate();
  const std::size_t bands = image.bands();
  const std::size_t n = image.size();
  const std::size_t m = ensemble.endmembers();
  if (m < 2) throw std::invalid_argument("train_ap_sp: need at least 2 endmembers");
  if (static_cast<std::size_t>(context.rows()) != bands || static_cast<std::size_t>(context.cols()) != n) {
    throw std::invalid_argument("train_ap_sp: context pixels do not match the image");
  }
  for (const auto& g : ensemble.groups) {
    if (static_cast<std::size_t>(g.cols()) != bands) throw std::invalid_argument("train_ap_sp: ensemble band count");
  }

  std::mt19937_64 ap_rng(derive_seed(cfg.seeds.params, 1));
  std::mt19937_64 sp_rng(derive_seed(cfg.seeds.params, 2));
  ApSpResult result;
  result.psi = ApParams::init(bands, m, resolve_heads(cfg.heads_ap, bands, "AP"), ap_rng);
  result.sp = SpParams::init(ensemble, sp_rng);
  result.sp.freeze_blocks(true);
  const std::size_t sp_heads = resolve_heads(cfg.heads_sp, bands, "SP");

  const auto groups = ensemble_tensors(ensemble);
  const PcaProjection proj = pca_fit(image.pixels, m - 1);
  BatchSchedule schedule(n, cfg.batch_size, derive_seed(cfg.seeds.shuffle, 1));
  result.report.batches_per_epoch = schedule.batches();

  auto run_stage = [&](Stage stage, std::size_t epochs, std::vector<double>& trace, const char* name) {
    std::vector<Tensor> params = result.psi.parameters();
    for (auto& q : result.sp.query_parameters()) params.push_back(q);
    if (stage == Stage::Two) {
      for (auto& p : result.sp.block_parameters()) params.push_back(p);
    }
    ad::Adam opt(params);
    for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
      schedule.reshuffle();
      double weighted = 0.0;
      for (std::size_t b = 0; b < schedule.batches(); ++b) {
        const auto idx = schedule.batch(b);
        try {
          Tensor abund = ap_forward(result.psi, gather_rows(context, idx));
          Tensor ems = sp_forward(result.sp, groups);
          Tensor recon = reconstruct(ems, abund);
          StageLossTerms terms = stage_loss(recon, gather_rows(image.pixels, idx), ems, cfg.weights, stage,
                                            result.report.control_volume, &proj);
          opt.zero_grad();
          ad::backward(terms.total);
          opt.step(cfg.learning_rate);
          weighted += terms.total.item() * static_cast<double>(idx.size());
          if (stage == Stage::Two) {
            result.report.stage2_volume.push_back(terms.volume);
            result.report.stage2_minvol.push_back(terms.minvol);
          }
        } catch (const ad::NumericError& e) {
          NamedTensors dump = named_parameters(result.psi);
          for (auto& t : named_parameters(result.sp)) dump.push_back(std::move(t));
          dump_on_failure(cfg, dump, name);
          throw TrainingError(std::string(name) + " training diverged at epoch " + std::to_string(epoch + 1) + ": " +
                              e.what());
        } catch (const std::domain_error& e) {
          throw TrainingError(std::string(name) + ": " + e.what());
        }
      }
      trace.push_back(weighted / static_cast<double>(n));
    }
  };

  auto start = Clock::now();
  run_stage(Stage::One, cfg.epochs_stage1, result.report.stage1_loss, "stage1");
  result.report.control_volume = control_volume(result.sp, groups, proj);
  result.report.stage1_seconds = seconds_since(start);
  {
    NamedTensors t = named_parameters(result.psi);
    for (auto& p : named_parameters(result.sp)) t.push_back(std::move(p));
    save_stage(cfg, t, "stage1.ckpt");
  }

  start = Clock::now();
  if (cfg.epochs_stage2 > 0) {
    result.sp = result.sp.expanded(sp_heads);
    run_stage(Stage::Two, cfg.epochs_stage2, result.report.stage2_loss, "stage2");
    NamedTensors t = named_parameters(result.psi);
    for (auto& p : named_parameters(result.sp)) t.push_back(std::move(p));
    save_stage(cfg, t, "stage2.ckpt");
  }
  result.report.stage2_seconds = seconds_since(start);

  start = Clock::now();
  result.abundances = predict_abundances(result.psi, context);
  result.signatures = to_matrix(sp_forward(result.sp, groups)).transpose();
  result.report.prediction_seconds = seconds_since(start);
  return result;
}

UnmixResult unmix(const HsImage& image, std::size_t endmembers, const TrainConfig& cfg,
                  const std::vector<EeaAlgorithm>& eeas, std::uint64_t eea_seed) {
  cfg.validate();
  image.validate();
  UnmixResult out;
  out.sets = run_eeas(eeas, image.pixels, endmembers, eea_seed);
  out.ensemble = build_ensembles(out.sets, endmembers);
  AnResult an = train_an(image, cfg);
  ApSpResult apsp = train_ap_sp(an.context, image, out.ensemble, cfg);
  out.theta = an.theta;
  out.psi = apsp.psi;
  out.sp = apsp.sp;
  out.abundances = std::move(apsp.abundances);
  out.signatures = std::move(apsp.signatures);
  out.report = std::move(apsp.report);
  out.report.an_loss = std::move(an.report.an_loss);
  out.report.an_seconds = an.report.an_seconds;
  save_stage(cfg, model_tensors(&out.theta, &out.psi, &out.sp), "model.ckpt");
  return out;
}

NamedTensors model_tensors(const AnParams* theta, const ApParams* psi, const SpParams* sp) {
  NamedTensors out;
  if (theta) {
    for (auto& t : named_parameters(*theta)) out.push_back(std::move(t));
  }
  if (psi) {
    for (auto& t : named_parameters(*psi)) out.push_back(std::move(t));
  }
  if (sp) {
    for (auto& t : named_parameters(*sp)) out.push_back(std::move(t));
  }
  return out;
}

}  // namespace specmix
