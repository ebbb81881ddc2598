#include "cli.hpp"

#include <CLI11.hpp>
#include <charconv>
#include <cmath>
#include <iostream>
#include <map>
#include <nlohmann/json.hpp>
#include <set>
#include <sstream>

#include "specmix/io.hpp"
#include "specmix/metrics.hpp"
#include "specmix/neighborhood.hpp"
#include "specmix/scene.hpp"

namespace specmix::cli {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const std::string& why) {
  throw ConfigError("config key '" + key + "': invalid value '" + value + "' (" + why + ")");
}

double to_double(const std::string& key, const std::string& value) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc{} || ptr != value.data() + value.size() || !std::isfinite(v)) bad_value(key, value, "expected a number");
  return v;
}

std::uint64_t to_uint(const std::string& key, const std::string& value) {
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc{} || ptr != value.data() + value.size()) bad_value(key, value, "expected a nonnegative integer");
  return v;
}

std::string fmt(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::string shape_name(NeighborhoodShape s) {
  switch (s) {
    case NeighborhoodShape::Doughnut:
      return "doughnut";
    case NeighborhoodShape::Circle:
      return "circle";
    case NeighborhoodShape::RandomNormal:
      return "random_normal";
  }
  return "circle";
}

std::string eea_list(const std::vector<EeaAlgorithm>& eeas) {
  std::string s;
  for (auto a : eeas) s += (s.empty() ? "" : ",") + to_string(a);
  return s;
}

// "20" for whole numbers, shortest round-trip otherwise.
std::string snr_tag(double snr) {
  if (snr == std::floor(snr) && std::abs(snr) < 1e9) return std::to_string(static_cast<long long>(snr));
  return fmt(snr);
}

void ensure_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
}

}  // namespace

const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = {
      {"endmembers", "", "number of endmembers M (required)"},
      {"learning_rate", "0.0001", "Adam step size"},
      {"batch_size", "400", "pixels per batch"},
      {"epochs_an", "100", "attention neighbourhood epochs"},
      {"epochs_stage1", "1000", "AP/SP stage-1 epochs"},
      {"epochs_stage2", "500", "AP/SP stage-2 epochs (0 skips stage 2)"},
      {"weight_mse", "1", "reconstruction MSE weight"},
      {"weight_sad", "0", "reconstruction SAD weight"},
      {"weight_nonneg", "0", "signature nonnegativity weight"},
      {"weight_minvol", "0", "stage-2 minimum-volume weight"},
      {"nbhd_shape", "circle", "circle | doughnut | random_normal"},
      {"nbhd_level", "4", "neighbourhood radius in pixels"},
      {"nbhd_seed", "0", "seed for random_normal offsets"},
      {"heads_an", "0", "AN heads (0: largest divisor of L up to 4)"},
      {"heads_ap", "0", "AP heads (0: auto)"},
      {"heads_sp", "0", "stage-2 SP heads (0: auto)"},
      {"seed_params", "0", "parameter initialisation seed"},
      {"seed_shuffle", "0", "batch shuffle seed"},
      {"seed_noise", "0", "noise seed for noisy scene variants"},
      {"seed_eea", "0", "VCA / N-FINDR seed"},
      {"eeas", "atgp,vca,nfindr", "endmember extraction algorithms"},
      {"image", "", "HSIF input (optional here, --image wins)"},
      {"out", "", "output directory (optional here, --out wins)"},
  };
  return keys;
}

void set_key(RunConfig& cfg, const std::string& key, const std::string& value) {
  auto& t = cfg.train;
  if (key == "endmembers") {
    const auto m = to_uint(key, value);
    if (m < 2) bad_value(key, value, "need at least 2 endmembers");
    cfg.endmembers = m;
  } else if (key == "learning_rate") {
    t.learning_rate = to_double(key, value);
    if (t.learning_rate <= 0.0) bad_value(key, value, "must be > 0");
  } else if (key == "batch_size") {
    t.batch_size = to_uint(key, value);
    if (t.batch_size == 0) bad_value(key, value, "must be >= 1");
  } else if (key == "epochs_an") {
    t.epochs_an = to_uint(key, value);
  } else if (key == "epochs_stage1") {
    t.epochs_stage1 = to_uint(key, value);
  } else if (key == "epochs_stage2") {
    t.epochs_stage2 = to_uint(key, value);
  } else if (key == "weight_mse" || key == "weight_sad" || key == "weight_nonneg" || key == "weight_minvol") {
    const double w = to_double(key, value);
    if (w < 0.0) bad_value(key, value, "weights must be >= 0");
    if (key == "weight_mse") t.weights.mse = w;
    if (key == "weight_sad") t.weights.sad = w;
    if (key == "weight_nonneg") t.weights.nonneg = w;
    if (key == "weight_minvol") t.weights.minvol = w;
  } else if (key == "nbhd_shape") {
    try {
      t.nbhd.shape = parse_neighborhood("shape=" + value).shape;
    } catch (const std::exception& e) {
      bad_value(key, value, e.what());
    }
  } else if (key == "nbhd_level") {
    const auto level = to_uint(key, value);
    if (level < 1 || level > 64) bad_value(key, value, "expected 1..64");
    t.nbhd.level = static_cast<int>(level);
  } else if (key == "nbhd_seed") {
    t.nbhd.seed = to_uint(key, value);
  } else if (key == "heads_an") {
    t.heads_an = to_uint(key, value);
  } else if (key == "heads_ap") {
    t.heads_ap = to_uint(key, value);
  } else if (key == "heads_sp") {
    t.heads_sp = to_uint(key, value);
  } else if (key == "seed_params") {
    t.seeds.params = to_uint(key, value);
  } else if (key == "seed_shuffle") {
    t.seeds.shuffle = to_uint(key, value);
  } else if (key == "seed_noise") {
    t.seeds.noise = to_uint(key, value);
  } else if (key == "seed_eea") {
    cfg.eea_seed = to_uint(key, value);
  } else if (key == "eeas") {
    try {
      cfg.eeas = parse_eea_list(value);
    } catch (const std::exception& e) {
      bad_value(key, value, e.what());
    }
  } else if (key == "image") {
    cfg.image = value;
  } else if (key == "out") {
    cfg.out = value;
  } else {
    throw ConfigError("unknown config key '" + key + "'");
  }
}

namespace {

// Applies every `key = value` line of text; completeness is checked by the caller.
void apply_config_text(RunConfig& cfg, const std::string& text) {
  std::set<std::string> seen;
  std::istringstream in(text);
  std::string line;
  for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(lineno) + ": expected 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    if (!seen.insert(key).second) throw ConfigError("duplicate config key '" + key + "'");
    set_key(cfg, key, trim(line.substr(eq + 1)));
  }
}

}  // namespace

RunConfig parse_run_config(const std::string& text) {
  RunConfig cfg;
  apply_config_text(cfg, text);
  require_complete(cfg);
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  return parse_run_config(std::string(bytes.begin(), bytes.end()));
}

void require_complete(const RunConfig& cfg) {
  if (!cfg.endmembers) throw ConfigError("missing config key 'endmembers'");
}

std::string to_config_text(const RunConfig& cfg) {
  const auto& t = cfg.train;
  std::ostringstream os;
  if (cfg.endmembers) os << "endmembers = " << *cfg.endmembers << '\n';
  os << "learning_rate = " << fmt(t.learning_rate) << '\n'
     << "batch_size = " << t.batch_size << '\n'
     << "epochs_an = " << t.epochs_an << '\n'
     << "epochs_stage1 = " << t.epochs_stage1 << '\n'
     << "epochs_stage2 = " << t.epochs_stage2 << '\n'
     << "weight_mse = " << fmt(t.weights.mse) << '\n'
     << "weight_sad = " << fmt(t.weights.sad) << '\n'
     << "weight_nonneg = " << fmt(t.weights.nonneg) << '\n'
     << "weight_minvol = " << fmt(t.weights.minvol) << '\n'
     << "nbhd_shape = " << shape_name(t.nbhd.shape) << '\n'
     << "nbhd_level = " << t.nbhd.level << '\n'
     << "nbhd_seed = " << t.nbhd.seed << '\n'
     << "heads_an = " << t.heads_an << '\n'
     << "heads_ap = " << t.heads_ap << '\n'
     << "heads_sp = " << t.heads_sp << '\n'
     << "seed_params = " << t.seeds.params << '\n'
     << "seed_shuffle = " << t.seeds.shuffle << '\n'
     << "seed_noise = " << t.seeds.noise << '\n'
     << "seed_eea = " << cfg.eea_seed << '\n'
     << "eeas = " << eea_list(cfg.eeas) << '\n';
  if (!cfg.image.empty()) os << "image = " << cfg.image.string() << '\n';
  if (!cfg.out.empty()) os << "out = " << cfg.out.string() << '\n';
  return os.str();
}

namespace {

struct SynthArgs {
  std::size_t m = 4, l = 144, h = 90, w = 90;
  std::uint64_t seed = 0;
  std::optional<double> snr;
  std::optional<std::uint64_t> noise_seed;
  std::string out;
};

void cmd_synth(const SynthArgs& a, std::ostream& out) {
  const Scene scene = synth_scene(a.m, a.l, a.h, a.w, a.seed);
  const std::filesystem::path dir(a.out);
  ensure_dir(dir);
  save_image(scene.image, dir / "scene.hsif");
  save_signatures_csv(scene.truth.signatures, dir / "endmembers.csv");
  save_abundances(scene.truth.abundances, dir / "abundances.csv");
  out << "wrote " << (dir / "scene.hsif").string() << " (" << a.h << "x" << a.w << "x" << a.l << ", M=" << a.m << ")\n";
  if (a.snr) {
    const HsImage noisy = add_noise(scene.image, NoiseSpec{*a.snr, a.noise_seed.value_or(a.seed)});
    const auto path = dir / ("scene_snr" + snr_tag(*a.snr) + ".hsif");
    save_image(noisy, path);
    out << "wrote " << path.string() << " (measured SNR " << fmt(measured_snr_db(scene.image, noisy)) << " dB)\n";
  }
}

struct EeaArgs {
  std::string image, algos = "atgp,vca,nfindr", out;
  std::size_t m = 0;
  std::uint64_t seed = 0;
};

void cmd_eea(const EeaArgs& a, std::ostream& out) {
  const HsImage image = load_image(a.image);
  const auto algos = parse_eea_list(a.algos);
  const auto sets = run_eeas(algos, image.pixels, a.m, a.seed);
  const EndmemberEnsemble ens = build_ensembles(sets, a.m);
  const std::filesystem::path dir(a.out);
  ensure_dir(dir);
  nlohmann::json summary = nlohmann::json::array();
  for (std::size_t s = 0; s < sets.size(); ++s) {
    // Columns reordered so column i of every file belongs to ensemble i.
    Eigen::MatrixXd aligned(image.pixels.rows(), static_cast<Eigen::Index>(a.m));
    std::vector<std::size_t> pixels(a.m);
    for (std::size_t i = 0; i < a.m; ++i) {
      const auto col = ens.assignment[s][i];
      aligned.col(static_cast<Eigen::Index>(i)) = sets[s].signatures.col(static_cast<Eigen::Index>(col));
      pixels[i] = sets[s].pixel_indices[col];
    }
    save_signatures_csv(aligned, dir / ("eea_" + to_string(sets[s].source) + ".csv"));
    summary.push_back({{"algorithm", to_string(sets[s].source)}, {"pixels", pixels}, {"degenerate", sets[s].degenerate}});
  }
  for (std::size_t i = 0; i < a.m; ++i) {
    save_matrix_csv(ens.groups[i], dir / ("ensemble_" + std::to_string(i) + ".csv"));
  }
  write_text(dir / "eea.json", summary.dump(2) + "\n");
  out << "wrote " << a.m << " ensembles of " << sets.size() << " candidates to " << dir.string() << "\n";
}

struct UnmixArgs {
  std::string image, config, out;
  std::optional<std::size_t> m, epochs_an, epochs_stage1, epochs_stage2, batch_size;
  std::optional<double> lr;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> sets;
};

void cmd_unmix(const UnmixArgs& a, std::ostream& out) {
  RunConfig cfg;
  {
    // Flags may supply `endmembers`, so completeness is checked after them.
    const auto bytes = read_file(a.config);
    apply_config_text(cfg, std::string(bytes.begin(), bytes.end()));
  }
  for (const auto& kv : a.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
    set_key(cfg, trim(kv.substr(0, eq)), trim(kv.substr(eq + 1)));
  }
  if (a.m) set_key(cfg, "endmembers", std::to_string(*a.m));
  if (a.epochs_an) cfg.train.epochs_an = *a.epochs_an;
  if (a.epochs_stage1) cfg.train.epochs_stage1 = *a.epochs_stage1;
  if (a.epochs_stage2) cfg.train.epochs_stage2 = *a.epochs_stage2;
  if (a.batch_size) set_key(cfg, "batch_size", std::to_string(*a.batch_size));
  if (a.lr) set_key(cfg, "learning_rate", fmt(*a.lr));
  if (a.seed) {
    cfg.train.seeds.params = cfg.train.seeds.shuffle = cfg.eea_seed = *a.seed;
  }
  if (!a.image.empty()) cfg.image = a.image;
  if (!a.out.empty()) cfg.out = a.out;
  require_complete(cfg);
  if (cfg.image.empty()) throw ConfigError("missing config key 'image' (or --image)");
  if (cfg.out.empty()) throw ConfigError("missing config key 'out' (or --out)");

  const HsImage image = load_image(cfg.image);
  ensure_dir(cfg.out);
  cfg.train.checkpoint_dir = cfg.out / "checkpoints";
  write_text(cfg.out / "config.cfg", to_config_text(cfg));
  const UnmixResult r = unmix(image, *cfg.endmembers, cfg.train, cfg.eeas, cfg.eea_seed);
  save_abundances(r.abundances, cfg.out / "abundances.csv");
  save_signatures_csv(r.signatures, cfg.out / "endmembers.csv");
  write_text(cfg.out / "report.json", r.report.to_json() + "\n");
  out << "wrote abundances.csv, endmembers.csv, report.json and checkpoints to " << cfg.out.string() << "\n";
}

struct EvalArgs {
  std::string pred, truth, json, format = "table";
};

void cmd_eval(const EvalArgs& a, std::ostream& out) {
  const std::filesystem::path pred(a.pred), truth(a.truth);
  const EvalResult r = evaluate(load_signatures_csv(pred / "endmembers.csv"), load_abundances(pred / "abundances.csv"),
                                load_signatures_csv(truth / "endmembers.csv"),
                                load_abundances(truth / "abundances.csv"));
  if (!a.json.empty()) write_text(a.json, to_json(r) + "\n");
  if (a.format == "json") {
    out << to_json(r) << "\n";
  } else {
    out << to_table(r);
  }
}

struct RenderArgs {
  std::string abundances, image, out;
  std::size_t h = 0, w = 0;
};

void cmd_render(const RenderArgs& a, std::ostream& out) {
  std::size_t h = a.h, w = a.w;
  if (!a.image.empty()) {
    const HsImage image = load_image(a.image);
    h = image.height;
    w = image.width;
  }
  if (h == 0 || w == 0) throw std::invalid_argument("render needs --h and --w (or --image)");
  const auto paths = render_abundance_maps(load_abundances(a.abundances), h, w, a.out);
  for (const auto& p : paths) out << p.string() << "\n";
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Hyperspectral unmixing by fusion of endmember extraction ensembles", "specmix"};
  app.require_subcommand(1);
  // -h is taken by --h (height) in synth and render
  app.set_help_flag("--help", "print this help and exit");
  app.set_help_all_flag("--help-all");

  SynthArgs synth;
  auto* s = app.add_subcommand("synth", "generate a synthetic scene with ground truth");
  s->add_option("--m", synth.m, "endmembers")->default_val(4);
  s->add_option("--l", synth.l, "bands")->default_val(144);
  s->add_option("--h", synth.h, "height")->default_val(90);
  s->add_option("--w", synth.w, "width")->default_val(90);
  s->add_option("--seed", synth.seed, "scene seed")->default_val(0);
  s->add_option("--snr", synth.snr, "also write a noisy copy at this SNR (dB)");
  s->add_option("--noise-seed", synth.noise_seed, "noise seed (defaults to --seed)");
  s->add_option("--out", synth.out, "output directory")->required();

  EeaArgs eea;
  auto* e = app.add_subcommand("eea", "run endmember extraction and build ensembles");
  e->add_option("--image", eea.image, "HSIF image")->required()->check(CLI::ExistingFile);
  e->add_option("--algos", eea.algos, "comma-separated atgp,vca,nfindr")->default_val("atgp,vca,nfindr");
  e->add_option("--m", eea.m, "endmembers")->required();
  e->add_option("--seed", eea.seed, "VCA / N-FINDR seed")->default_val(0);
  e->add_option("--out", eea.out, "output directory")->required();

  UnmixArgs unmix_args;
  auto* u = app.add_subcommand("unmix", "train the networks and predict abundances and endmembers");
  u->add_option("--image", unmix_args.image, "HSIF image (overrides the config)");
  u->add_option("--config", unmix_args.config, "key = value config file")->required()->check(CLI::ExistingFile);
  u->add_option("--out", unmix_args.out, "output directory (overrides the config)");
  u->add_option("--m", unmix_args.m, "endmembers");
  u->add_option("--epochs-an", unmix_args.epochs_an);
  u->add_option("--epochs-stage1", unmix_args.epochs_stage1);
  u->add_option("--epochs-stage2", unmix_args.epochs_stage2);
  u->add_option("--batch-size", unmix_args.batch_size);
  u->add_option("--lr", unmix_args.lr);
  u->add_option("--seed", unmix_args.seed, "sets seed_params, seed_shuffle and seed_eea");
  u->add_option("--set", unmix_args.sets, "override any config key, key=value (repeatable)");

  EvalArgs ev;
  auto* v = app.add_subcommand("eval", "compare a prediction directory against ground truth");
  v->add_option("--pred", ev.pred, "directory with endmembers.csv and abundances.csv")->required();
  v->add_option("--truth", ev.truth, "ground-truth directory, same layout")->required();
  v->add_option("--json", ev.json, "also write the JSON report here");
  v->add_option("--format", ev.format, "table | json")->check(CLI::IsMember({"table", "json"}))->default_val("table");

  RenderArgs rd;
  auto* r = app.add_subcommand("render", "write one grayscale PPM per abundance map");
  r->add_option("--abundances", rd.abundances, "abundances CSV (pixels x endmembers)")->required();
  r->add_option("--h", rd.h, "image height");
  r->add_option("--w", rd.w, "image width");
  r->add_option("--image", rd.image, "take height and width from this HSIF image");
  r->add_option("--out", rd.out, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& ex) {
    err << "specmix: error: " << ex.what() << "\n";
    return 2;
  }

  try {
    if (s->parsed()) cmd_synth(synth, out);
    if (e->parsed()) cmd_eea(eea, out);
    if (u->parsed()) cmd_unmix(unmix_args, out);
    if (v->parsed()) cmd_eval(ev, out);
    if (r->parsed()) cmd_render(rd, out);
  } catch (const std::exception& ex) {
    std::string msg = ex.what();
    for (auto& c : msg) {
      if (c == '\n') c = ' ';
    }
    err << "specmix: error: " << msg << "\n";
    return 1;
  }
  return 0;
}

}  // namespace specmix::cli
