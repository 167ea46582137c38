#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "advlab/ada.hpp"
#include "advlab/attacks.hpp"
#include "advlab/bddefense.hpp"
#include "advlab/dataset.hpp"
#include "advlab/metrics.hpp"
#include "advlab/model_io.hpp"
#include "advlab/network.hpp"
#include "advlab/poisoning.hpp"
#include "advlab/re.hpp"
#include "advlab/rng.hpp"
#include "advlab/runconfig.hpp"

namespace fs = std::filesystem;
using namespace advlab;
using cfg::RunConfig;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitAttacked = 1;
constexpr int kExitError = 2;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void require_file(const std::string& path) {
  if (!fs::exists(path)) throw UsageError(path + ": file not found");
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw UsageError(dir + ": cannot create output directory");
}

std::FILE* open_out(const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw UsageError(path + ": cannot open for writing");
  return f;
}

// ---- dataset / model loading from a config section ----

const std::vector<std::string> kDataKeys = {
    "data.kind",        "data.k",          "data.dim",        "data.latent_dim",
    "data.n_per_class", "data.separation", "data.seed",       "data.unit_box_scale",
    "data.off_sigma",   "data.images",     "data.labels",     "data.path",
    "data.shape",       "data.side",       "data.noise",      "data.brightness",
    "data.radius",      "data.jitter",     "data.blob_sigma2"};

// One config file often drives several commands of a pipeline, so every
// command validates against the full key vocabulary: unknown (misspelled)
// keys are a hard error, keys of sibling commands are allowed.
const std::vector<std::string> kAllKeys = [] {
  std::vector<std::string> keys = kDataKeys;
  for (const char* k :
       {"out",
        "model.hidden", "model.arch", "model.conv_maps", "model.conv_kernel", "model.seed",
        "model.path",
        "train.epochs", "train.batch", "train.lr", "train.seed",
        "attack.kind", "attack.eps", "attack.steps", "attack.alpha", "attack.c", "attack.k",
        "attack.iters", "attack.step", "attack.budget", "attack.targeted", "attack.target",
        "attack.seed", "attack.save_adv",
        "backdoor.kind", "backdoor.py", "backdoor.px", "backdoor.delta", "backdoor.eps",
        "backdoor.pattern", "backdoor.source", "backdoor.target", "backdoor.count",
        "backdoor.seed",
        "null.layers", "null.family", "null.components", "null.kmax", "null.seed",
        "bank.path", "detect.threshold", "detect.calibrate_fpr", "detect.expected_mode",
        "scan.mode", "scan.alpha", "scan.null", "scan.widths", "scan.threshold",
        "scan.stride", "scan.patch_iters",
        "perturb.target_fraction", "perturb.iters", "perturb.step",
        "re.stages", "re.lambda", "re.seed",
        "surrogate.hidden", "surrogate.epochs", "surrogate.batch", "surrogate.lr",
        "roc.attack_scores", "roc.clean_scores",
        "sweep.kind", "sweep.strengths", "sweep.threshold", "sweep.fpr", "sweep.seed",
        "sweep.cw_k", "sweep.cw_iters",
        "ccr.threshold"})
    keys.push_back(k);
  return keys;
}();

data::Dataset load_dataset(const RunConfig& c) {
  const std::string kind = c.get("data.kind");
  if (kind == "idx") {
    const std::string images = c.get("data.images"), labels = c.get("data.labels");
    require_file(images);
    require_file(labels);
    return data::load_idx(images, labels);
  }
  if (kind == "csv") {
    const std::string path = c.get("data.path");
    require_file(path);
    return data::load_csv(path, c.get_size_list_or("data.shape", {}));
  }
  if (kind == "synth_gaussians") {
    auto ds = data::synth_gaussians(
        static_cast<std::size_t>(c.get_int("data.k")),
        static_cast<std::size_t>(c.get_int("data.dim")),
        static_cast<std::size_t>(c.get_int("data.n_per_class")),
        c.get_double("data.separation"), c.get_seed_or("data.seed", 1));
    if (c.has("data.unit_box_scale"))
      ds = data::to_unit_box(ds, c.get_double("data.unit_box_scale"));
    return ds;
  }
  if (kind == "synth_manifold") {
    auto ds = data::synth_manifold_gaussians(
        static_cast<std::size_t>(c.get_int("data.k")),
        static_cast<std::size_t>(c.get_int("data.latent_dim")),
        static_cast<std::size_t>(c.get_int("data.dim")),
        static_cast<std::size_t>(c.get_int("data.n_per_class")),
        c.get_double("data.separation"), c.get_double_or("data.off_sigma", 0.15),
        c.get_seed_or("data.seed", 1));
    if (c.has("data.unit_box_scale"))
      ds = data::to_unit_box(ds, c.get_double("data.unit_box_scale"));
    return ds;
  }
  if (kind == "synth_blobs") {
    return data::synth_blob_images(
        static_cast<std::size_t>(c.get_int("data.k")),
        static_cast<std::size_t>(c.get_int("data.side")),
        static_cast<std::size_t>(c.get_int("data.n_per_class")),
        c.get_seed_or("data.seed", 1), c.get_double_or("data.noise", 0.05),
        c.get_double_or("data.brightness", 0.15), c.get_double_or("data.radius", 0.28),
        c.get_double_or("data.jitter", 0.5), c.get_double_or("data.blob_sigma2", 3.0));
  }
  throw UsageError("unknown data.kind '" + kind + "'");
}

nn::Network load_model(const RunConfig& c) {
  const std::string path = c.get("model.path");
  require_file(path);
  return io::load_network(path);
}

void csv_scores(const std::string& path, const std::vector<double>& scores) {
  std::FILE* f = open_out(path);
  for (double s : scores) std::fprintf(f, "%.17g\n", s);
  std::fclose(f);
}

std::vector<double> read_score_csv(const std::string& path) {
  require_file(path);
  std::vector<double> out;
  std::FILE* f = std::fopen(path.c_str(), "r");
  if (!f) throw UsageError(path + ": cannot open");
  double v;
  while (std::fscanf(f, "%lf", &v) == 1) out.push_back(v);
  std::fclose(f);
  if (out.empty()) throw UsageError(path + ": no scores found");
  return out;
}

// ---- commands ----

int cmd_train(const RunConfig& c, const std::string& out) {
  c.validate_keys(kAllKeys);
  ensure_dir(out);
  auto ds = load_dataset(c);

  nn::Network net;
  const std::string arch = c.get_or("model.arch", "mlp");
  const std::uint64_t mseed = c.get_seed_or("model.seed", 1);
  if (arch == "mlp") {
    net = nn::make_mlp(shape_numel(ds.samples.at(0).shape),
                       c.get_size_list_or("model.hidden", {32, 16}), ds.class_count, mseed);
    if (ds.samples.at(0).shape.size() != 1) {
      // keep the true input shape for image data
      std::vector<nn::Layer> layers = std::move(net.layers);
      net = nn::make_network(ds.samples[0].shape, std::move(layers), ds.class_count);
      nn::init_params(net, mseed);
    }
  } else if (arch == "conv") {
    const auto in = ds.samples.at(0).shape;
    if (in.size() != 3) throw UsageError("conv arch needs [C,H,W] data");
    const std::size_t maps = static_cast<std::size_t>(c.get_int_or("model.conv_maps", 6));
    const std::size_t kk = static_cast<std::size_t>(c.get_int_or("model.conv_kernel", 5));
    std::vector<nn::Layer> layers;
    layers.push_back(nn::conv2d(in[0], maps, kk, kk, kk / 2));
    layers.push_back(nn::relu());
    layers.push_back(nn::maxpool2x2());
    const std::size_t flat = maps * (in[1] / 2) * (in[2] / 2);
    std::vector<std::size_t> hidden = c.get_size_list_or("model.hidden", {16});
    std::size_t prev = flat;
    for (std::size_t h : hidden) {
      layers.push_back(nn::dense(prev, h));
      layers.push_back(nn::relu());
      prev = h;
    }
    layers.push_back(nn::dense(prev, ds.class_count));
    net = nn::make_network(in, std::move(layers), ds.class_count);
    nn::init_params(net, mseed);
  } else {
    throw UsageError("unknown model.arch '" + arch + "'");
  }

  nn::TrainConfig tc;
  tc.epochs = static_cast<std::size_t>(c.get_int_or("train.epochs", 50));
  tc.batch_size = static_cast<std::size_t>(c.get_int_or("train.batch", 32));
  tc.lr = c.get_double_or("train.lr", 0.1);
  tc.seed = c.get_seed_or("train.seed", 1);
  auto report = nn::train(net, ds, tc);

  io::save_network(net, out + "/model.bin");
  metrics::write_csv(out + "/loss.csv", {"epoch", "mean_loss"}, [&] {
    std::vector<std::vector<double>> rows;
    for (std::size_t e = 0; e < report.epoch_loss.size(); ++e)
      rows.push_back({static_cast<double>(e), report.epoch_loss[e]});
    return rows;
  }());
  cfg::write_manifest(out, "train", c);
  std::printf("trained %zu epochs, final loss %.6f, train accuracy %.4f\n",
              report.epoch_loss.size(), report.epoch_loss.back(), nn::accuracy(net, ds));
  return kExitOk;
}

int cmd_attack(const RunConfig& c, const std::string& out) {
  c.validate_keys(kAllKeys);
  ensure_dir(out);
  auto net = load_model(c);
  auto ds = load_dataset(c);
  const std::string kind = c.get("attack.kind");
  const bool targeted = c.get_int_or("attack.targeted", kind == "cw" || kind == "greedy") != 0;
  Rng rng(c.get_seed_or("attack.seed", 7));

  std::FILE* f = open_out(out + "/attacks.csv");
  std::fprintf(f, "id,label,target,decision,l2,linf,success,iterations\n");
  data::Dataset adv;
  adv.class_count = ds.class_count;
  adv.provenance = data::Provenance::Attacked;

  for (std::size_t i = 0; i < ds.size(); ++i) {
    const Tensor& x = ds.samples[i];
    const int y = ds.labels[i];
    int target = -1;
    if (targeted) {
      if (c.has("attack.target")) {
        target = static_cast<int>(c.get_int("attack.target"));
      } else {
        target = static_cast<int>(rng.below(ds.class_count));
        while (target == y) target = static_cast<int>(rng.below(ds.class_count));
      }
    }
    attack::AttackResult r;
    if (kind == "fgsm") {
      const double eps = c.get_double("attack.eps");
      r = targeted ? attack::fgsm_targeted(net, x, target, eps) : attack::fgsm(net, x, y, eps);
    } else if (kind == "pgd") {
      const double eps = c.get_double("attack.eps");
      const std::size_t steps = static_cast<std::size_t>(c.get_int_or("attack.steps", 10));
      const double alpha = c.get_double_or("attack.alpha", eps / 4.0);
      r = targeted ? attack::pgd_targeted(net, x, target, eps, steps, alpha)
                   : attack::pgd(net, x, y, eps, steps, alpha);
    } else if (kind == "cw") {
      attack::CwConfig cw;
      cw.c = c.get_double_or("attack.c", 4.0);
      cw.confidence = c.get_double_or("attack.k", 0.0);
      cw.iters = static_cast<std::size_t>(c.get_int_or("attack.iters", 300));
      cw.step = c.get_double_or("attack.step", 1e-3);
      r = attack::cw_l2(net, x, target, cw);
    } else if (kind == "greedy") {
      r = attack::greedy_pixel(net, x, target,
                               static_cast<std::size_t>(c.get_int_or("attack.budget", 10)));
    } else {
      std::fclose(f);
      throw UsageError("unknown attack.kind '" + kind + "'");
    }
    std::fprintf(f, "%zu,%d,%d,%d,%.17g,%.17g,%d,%zu\n", i, y, target, r.decision, r.l2,
                 r.linf, r.success ? 1 : 0, r.iterations);
    adv.push(std::move(r.x_adv), y);
  }
  std::fclose(f);
  if (c.get_int_or("attack.save_adv", 0) != 0) data::save_csv(adv, out + "/adv.csv");
  cfg::write_manifest(out, "attack", c);
  return kExitOk;
}

int cmd_poison(const RunConfig& c, const std::string& out) {
  c.validate_keys(kAllKeys);
  ensure_dir(out);
  auto ds = load_dataset(c);

  poison::BackdoorSpec spec;
  const std::string kind = c.get("backdoor.kind");
  spec.source_class = static_cast<int>(c.get_int("backdoor.source"));
  spec.target_class = static_cast<int>(c.get_int("backdoor.target"));
  spec.poison_count = static_cast<std::size_t>(c.get_int("backdoor.count"));
  if (kind == "single_pixel") {
    spec.kind = poison::PatternKind::SinglePixel;
    spec.py = static_cast<std::size_t>(c.get_int("backdoor.py"));
    spec.px = static_cast<std::size_t>(c.get_int("backdoor.px"));
    spec.delta = c.get_double_list_or("backdoor.delta", {0.25});
  } else if (kind == "additive_global") {
    spec.kind = poison::PatternKind::AdditiveGlobal;
    spec.eps = c.get_double("backdoor.eps");
    const std::string pattern = c.get_or("backdoor.pattern", "chessboard");
    if (pattern == "chessboard") {
      spec.pattern = poison::chessboard_pattern(ds.samples.at(0).shape);
    } else {
      require_file(pattern);
      spec.pattern = io::load_tensor(pattern);
    }
  } else {
    throw UsageError("unknown backdoor.kind '" + kind + "'");
  }

  auto res = poison::poison_trainset(ds, spec, c.get_seed_or("backdoor.seed", 1));
  data::save_csv(res.dataset, out + "/poisoned.csv");
  std::FILE* f = open_out(out + "/poison_indices.csv");
  for (std::size_t idx : res.poison_indices) std::fprintf(f, "%zu\n", idx);
  std::fclose(f);
  cfg::write_manifest(out, "poison", c);
  std::printf("poisoned %zu samples (dataset %zu -> %zu)\n", res.poison_indices.size(),
              ds.size(), res.dataset.size());
  return kExitOk;
}

int cmd_fit_null(const RunConfig& c, const std::string& out) {
  c.validate_keys(kAllKeys);
  ensure_dir(out);
  auto net = load_model(c);
  auto ds = load_dataset(c);

  std::vector<std::size_t> layers =
      c.get_size_list_or("null.layers", nn::default_detector_layers(net));
  ada::FitNullConfig fc;
  const std::string family = c.get_or("null.family", "gaussian");
  if (family == "gaussian")
    fc.family = density::Family::Gaussian;
  else if (family == "lognormal")
    fc.family = density::Family::Lognormal;
  else
    throw UsageError("unknown null.family '" + family + "'");
  fc.components = static_cast<std::size_t>(c.get_int_or("null.components", 0));
  fc.bic_kmax = static_cast<std::size_t>(c.get_int_or("null.kmax", 3));
  fc.seed = c.get_seed_or("null.seed", 1);

  auto bank = ada::fit_null(net, ds, layers, fc);
  io::save_bank(bank, out + "/bank.bin");
  cfg::write_manifest(out, "fit-null", c);
  std::printf("fitted %zu null models (%zu classes x %zu layers)\n", bank.models.size(),
              bank.class_count, bank.layer_ids.size());
  return kExitOk;
}

int cmd_detect(const RunConfig& c, const std::string& out) {
  c.validate_keys(kAllKeys);
  ensure_dir(out);
  auto net = load_model(c);
  const std::string bank_path = c.get("bank.path");
  require_file(bank_path);
  auto bank = io::load_bank(bank_path);
  auto ds = load_dataset(c);

  ada::AdaOptions opts;
  opts.expected_mode = c.get_int_or("detect.expected_mode", 0) != 0;

  std::vector<ada::AdaScore> scores;
  scores.reserve(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i)
    scores.push_back(ada::ada_statistic(net, bank, ds.samples[i], opts));

  double threshold;
  if (c.has("detect.calibrate_fpr")) {
    std::vector<double> maxes;
    for (const auto& s : scores) maxes.push_back(s.max_kl);
    threshold = ada::threshold_for_fpr(maxes, c.get_double("detect.calibrate_fpr"));
  } else {
    threshold = c.get_double("detect.threshold");
  }

  std::FILE* f = open_out(out + "/scores.csv");
  std::fprintf(f, "id");
  for (std::size_t l = 0; l < bank.layer_ids.size(); ++l)
    std::fprintf(f, ",kl_layer%zu", bank.layer_ids[l]);
  std::fprintf(f, ",max_kl,decision,source_estimate,detected\n");
  std::size_t detected = 0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const ada::AdaScore& score = scores[i];
    const bool hit = ada::detect(score, threshold);
    detected += hit;
    std::fprintf(f, "%zu", i);
    for (double kl : score.per_layer_kl) std::fprintf(f, ",%.17g", kl);
    int src = score.per_layer_source.empty() ? -1 : score.per_layer_source[0];
    for (std::size_t l = 0; l < score.per_layer_kl.size(); ++l)
      if (score.per_layer_kl[l] == score.max_kl) {
        src = score.per_layer_source[l];
        break;
      }
    std::fprintf(f, ",%.17g,%d,%d,%d\n", score.max_kl, score.c_star, src, hit ? 1 : 0);
  }
  std::fclose(f);
  cfg::write_manifest(out, "detect", c);
  std::FILE* tf = open_out(out + "/threshold.txt");
  std::fprintf(tf, "%.17g\n", threshold);
  std::fclose(tf);
  std::printf("detected %zu of %zu at threshold %.6g\n", detected, ds.size(), threshold);
  return kExitOk;
}

int cmd_scan_backdoor(const RunConfig& c, const std::string& out) {
  c.validate_keys(kAllKeys);
  ensure_dir(out);
  auto net = load_model(c);
  auto ds = load_dataset(c);
  const std::string mode = c.get_or("scan.mode", "imperceptible");

  bddef::ScanVerdict verdict;
  std::FILE* f = open_out(out + "/pairs.csv");
  if (mode == "imperceptible") {
    bddef::ImperceptibleScanConfig sc;
    sc.alpha = c.get_double_or("scan.alpha", 0.05);
    const std::string null_mode = c.get_or("scan.null", "gamma");
    sc.null_mode = null_mode == "empirical" ? bddef::NullMode::EmpiricalQuantile
                                            : bddef::NullMode::GammaOrderStat;
    sc.perturb.target_fraction = c.get_double_or("perturb.target_fraction", 0.9);
    sc.perturb.max_iters = static_cast<std::size_t>(c.get_int_or("perturb.iters", 600));
    sc.perturb.step = c.get_double_or("perturb.step", 0.05);
    std::vector<bddef::PairPerturbation> pairs;
    verdict = bddef::scan_imperceptible(net, ds, sc, &pairs);
    std::fprintf(f, "source,target,norm,fraction,feasible\n");
    for (const auto& p : pairs)
      std::fprintf(f, "%d,%d,%.17g,%.17g,%d\n", p.source, p.target, p.norm, p.fraction,
                   p.feasible ? 1 : 0);
    if (verdict.has_pattern) io::save_tensor(verdict.pattern, out + "/pattern.bin");
  } else if (mode == "perceptible") {
    bddef::PerceptibleScanConfig pc;
    pc.widths = c.get_size_list_or("scan.widths", {2, 3});
    pc.detect_threshold = c.get_double_or("scan.threshold", 0.9);
    pc.position_stride = static_cast<std::size_t>(c.get_int_or("scan.stride", 2));
    pc.patch_iters = static_cast<std::size_t>(c.get_int_or("scan.patch_iters", 60));
    std::vector<bddef::MamfEntry> curves;
    verdict = bddef::scan_perceptible(net, ds, pc, &curves);
    std::fprintf(f, "source,target,average_mamf");
    for (std::size_t w : pc.widths) std::fprintf(f, ",mamf_w%zu", w);
    std::fprintf(f, "\n");
    for (const auto& e : curves) {
      std::fprintf(f, "%d,%d,%.17g", e.source, e.target, e.average);
      for (double v : e.per_width) std::fprintf(f, ",%.17g", v);
      std::fprintf(f, "\n");
    }
  } else {
    std::fclose(f);
    throw UsageError("unknown scan.mode '" + mode + "'");
  }
  std::fclose(f);

  std::FILE* rep = open_out(out + "/report.txt");
  std::fprintf(rep, "mode = %s\nattacked = %d\nstatistic = %.17g\np_value = %.17g\n",
               mode.c_str(), verdict.attacked ? 1 : 0, verdict.statistic, verdict.p_value);
  if (verdict.attacked)
    std::fprintf(rep, "inferred_source = %d\ninferred_target = %d\n", verdict.source,
                 verdict.target);
  if (!verdict.note.empty()) std::fprintf(rep, "note = %s\n", verdict.note.c_str());
  std::fclose(rep);
  cfg::write_manifest(out, "scan-backdoor", c);
  std::printf("scan verdict: %s (p=%.4g)\n", verdict.attacked ? "ATTACKED" : "clean",
              verdict.p_value);
  return verdict.attacked ? kExitAttacked : kExitOk;
}

int cmd_re_sim(const RunConfig& c, const std::string& out) {
  c.validate_keys(kAllKeys);
  ensure_dir(out);
  auto victim = load_model(c);
  auto seeds = load_dataset(c);

  re::ReConfig rc;
  rc.stages = static_cast<std::size_t>(c.get_int_or("re.stages", 5));
  rc.lambda = c.get_double_or("re.lambda", 0.37);
  rc.seed = c.get_seed_or("re.seed", 1);
  rc.surrogate_hidden = c.get_size_list_or("surrogate.hidden", {32});
  rc.surrogate_train.epochs = static_cast<std::size_t>(c.get_int_or("surrogate.epochs", 40));
  rc.surrogate_train.batch_size = static_cast<std::size_t>(c.get_int_or("surrogate.batch", 32));
  rc.surrogate_train.lr = c.get_double_or("surrogate.lr", 0.1);

  auto res = re::re_attack(victim, seeds, rc);
  io::save_network(res.surrogate, out + "/surrogate.bin");

  std::FILE* f = open_out(out + "/schedule.csv");
  std::fprintf(f, "stage,new_queries,dedup_dropped\n");
  for (std::size_t k = 0; k < res.log.new_before_dedup.size(); ++k)
    std::fprintf(f, "%zu,%zu,%zu\n", k, res.log.new_before_dedup[k], res.log.dedup_dropped[k]);
  std::fclose(f);

  // per-stage query logs: features then the victim decision
  for (std::size_t k = 0; k < res.log.stage_queries.size(); ++k) {
    data::Dataset stage;
    stage.class_count = victim.class_count;
    for (std::size_t i = 0; i < res.log.stage_queries[k].size(); ++i)
      stage.push(res.log.stage_queries[k][i], res.log.stage_decisions[k][i]);
    data::save_csv(stage, out + "/queries_stage" + std::to_string(k) + ".csv");
  }
  cfg::write_manifest(out, "re-sim", c);
  std::printf("re-sim: %zu stages, final training set %zu queries\n", rc.stages,
              res.log.stage_queries.back().size());
  return kExitOk;
}

int cmd_eval(const std::string& sub, const RunConfig& c, const std::string& out) {
  ensure_dir(out);
  if (sub == "roc") {
    c.validate_keys(kAllKeys);
    auto attacks = read_score_csv(c.get("roc.attack_scores"));
    auto cleans = read_score_csv(c.get("roc.clean_scores"));
    auto curve = metrics::roc(attacks, cleans);
    std::vector<std::vector<double>> rows;
    for (const auto& [fpr, tpr] : curve.points) rows.push_back({fpr, tpr});
    metrics::write_csv(out + "/roc.csv", {"fpr", "tpr"}, rows);
    std::FILE* f = open_out(out + "/auc.txt");
    std::fprintf(f, "%.17g\n", curve.auc);
    std::fclose(f);
    cfg::write_manifest(out, "eval-roc", c);
    std::printf("auc = %.6f\n", curve.auc);
    return kExitOk;
  }
  if (sub == "sweep") {
    c.validate_keys(kAllKeys);
    auto net = load_model(c);
    const std::string bank_path = c.get("bank.path");
    require_file(bank_path);
    auto bank = io::load_bank(bank_path);
    auto ds = load_dataset(c);

    auto score = [&](const Tensor& x) { return ada::ada_statistic(net, bank, x).max_kl; };
    double threshold;
    if (c.has("sweep.threshold")) {
      threshold = c.get_double("sweep.threshold");
    } else {
      std::vector<double> clean_scores;
      for (const auto& x : ds.samples) clean_scores.push_back(score(x));
      threshold = ada::threshold_for_fpr(clean_scores, c.get_double_or("sweep.fpr", 0.05));
    }

    metrics::SweepConfig sc;
    const std::string kind = c.get_or("sweep.kind", "fgsm");
    if (kind == "fgsm")
      sc.kind = metrics::SweepAttack::Fgsm;
    else if (kind == "pgd")
      sc.kind = metrics::SweepAttack::Pgd;
    else if (kind == "cw")
      sc.kind = metrics::SweepAttack::CwByC;
    else
      throw UsageError("unknown sweep.kind '" + kind + "'");
    sc.strengths = c.get_double_list_or("sweep.strengths", {0.02, 0.05, 0.1, 0.2, 0.3});
    sc.seed = c.get_seed_or("sweep.seed", 7);
    sc.cw_k = c.get_double_or("sweep.cw_k", 0.0);
    sc.cw_iters = static_cast<std::size_t>(c.get_int_or("sweep.cw_iters", 200));

    auto curve = metrics::effective_success_curve(net, score, threshold, ds, sc);
    std::vector<std::vector<double>> rows;
    for (const auto& pt : curve)
      rows.push_back({pt.strength, pt.misclassify_rate, pt.detection_rate, pt.effective_rate,
                      pt.mean_score});
    metrics::write_csv(out + "/sweep.csv",
                       {"strength", "misclassify_rate", "detection_rate", "effective_rate",
                        "mean_score"},
                       rows);
    cfg::write_manifest(out, "eval-sweep", c);
    std::printf("sweep over %zu strengths written (threshold %.6g)\n", curve.size(), threshold);
    return kExitOk;
  }
  if (sub == "ccr") {
    c.validate_keys(kAllKeys);
    auto net = load_model(c);
    const std::string bank_path = c.get("bank.path");
    require_file(bank_path);
    auto bank = io::load_bank(bank_path);
    auto ds = load_dataset(c);
    auto score = [&](const Tensor& x) { return ada::ada_statistic(net, bank, x).max_kl; };
    auto res =
        metrics::conditional_correct_rate(net, score, c.get_double("ccr.threshold"), ds);
    metrics::write_csv(out + "/ccr.csv", {"kept", "rate"},
                       {{static_cast<double>(res.kept), res.rate}});
    cfg::write_manifest(out, "eval-ccr", c);
    if (res.kept == 0)
      std::printf("no samples below threshold\n");
    else
      std::printf("conditional correct rate %.6f over %zu samples\n", res.rate, res.kept);
    return kExitOk;
  }
  throw UsageError("unknown eval subcommand '" + sub + "'");
}

RunConfig assemble_config(const std::string& config_path,
                          const std::vector<std::string>& overrides) {
  RunConfig c = config_path.empty() ? RunConfig() : RunConfig::parse_file(config_path);
  for (const std::string& kv : overrides) {
    const std::size_t eq = kv.find('=');
    if (eq == std::string::npos)
      throw UsageError("override '" + kv + "' is not of the form key=value");
    c.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"advlab: desk-scale adversarial learning laboratory"};
  app.require_subcommand(1);

  std::string config_path, out_dir = "run";
  std::vector<std::string> overrides;
  std::string eval_sub;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "key = value run configuration file");
    sub->add_option("--set", overrides, "config overrides (key=value)");
    sub->add_option("--out", out_dir, "output directory");
  };

  auto* train = app.add_subcommand("train", "train a classifier");
  auto* atk = app.add_subcommand("attack", "craft test-time evasion attacks");
  auto* poison_cmd = app.add_subcommand("poison", "embed a backdoor into a training set");
  auto* fit_null = app.add_subcommand("fit-null", "fit per-class null density models");
  auto* detect = app.add_subcommand("detect", "score samples with the ADA statistic");
  auto* scan = app.add_subcommand("scan-backdoor", "post-training backdoor scan");
  auto* resim = app.add_subcommand("re-sim", "reverse-engineering attack simulation");
  auto* eval_cmd = app.add_subcommand("eval", "metrics: roc | sweep | ccr");
  eval_cmd->add_option("subcommand", eval_sub, "roc | sweep | ccr")->required();
  for (CLI::App* sub : {train, atk, poison_cmd, fit_null, detect, scan, resim, eval_cmd})
    add_common(sub);

  // shorthand flags that mirror the common config keys
  std::string atk_kind, atk_c, atk_k, atk_eps, re_stages, re_lambda;
  atk->add_option("--kind", atk_kind, "attack kind (fgsm|pgd|cw|greedy)");
  atk->add_option("--c", atk_c, "cw tradeoff constant");
  atk->add_option("--k", atk_k, "cw confidence margin");
  atk->add_option("--eps", atk_eps, "fgsm/pgd L-inf budget");
  resim->add_option("--stages", re_stages, "augmentation stages");
  resim->add_option("--lambda", re_lambda, "query step size");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitError;
  }

  try {
    RunConfig c = assemble_config(config_path, overrides);
    if (!atk_kind.empty()) c.set("attack.kind", atk_kind);
    if (!atk_c.empty()) c.set("attack.c", atk_c);
    if (!atk_k.empty()) c.set("attack.k", atk_k);
    if (!atk_eps.empty()) c.set("attack.eps", atk_eps);
    if (!re_stages.empty()) c.set("re.stages", re_stages);
    if (!re_lambda.empty()) c.set("re.lambda", re_lambda);
    if (!c.has("out")) c.set("out", out_dir);
    const std::string out = c.get("out");
    if (train->parsed()) return cmd_train(c, out);
    if (atk->parsed()) return cmd_attack(c, out);
    if (poison_cmd->parsed()) return cmd_poison(c, out);
    if (fit_null->parsed()) return cmd_fit_null(c, out);
    if (detect->parsed()) return cmd_detect(c, out);
    if (scan->parsed()) return cmd_scan_backdoor(c, out);
    if (resim->parsed()) return cmd_re_sim(c, out);
    if (eval_cmd->parsed()) return cmd_eval(eval_sub, c, out);
    std::fprintf(stderr, "no subcommand\n");
    return kExitError;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitError;
  }
}
