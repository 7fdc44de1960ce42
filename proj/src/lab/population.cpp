#include <algorithm>
#include <cmath>
#include <map>
#include <random>

#include "core/container.hpp"
#include "core/errors.hpp"
#include "core/log.hpp"
#include "lab/lab.hpp"

namespace velinv::lab {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::uint64_t kBootstrapStream = 0xb0075ULL;

json instance_json(const InstanceResult& r) {
  return {{"index", r.index},
          {"seed", r.seed},
          {"status", r.valid ? "ok" : "diverged"},
          {"test_ssim", r.test_ssim},
          {"test_mse", r.test_mse},
          {"selected_epoch", r.selected_epoch},
          {"checkpoint", r.checkpoint},
          {"error", r.error}};
}

InstanceResult instance_from_json(const json& j) {
  InstanceResult r;
  r.index = j.at("index").get<int>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.valid = j.at("status").get<std::string>() == "ok";
  r.test_ssim = j.at("test_ssim").get<double>();
  r.test_mse = j.at("test_mse").get<double>();
  r.selected_epoch = j.at("selected_epoch").get<int>();
  r.checkpoint = j.at("checkpoint").get<std::string>();
  r.error = j.at("error").get<std::string>();
  return r;
}

void finalize(PopulationResult& pop) {
  pop.test_ssims.clear();
  pop.checkpoint_paths.clear();
  for (const auto& inst : pop.instances) {
    if (!inst.valid) continue;
    pop.test_ssims.push_back(inst.test_ssim);
    pop.checkpoint_paths.push_back(inst.checkpoint);
  }
  if (!pop.test_ssims.empty()) {
    pop.mean = stats::mean(pop.test_ssims);
    pop.std = stats::stddev(pop.test_ssims);
  }
  pop.valid = pop.test_ssims.size() >= 3;
  pop.invalid_reason =
      pop.valid ? "" : "only " + std::to_string(pop.test_ssims.size()) + " surviving instances (need 3)";
}

}  // namespace

void AblationConfig::validate() const {
  if (shots != 1 && shots != 3 && shots != 9) throw ConfigError("shots must be 1, 3 or 9");
  if (bootstrap_count < 1) throw ConfigError("bootstrap_count must be at least 1");
}

std::string AblationConfig::label() const {
  return "s" + std::to_string(shots) + "_f" + (use_fourier ? "1" : "0") + "_r" + (use_reg ? "1" : "0");
}

std::uint64_t AblationConfig::code() const {
  return static_cast<std::uint64_t>(shots) * 4 + (use_fourier ? 2 : 0) + (use_reg ? 1 : 0);
}

std::uint64_t AblationConfig::instance_seed(int instance) const {
  return scene::derive_seed(scene::derive_seed(seed, code()), static_cast<std::uint64_t>(instance));
}

json to_json(const AblationConfig& c) {
  return {{"shots", c.shots},
          {"fourier", c.use_fourier},
          {"regularization", c.use_reg},
          {"bootstrap_count", c.bootstrap_count},
          {"seed", c.seed},
          {"label", c.label()}};
}

std::vector<AblationConfig> ablation_matrix(const std::vector<int>& shots, int bootstrap_count, std::uint64_t seed) {
  std::vector<AblationConfig> out;
  for (int s : shots) {
    for (bool f : {false, true}) {
      for (bool r : {false, true}) {
        AblationConfig c{s, f, r, bootstrap_count, seed};
        c.validate();
        out.push_back(c);
      }
    }
  }
  return out;
}

std::vector<std::size_t> bootstrap_indices(std::size_t n, std::uint64_t seed) {
  if (n == 0) throw ConfigError("cannot bootstrap an empty training fold");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  std::vector<std::size_t> out(n);
  for (auto& v : out) v = pick(rng);
  return out;
}

std::vector<std::string> bootstrap_resample(const std::vector<std::string>& train_ids, std::uint64_t seed) {
  const auto idx = bootstrap_indices(train_ids.size(), seed);
  std::vector<std::string> out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back(train_ids[i]);
  return out;
}

features::FeatureConfig feature_config(const AblationConfig& cfg, const LabSettings& s) {
  features::FeatureConfig f;
  f.use_fourier = cfg.use_fourier;
  f.shot_subset = features::subset_for_count(cfg.shots);
  f.resample_height = s.resample_height;
  return f;
}

FoldSet load_folds(const scene::DatasetManifest& manifest, const features::FeatureConfig& fcfg,
                   const NormalizationSpec& norm, int jobs) {
  FoldSet f;
  f.train = net::ExampleSet::load(manifest, scene::Split::Train, fcfg, norm, jobs);
  f.validation = net::ExampleSet::load(manifest, scene::Split::Validation, fcfg, norm, jobs);
  f.test = net::ExampleSet::load(manifest, scene::Split::Test, fcfg, norm, jobs);
  if (f.train.empty() || f.validation.empty() || f.test.empty()) {
    throw ConfigError("dataset needs non-empty train, validation and test folds");
  }
  return f;
}

PopulationResult run_population(const AblationConfig& cfg, const FoldSet& folds, const LabSettings& s) {
  cfg.validate();
  if (s.work_dir.empty()) throw ConfigError("lab work directory is not set");
  const fs::path rel_dir = fs::path("populations") / cfg.label();
  const fs::path dir = s.work_dir / rel_dir;
  fs::create_directories(dir);
  const features::FeatureConfig fcfg = feature_config(cfg, s);

  PopulationResult pop;
  pop.config = cfg;
  for (int k = 0; k < cfg.bootstrap_count; ++k) {
    const std::string stem = "inst" + std::to_string(k);
    const fs::path ckpt = dir / (stem + ".wts");
    const fs::path result = dir / (stem + ".json");
    InstanceResult inst;
    inst.index = k;
    inst.seed = cfg.instance_seed(k);
    inst.checkpoint = (rel_dir / (stem + ".wts")).generic_string();

    if (fs::exists(result)) {
      try {
        InstanceResult prev = instance_from_json(read_json(result));
        if (!prev.valid || fs::exists(ckpt)) {
          pop.instances.push_back(prev);
          continue;
        }
      } catch (const std::exception&) {
        // fall through: rebuild the record from the checkpoint or retrain
      }
    }
    if (fs::exists(ckpt)) {
      try {
        const net::Checkpoint c = net::load_checkpoint(ckpt);
        const auto ev = net::evaluate(c.weights, folds.test, s.jobs);
        inst.valid = true;
        inst.test_ssim = ev.mean_ssim;
        inst.test_mse = ev.mean_mse;
        inst.selected_epoch = c.extra.value("selected_epoch", -1);
        write_json(result, instance_json(inst));
        pop.instances.push_back(inst);
        continue;
      } catch (const DataError& e) {
        log::info(cfg.label(), " ", stem, ": unreadable checkpoint, retraining (", e.what(), ")");
      }
    }

    net::TrainConfig tc = s.train;
    tc.seed = inst.seed;
    tc.reg_lambda = cfg.use_reg ? s.train.reg_lambda : 0.0;
    tc.jobs = s.jobs;
    net::NetworkConfig nc = s.network;
    nc.in_channels = folds.train.channels();
    const auto idx = bootstrap_indices(folds.train.size(), scene::derive_seed(inst.seed, kBootstrapStream));
    log::info(cfg.label(), " ", stem, ": training");
    try {
      net::TrainResult tr = net::train(folds.train, idx, folds.validation, nc, tc);
      const auto ev = net::evaluate(tr.weights, folds.test, s.jobs);
      inst.valid = true;
      inst.test_ssim = ev.mean_ssim;
      inst.test_mse = ev.mean_mse;
      inst.selected_epoch = tr.history.selected_epoch;
      net::Checkpoint c{tr.weights, fcfg, s.norm,
                        {{"selected_epoch", tr.history.selected_epoch},
                         {"history", net::to_json(tr.history)},
                         {"ablation", to_json(cfg)},
                         {"instance", k},
                         {"instance_seed", inst.seed}}};
      net::save_checkpoint(ckpt, c);
      net::write_curves_csv(dir / (stem + "_curves.csv"), tr.history);
    } catch (const NumericalError& e) {
      inst.valid = false;
      inst.error = e.what();
      log::info(cfg.label(), " ", stem, ": ", e.what());
    }
    write_json(result, instance_json(inst));
    pop.instances.push_back(inst);
  }
  finalize(pop);
  write_json(dir / "population.json",
             {{"config", to_json(cfg)},
              {"test_ssims", pop.test_ssims},
              {"mean", pop.mean},
              {"std", pop.std},
              {"valid", pop.valid},
              {"invalid_reason", pop.invalid_reason}});
  return pop;
}

PopulationResult run_population(const AblationConfig& cfg, const scene::DatasetManifest& manifest,
                                const LabSettings& s) {
  const FoldSet folds = load_folds(manifest, feature_config(cfg, s), s.norm, s.jobs);
  return run_population(cfg, folds, s);
}

Array2f ensemble_predict(const std::vector<net::NetworkWeights>& members, const Tensor3& x) {
  if (members.empty()) throw ConfigError("ensemble needs at least one member");
  for (const auto& m : members) {
    if (!(m.config == members.front().config)) throw ConfigError("ensemble members have different network configs");
  }
  std::vector<double> acc;
  std::size_t rows = 0, cols = 0;
  for (const auto& m : members) {
    const Array2f p = net::forward_pass(m, x);
    if (acc.empty()) {
      acc.assign(p.size(), 0.0);
      rows = p.rows();
      cols = p.cols();
    }
    for (std::size_t i = 0; i < p.size(); ++i) acc[i] += p.values()[i];
  }
  Array2f out(rows, cols);
  const double inv = 1.0 / static_cast<double>(members.size());
  for (std::size_t i = 0; i < acc.size(); ++i) out.values()[i] = static_cast<float>(acc[i] * inv);
  return out;
}

EnsembleResult evaluate_ensemble(const PopulationResult& pop, const std::vector<net::NetworkWeights>& members,
                                 const net::ExampleSet& test) {
  if (members.empty()) throw ConfigError("ensemble needs at least one member");
  if (test.empty()) throw ConfigError("ensemble evaluation needs a test fold");
  EnsembleResult r;
  r.config = pop.config;
  r.members = pop.checkpoint_paths;
  const double inv_k = 1.0 / static_cast<double>(members.size());
  double ens_mse = 0.0, member_mse = 0.0, ens_ssim = 0.0, member_ssim = 0.0;
  for (const auto& e : test.items) {
    std::vector<Array2f> preds;
    for (const auto& m : members) preds.push_back(net::forward_pass(m, e.input));
    const std::size_t n = e.target.size();
    std::vector<double> mean(n, 0.0);
    for (const auto& p : preds) {
      for (std::size_t i = 0; i < n; ++i) mean[i] += p.values()[i];
    }
    double se_ens = 0.0, se_members = 0.0;
    Array2f ens(e.target.rows(), e.target.cols());
    for (std::size_t i = 0; i < n; ++i) {
      mean[i] *= inv_k;
      ens.values()[i] = static_cast<float>(mean[i]);
      const double d = mean[i] - e.target.values()[i];
      se_ens += d * d;
    }
    for (const auto& p : preds) {
      double se = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double d = static_cast<double>(p.values()[i]) - e.target.values()[i];
        se += d * d;
      }
      se_members += se;
      member_ssim += stats::ssim(net::clamp_unit(p), e.target);
    }
    ens_mse += se_ens / static_cast<double>(n);
    member_mse += se_members * inv_k / static_cast<double>(n);
    ens_ssim += stats::ssim(net::clamp_unit(ens), e.target);
  }
  const double inv_n = 1.0 / static_cast<double>(test.size());
  r.ensemble_mse = ens_mse * inv_n;
  r.mean_member_mse = member_mse * inv_n;
  r.ensemble_ssim = ens_ssim * inv_n;
  r.mean_member_ssim = member_ssim * inv_k * inv_n;
  // Squared error is convex, so averaging can only help; allow for rounding alone.
  if (r.ensemble_mse > r.mean_member_mse * (1.0 + 1e-12)) {
    throw NumericalError("ensemble MSE " + std::to_string(r.ensemble_mse) + " exceeds mean member MSE " +
                         std::to_string(r.mean_member_mse) + " for " + pop.config.label());
  }
  return r;
}

AblationReport run_ablation(const std::vector<AblationConfig>& matrix, const scene::DatasetManifest& manifest,
                            const LabSettings& s) {
  if (matrix.empty()) throw ConfigError("ablation matrix is empty");
  AblationReport rep;
  rep.master_seed = matrix.front().seed;
  std::pair<int, bool> loaded_key{-1, false};
  FoldSet folds;
  for (const auto& cfg : matrix) {
    const std::pair<int, bool> key{cfg.shots, cfg.use_fourier};
    if (key != loaded_key) {
      folds = FoldSet{};  // release the previous configuration's tensors first
      folds = load_folds(manifest, feature_config(cfg, s), s.norm, s.jobs);
      loaded_key = key;
    }
    log::info("population ", cfg.label());
    PopulationResult pop = run_population(cfg, folds, s);
    if (pop.valid) {
      std::vector<net::NetworkWeights> members;
      for (const auto& p : pop.checkpoint_paths) members.push_back(net::load_checkpoint(s.work_dir / p).weights);
      rep.ensembles.push_back(evaluate_ensemble(pop, members, folds.test));
    }
    rep.populations.push_back(std::move(pop));
  }
  rep.significance = significance_pipeline(rep.populations, s.alpha);
  rep.settings = {{"network", net::to_json(s.network)},
                  {"epochs_max", s.train.epochs_max},
                  {"lr", s.train.lr},
                  {"batch_size", s.train.batch_size},
                  {"reg_lambda_on", s.train.reg_lambda},
                  {"resample_height", s.resample_height},
                  {"normalization", {{"vmin", s.norm.vmin}, {"vmax", s.norm.vmax}}},
                  {"alpha", s.alpha},
                  {"per_instance_ssim", "mean over test-fold samples"}};
  emit_report(rep, s.work_dir / "report");
  return rep;
}

}  // namespace velinv::lab
