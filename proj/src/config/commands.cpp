#include "config/commands.hpp"

#include <cstdio>
#include <map>

#include "core/container.hpp"
#include "core/errors.hpp"
#include "core/log.hpp"
#include "net/loss.hpp"
#include "render/render.hpp"
#include "stats/stats.hpp"

namespace velinv::config {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

scene::DatasetManifest open_dataset(const RunConfig& cfg) {
  if (!fs::exists(cfg.data_dir / "manifest.json")) {
    throw DataError("no dataset manifest under " + cfg.data_dir.string() + " (run gen first)");
  }
  return scene::DatasetManifest::load(cfg.data_dir);
}

std::string short_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

/// Mean normalized velocity map of the training fold.
Array2f train_mean_target(const scene::DatasetManifest& m, const NormalizationSpec& norm) {
  const auto ids = m.ids(scene::Split::Train);
  if (ids.empty()) throw DataError("training fold is empty");
  std::vector<double> acc;
  std::size_t rows = 0, cols = 0;
  for (const auto& id : ids) {
    const Array2f t = normalize_velocity(load_model(m.model_path(id)), norm);
    if (acc.empty()) {
      acc.assign(t.size(), 0.0);
      rows = t.rows();
      cols = t.cols();
    }
    if (t.size() != acc.size()) throw DataError("training models differ in shape");
    for (std::size_t i = 0; i < t.size(); ++i) acc[i] += t.values()[i];
  }
  Array2f out(rows, cols);
  for (std::size_t i = 0; i < acc.size(); ++i) out.values()[i] = static_cast<float>(acc[i] / ids.size());
  return out;
}

}  // namespace

json cmd_gen(const RunConfig& cfg) {
  cfg.validate();
  std::vector<std::string> regenerated;
  const auto m = scene::gen_dataset(cfg.samples, cfg.scene, cfg.grid, cfg.acquisition(), cfg.data_dir,
                                    cfg.gen_options(), &regenerated);
  return {{"command", "gen"},
          {"root", m.root.string()},
          {"samples", m.entries.size()},
          {"generated", regenerated.size()},
          {"train", m.ids(scene::Split::Train).size()},
          {"validation", m.ids(scene::Split::Validation).size()},
          {"test", m.ids(scene::Split::Test).size()}};
}

json cmd_simulate(const RunConfig& cfg, const SimulateRequest& req) {
  cfg.validate();
  if (req.model.empty()) throw ConfigError("simulate needs a velocity model file");
  if (req.output.empty()) throw ConfigError("simulate needs an output path");
  NormalizationSpec norm;
  const VelocityModel vm = load_model(req.model, &norm);
  vm.validate();
  const auto acq =
      forward::AcquisitionSpec::equidistant(vm.grid.nx, cfg.emitters, cfg.t_total, cfg.dt_record, cfg.cfl);
  SeismicRecord rec = forward::simulate_record(vm, acq, cfg.source(), cfg.solver, cfg.jobs);
  rec.model_id = req.model.stem().string();
  if (req.output.has_parent_path()) fs::create_directories(req.output.parent_path());
  save_record(req.output, rec);
  json out = {{"command", "simulate"},
              {"record", req.output.string()},
              {"shots", rec.shots.size()},
              {"receivers", rec.shots.front().n_receivers()},
              {"samples", rec.shots.front().n_samples()}};
  if (req.snapshots) {
    if (cfg.snapshot_times.empty()) throw ConfigError("render.snapshot_times is empty");
    const int n_shots = static_cast<int>(acq.emitter_columns.size());
    const int shot = req.snapshot_shot < 0 ? n_shots / 2 : req.snapshot_shot;
    if (shot >= n_shots) throw ConfigError("snapshot shot index out of range");
    const auto src = forward::SourceSpec::with_frequency(acq.emitter_columns[static_cast<std::size_t>(shot)], cfg.f0,
                                                         cfg.amplitude);
    const auto res =
        forward::simulate_shot(vm, build_material_fields(vm, cfg.solver.rho0), src, acq, cfg.solver, cfg.snapshot_times);
    std::vector<float> flat;
    json times = json::array();
    for (const auto& s : res.snapshots) {
      flat.insert(flat.end(), s.velocity_magnitude.values().begin(), s.velocity_magnitude.values().end());
      times.push_back(s.time);
    }
    fs::path snp = req.output;
    snp.replace_extension(".snp");
    save_array(snp, PayloadKind::Snapshots,
               {res.snapshots.size(), static_cast<std::size_t>(vm.grid.ny), static_cast<std::size_t>(vm.grid.nx)},
               flat,
               {{"times", times},
                {"emitter_index", shot},
                {"emitter_column", src.column_index},
                {"quantity", "|v|, m/s"},
                {"grid", {{"nx", vm.grid.nx}, {"ny", vm.grid.ny}, {"dx", vm.grid.dx}, {"dy", vm.grid.dy}}}});
    out["snapshots"] = snp.string();
    out["snapshot_times"] = times;
  }
  return out;
}

json cmd_train(const RunConfig& cfg, const fs::path& checkpoint, bool untrained) {
  cfg.validate();
  const fs::path ckpt_path = checkpoint.empty() ? cfg.work_dir / "model.wts" : checkpoint;
  if (ckpt_path.has_parent_path()) fs::create_directories(ckpt_path.parent_path());
  const auto manifest = open_dataset(cfg);
  const auto fcfg = cfg.feature_config();
  const auto tcfg = cfg.train_config();
  net::NetworkConfig ncfg = cfg.network;
  json out = {{"command", "train"}, {"checkpoint", ckpt_path.string()}};
  if (untrained) {
    // Only the channel count is needed; one sample suffices.
    const auto ids = manifest.ids(scene::Split::Train);
    if (ids.empty()) throw DataError("training fold is empty");
    const auto one = net::ExampleSet::load(manifest, std::vector<std::string>{ids.front()}, fcfg, cfg.norm, 1);
    ncfg.in_channels = one.channels();
    net::Checkpoint c{net::init_weights(ncfg, scene::derive_seed(tcfg.seed, 1)), fcfg, cfg.norm,
                      {{"untrained", true}}};
    net::save_checkpoint(ckpt_path, c);
    out["untrained"] = true;
    return out;
  }
  const auto tr = net::ExampleSet::load(manifest, scene::Split::Train, fcfg, cfg.norm, cfg.jobs);
  const auto va = net::ExampleSet::load(manifest, scene::Split::Validation, fcfg, cfg.norm, cfg.jobs);
  ncfg.in_channels = tr.channels();
  const net::TrainResult r = net::train(tr, va, ncfg, tcfg);
  net::Checkpoint c{r.weights, fcfg, cfg.norm,
                    {{"selected_epoch", r.history.selected_epoch}, {"history", net::to_json(r.history)}}};
  net::save_checkpoint(ckpt_path, c);
  fs::path curves = ckpt_path;
  curves.replace_extension();
  curves += "_curves.csv";
  net::write_curves_csv(curves, r.history);
  out["curves"] = curves.string();
  out["history"] = net::to_json(r.history);
  out["selected_epoch"] = r.history.selected_epoch;
  out["best_val_ssim"] = r.history.val_ssim[static_cast<std::size_t>(r.history.selected_epoch)];
  return out;
}

json cmd_eval(const RunConfig& cfg, const fs::path& checkpoint, const std::string& split, const fs::path& output) {
  if (checkpoint.empty()) throw ConfigError("eval needs a checkpoint");
  const net::Checkpoint c = net::load_checkpoint(checkpoint);
  const auto manifest = open_dataset(cfg);
  const auto sp = scene::split_from_string(split);
  const auto set = net::ExampleSet::load(manifest, sp, c.features, c.norm, cfg.jobs);
  if (set.empty()) throw DataError("split '" + split + "' is empty");
  if (set.channels() != c.weights.config.in_channels) {
    throw DataError("checkpoint expects " + std::to_string(c.weights.config.in_channels) + " channels, data gives " +
                    std::to_string(set.channels()));
  }
  const auto ev = net::evaluate(c.weights, set, cfg.jobs);
  // Baseline: predict the mean training velocity map for every sample.
  const Array2f mean_map = train_mean_target(manifest, c.norm);
  std::vector<Array2f> base(set.size(), mean_map);
  const auto bl = net::score_predictions(set, std::move(base), false);

  json samples = json::array();
  for (std::size_t i = 0; i < ev.ids.size(); ++i) {
    samples.push_back({{"id", ev.ids[i]}, {"ssim", ev.ssim[i]}, {"mse", ev.mse[i]}});
  }
  json out = {{"command", "eval"},
              {"checkpoint", checkpoint.string()},
              {"split", scene::to_string(sp)},
              {"n", set.size()},
              {"mean_ssim", ev.mean_ssim},
              {"mean_mse", ev.mean_mse},
              {"baselines", {{"train_mean", {{"mean_ssim", bl.mean_ssim}, {"mean_mse", bl.mean_mse}}}}},
              {"samples", samples}};
  if (!output.empty()) {
    if (output.has_parent_path()) fs::create_directories(output.parent_path());
    write_json(output, out);
  }
  return out;
}

json cmd_ablate(const RunConfig& cfg) {
  cfg.validate();
  const auto manifest = open_dataset(cfg);
  const auto rep = lab::run_ablation(cfg.ablation_configs(), manifest, cfg.lab_settings());
  json pops = json::array();
  for (const auto& p : rep.populations) {
    pops.push_back({{"label", p.config.label()},
                    {"mean_ssim", p.mean},
                    {"std_ssim", p.std},
                    {"valid_instances", p.test_ssims.size()},
                    {"valid", p.valid}});
  }
  return {{"command", "ablate"},
          {"report", (cfg.work_dir / "report").string()},
          {"populations", pops},
          {"ensembles", rep.ensembles.size()}};
}

json cmd_render(const RunConfig& cfg, const RenderRequest& req) {
  const fs::path out_dir = req.out_dir.empty() ? cfg.work_dir / "figures" : req.out_dir;
  fs::create_directories(out_dir);
  json files = json::array();
  const auto note = [&files](const fs::path& p) { files.push_back(p.string()); };

  struct Named {
    std::string name;
    Array2f cp;
    GridSpec grid;
  };
  std::vector<Named> maps;
  NormalizationSpec norm = cfg.norm;

  for (const auto& m : req.models) {
    const VelocityModel vm = load_model(m);
    const fs::path png = out_dir / (m.stem().string() + ".png");
    render::render_velocity_map(png, vm.cp, norm, cfg.render_scale);
    note(png);
    maps.push_back({m.stem().string(), vm.cp, vm.grid});
  }

  if (!req.sample.empty()) {
    const auto manifest = open_dataset(cfg);
    const Sample s = load_sample(manifest.root, req.sample);
    std::vector<Named> panel{{"truth", s.model.cp, s.model.grid}};
    if (!req.checkpoints.empty()) {
      std::vector<net::NetworkWeights> members;
      features::FeatureConfig fcfg;
      for (std::size_t i = 0; i < req.checkpoints.size(); ++i) {
        net::Checkpoint c = net::load_checkpoint(req.checkpoints[i]);
        if (i == 0) {
          fcfg = c.features;
          norm = c.norm;
        }
        members.push_back(std::move(c.weights));
      }
      const Tensor3 x = features::assemble_input(s.record, fcfg);
      panel.push_back({"single", denormalize_velocity(net::forward_pass(members.front(), x), norm), s.model.grid});
      if (members.size() > 1) {
        panel.push_back({"ensemble", denormalize_velocity(lab::ensemble_predict(members, x), norm), s.model.grid});
      }
    }
    std::vector<Array2f> arrays;
    for (const auto& p : panel) arrays.push_back(p.cp);
    const fs::path png = out_dir / (req.sample + "_panels.png");
    render::render_velocity_panels(png, arrays, norm, cfg.render_scale);
    note(png);
    for (auto& p : panel) maps.push_back(std::move(p));
  }

  if (req.profiles) {
    if (maps.empty()) throw ConfigError("profiles need --model or --sample");
    const GridSpec& g = maps.front().grid;
    std::vector<double> depths(static_cast<std::size_t>(g.ny));
    for (int r = 0; r < g.ny; ++r) depths[static_cast<std::size_t>(r)] = (r + 0.5) * g.dy;
    for (double x : cfg.profiles_m) {
      std::vector<render::ProfileSeries> series;
      for (const auto& m : maps) {
        if (!(m.grid == g)) throw ConfigError("profile maps must share one grid");
        series.push_back({m.name, render::vertical_profile(m.cp, m.grid, x)});
      }
      const std::string stem = "profile_x" + short_num(x) + "m";
      render::write_profiles(out_dir / (stem + ".csv"), out_dir / (stem + ".png"), depths, series, norm);
      note(out_dir / (stem + ".csv"));
      note(out_dir / (stem + ".png"));
    }
  }

  if (!req.snapshots.empty()) {
    std::vector<std::size_t> shape;
    const auto flat = load_array(req.snapshots, PayloadKind::Snapshots, &shape);
    if (shape.size() != 3 || shape[0] == 0) throw DataError(req.snapshots.string() + ": expected [n, ny, nx]");
    std::vector<Array2f> fields;
    const std::size_t plane = shape[1] * shape[2];
    for (std::size_t i = 0; i < shape[0]; ++i) {
      fields.emplace_back(shape[1], shape[2],
                          std::vector<float>(flat.begin() + static_cast<std::ptrdiff_t>(i * plane),
                                             flat.begin() + static_cast<std::ptrdiff_t>((i + 1) * plane)));
    }
    const fs::path png = out_dir / (req.snapshots.stem().string() + "_snapshots.png");
    render::render_snapshots(png, fields, static_cast<int>(std::min<std::size_t>(fields.size(), 4)), cfg.render_scale);
    note(png);
  }

  if (!req.summary.empty()) {
    const json sum = read_json(req.summary);
    std::map<int, std::vector<std::vector<double>>> by_shots;
    for (const auto& p : sum.at("populations")) {
      by_shots[p.at("config").at("shots").get<int>()].push_back(p.at("test_ssims").get<std::vector<double>>());
    }
    for (const auto& [shots, series] : by_shots) {
      double lo = 1.0, hi = 0.0;
      for (const auto& s : series) {
        for (double v : s) {
          lo = std::min(lo, v);
          hi = std::max(hi, v);
        }
      }
      if (lo > hi) {
        lo = 0.0;
        hi = 1.0;
      }
      const fs::path png = out_dir / ("hist_shots" + std::to_string(shots) + ".png");
      render::render_histogram(png, series, 20, lo, hi);
      note(png);
    }
  }

  if (files.empty()) throw ConfigError("render: nothing to render (give --model, --sample, --snapshots or --summary)");
  return {{"command", "render"}, {"files", files}};
}

}  // namespace velinv::config
