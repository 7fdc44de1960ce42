// velinv command-line front end. Talks to the library only through velinv.h.
#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <memory>
#include <string>
#include <vector>

#include "velinv/velinv.h"

namespace {

// One line, key=value pairs, message quoted; easy to grep and to split.
void print_error(velinv_status s, const std::string& message) {
  std::string escaped;
  for (char c : message) {
    if (c == '"' || c == '\\') escaped += '\\';
    if (c == '\n') {
      escaped += "\\n";
      continue;
    }
    escaped += c;
  }
  std::fprintf(stderr, "error kind=%s code=%d message=\"%s\"\n", velinv_status_name(s), static_cast<int>(s),
               escaped.c_str());
}

struct ConfigDeleter {
  void operator()(velinv_config* c) const { velinv_config_destroy(c); }
};
using ConfigPtr = std::unique_ptr<velinv_config, ConfigDeleter>;

struct Failure {
  velinv_status status;
  std::string message;
};

void check(velinv_status s) {
  if (s != VELINV_OK) throw Failure{s, velinv_last_error()};
}

// Prints and frees a text result.
void emit(velinv_text* text) {
  std::printf("%s\n", velinv_text_get(text));
  velinv_text_destroy(text);
}

std::vector<const char*> c_strings(const std::vector<std::string>& v) {
  std::vector<const char*> out;
  out.reserve(v.size());
  for (const auto& s : v) out.push_back(s.c_str());
  return out;
}

struct Globals {
  std::string config_path;
  std::string preset;
  std::vector<std::string> overrides;
  int jobs = -1;
  int verbose = 0;
};

ConfigPtr build_config(const Globals& g) {
  // Preset first (flag wins over the file's own line), then the file, then --set.
  std::string preset = g.preset;
  if (preset.empty() && !g.config_path.empty()) {
    velinv_text* t = nullptr;
    check(velinv_config_file_preset(g.config_path.c_str(), &t));
    preset = velinv_text_get(t);
    velinv_text_destroy(t);
  }
  velinv_config* raw = nullptr;
  check(velinv_config_create(preset.empty() ? "desk" : preset.c_str(), &raw));
  ConfigPtr cfg(raw);
  if (!g.config_path.empty()) check(velinv_config_load_file(cfg.get(), g.config_path.c_str()));
  for (const auto& kv : g.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0) throw Failure{VELINV_ERR_CONFIG, "--set expects key=value, got '" + kv + "'"};
    check(velinv_config_set(cfg.get(), kv.substr(0, eq).c_str(), kv.substr(eq + 1).c_str()));
  }
  if (g.jobs >= 0) check(velinv_config_set(cfg.get(), "run.jobs", std::to_string(g.jobs).c_str()));
  if (g.verbose > 0) check(velinv_config_set(cfg.get(), "run.verbose", std::to_string(g.verbose).c_str()));
  velinv_set_verbosity(g.verbose);
  check(velinv_config_validate(cfg.get()));
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"velinv: seismic velocity inversion toolkit"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", std::string(velinv_version()));

  Globals g;
  app.add_option("--config", g.config_path, "Run configuration file (TOML-style)")->check(CLI::ExistingFile);
  app.add_option("--preset", g.preset, "Parameter preset")->check(CLI::IsMember({"paper", "desk"}));
  app.add_option("--set", g.overrides, "Override one config key, e.g. --set train.lr=3e-4 (repeatable)")
      ->allow_extra_args(false);
  app.add_option("--jobs", g.jobs, "Worker threads (0 = all cores)")->check(CLI::NonNegativeNumber);
  app.add_flag("-v,--verbose", g.verbose, "More progress output (repeat for debug)");

  // gen
  auto* gen = app.add_subcommand("gen", "Generate a synthetic dataset (models + records + manifest)");
  int gen_n = 0;
  gen->add_option("--n", gen_n, "Number of samples (overrides dataset.samples)")->check(CLI::PositiveNumber);

  // simulate
  auto* sim = app.add_subcommand("simulate", "Simulate every shot of one velocity model");
  std::string sim_model, sim_out;
  bool sim_snapshots = false;
  int sim_shot = -1;
  sim->add_option("--model", sim_model, "Velocity model (.svm)")->required()->check(CLI::ExistingFile);
  sim->add_option("--out", sim_out, "Output record (.sgr)")->required();
  sim->add_flag("--snapshots", sim_snapshots, "Also write wavefield snapshots at render.snapshot_times");
  sim->add_option("--shot", sim_shot, "Emitter ordinal for snapshots (default: centre)");

  // train
  auto* train = app.add_subcommand("train", "Train one network on the dataset");
  std::string train_out;
  bool train_untrained = false;
  train->add_option("--out", train_out, "Checkpoint path (default: <work>/model.wts)");
  train->add_flag("--untrained", train_untrained, "Write the seeded initial weights without training");

  // eval
  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on one split");
  std::string eval_ckpt, eval_split = "test", eval_out;
  eval->add_option("--checkpoint", eval_ckpt, "Checkpoint (.wts)")->required()->check(CLI::ExistingFile);
  eval->add_option("--split", eval_split, "Dataset split")->check(CLI::IsMember({"train", "val", "test"}));
  eval->add_option("--out", eval_out, "Also write the metrics JSON here");

  // ablate
  auto* ablate = app.add_subcommand("ablate", "Run the ablation matrix and write the report");

  // render
  auto* render = app.add_subcommand("render", "Render figures (heat maps, panels, profiles, snapshots, histograms)");
  std::vector<std::string> r_models, r_ckpts;
  std::string r_sample, r_snapshots, r_summary, r_out, r_profiles;
  render->add_option("--model", r_models, "Velocity model(s) to draw as heat maps")->check(CLI::ExistingFile);
  render->add_option("--sample", r_sample, "Dataset sample id used as ground truth");
  render->add_option("--checkpoint", r_ckpts, "Checkpoint(s); first is the single model, all form the ensemble")
      ->check(CLI::ExistingFile);
  render->add_option("--snapshots", r_snapshots, "Snapshot file (.snp) from simulate --snapshots")
      ->check(CLI::ExistingFile);
  render->add_option("--summary", r_summary, "Ablation summary.json for SSIM histograms")->check(CLI::ExistingFile);
  auto* prof = render->add_option("--profiles", r_profiles,
                                  "Vertical profiles at these x positions in metres, e.g. 750,1500,2250 "
                                  "(no value: render.profiles)");
  prof->expected(0, 1);
  render->add_option("--out", r_out, "Output directory (default: <work>/figures)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    print_error(VELINV_ERR_CONFIG, e.what());
    std::fprintf(stderr, "run with --help for usage\n");
    return VELINV_ERR_CONFIG;
  }

  try {
    if (*gen) {
      if (gen_n > 0) g.overrides.push_back("dataset.samples=" + std::to_string(gen_n));
    }
    if (*render && !r_profiles.empty()) g.overrides.push_back("render.profiles=" + r_profiles);
    ConfigPtr cfg = build_config(g);
    velinv_text* out = nullptr;

    if (*gen) {
      check(velinv_gen(cfg.get(), &out));
    } else if (*sim) {
      check(velinv_simulate(cfg.get(), sim_model.c_str(), sim_out.c_str(), sim_snapshots ? 1 : 0, sim_shot, &out));
    } else if (*train) {
      check(velinv_train(cfg.get(), train_out.c_str(), train_untrained ? 1 : 0, &out));
    } else if (*eval) {
      check(velinv_eval(cfg.get(), eval_ckpt.c_str(), eval_split.c_str(), eval_out.c_str(), &out));
    } else if (*ablate) {
      check(velinv_ablate(cfg.get(), &out));
    } else if (*render) {
      const auto models = c_strings(r_models);
      const auto ckpts = c_strings(r_ckpts);
      check(velinv_render(cfg.get(), r_out.c_str(), models.data(), models.size(), r_sample.c_str(), ckpts.data(),
                          ckpts.size(), r_snapshots.c_str(), r_summary.c_str(), prof->count() > 0 ? 1 : 0, &out));
    }
    emit(out);
  } catch (const Failure& f) {
    print_error(f.status, f.message);
    return static_cast<int>(f.status);
  }
  return 0;
}
