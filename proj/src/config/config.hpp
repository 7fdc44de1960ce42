#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "core/model.hpp"
#include "features/features.hpp"
#include "forward/solver.hpp"
#include "lab/lab.hpp"
#include "net/adam.hpp"
#include "net/unet.hpp"
#include "scene/scene.hpp"

namespace velinv::config {

/// Every tunable of a run. Presets resolve all fields; a config file and then
/// `set` overrides refine them.
struct RunConfig {
  std::string preset = "desk";
  std::filesystem::path data_dir;  // dataset root (manifest.json + samples)
  std::filesystem::path work_dir;  // checkpoints, ablation populations, report, figures

  GridSpec grid;
  int emitters = 9;
  double t_total = 2.0;
  double dt_record = 0.01;
  double cfl = 0.5;
  double f0 = 15.0;
  double amplitude = 1e6;
  forward::SolverOptions solver;

  scene::SceneParams scene;
  int samples = 1600;
  std::array<double, 3> ratios = {0.70, 0.15, 0.15};
  NormalizationSpec norm;

  int shots = 9;  // 1, 3 or 9 (9 means every emitter of the record)
  bool fourier = true;
  int resample_height = 0;  // 0: match grid.ny

  net::NetworkConfig network;  // in_channels derived from the features
  net::TrainConfig train;
  bool regularization = false;
  double reg_lambda = 1e-3;  // weight used whenever regularization is on

  std::vector<int> ablation_shots = {1, 3, 9};
  int bootstrap_count = 10;
  std::uint64_t ablation_seed = 2024;
  double alpha = 0.05;

  std::vector<double> profiles_m = {750.0, 1500.0, 2250.0};
  std::vector<double> snapshot_times = {0.3, 0.35, 0.45, 0.5};
  int render_scale = 2;

  int jobs = 0;  // 0: all hardware threads
  int verbose = 0;

  /// "paper" or "desk"; the default data root honours VELINV_DATA_ROOT.
  static RunConfig preset_named(const std::string& name);

  /// Dotted key ("train.lr"), value as text.
  void set(const std::string& key, const std::string& value);
  /// `[section]` headers and `key = value` lines; '#' starts a comment.
  void load_text(const std::string& text, const std::string& origin = "<text>");
  void load_file(const std::filesystem::path& path);
  std::string dump() const;
  static std::vector<std::string> keys();

  void validate() const;

  int effective_resample_height() const { return resample_height > 0 ? resample_height : grid.ny; }
  forward::AcquisitionSpec acquisition() const;
  forward::SourceSpec source() const;
  features::FeatureConfig feature_config() const;
  net::TrainConfig train_config() const;  // reg_lambda resolved from the flag
  lab::LabSettings lab_settings() const;
  std::vector<lab::AblationConfig> ablation_configs() const;
  scene::GenOptions gen_options() const;
};

/// Preset named inside a config file (`preset = "..."`), if any.
std::string preset_in_text(const std::string& text);

}  // namespace velinv::config
