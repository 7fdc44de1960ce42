#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "core/model.hpp"
#include "core/tensor.hpp"
#include "features/features.hpp"
#include "net/adam.hpp"
#include "net/unet.hpp"
#include "scene/scene.hpp"

namespace velinv::net {

struct Example {
  std::string id;
  Tensor3 input;
  Array2f target;  // normalized velocity
};

/// In-memory inputs and targets for one fold.
struct ExampleSet {
  std::vector<Example> items;

  std::size_t size() const noexcept { return items.size(); }
  bool empty() const noexcept { return items.empty(); }
  int channels() const { return items.empty() ? 0 : items.front().input.channels; }

  static ExampleSet load(const scene::DatasetManifest& manifest, const std::vector<std::string>& ids,
                         const features::FeatureConfig& fcfg, const NormalizationSpec& norm, int jobs = 1);
  static ExampleSet load(const scene::DatasetManifest& manifest, scene::Split split,
                         const features::FeatureConfig& fcfg, const NormalizationSpec& norm, int jobs = 1);
};

struct TrainHistory {
  std::vector<double> train_loss;  // mean per-sample loss over the epoch
  std::vector<double> val_ssim;
  int selected_epoch = -1;         // 0-based, argmax of val_ssim
};

struct TrainResult {
  NetworkWeights weights;  // snapshot at the selected epoch
  TrainHistory history;
};

/// Trains on `train_set.items[i]` for every i in `train_indices` (duplicates allowed).
TrainResult train(const ExampleSet& train_set, const std::vector<std::size_t>& train_indices,
                  const ExampleSet& val_set, const NetworkConfig& net_cfg, const TrainConfig& cfg);
TrainResult train(const ExampleSet& train_set, const ExampleSet& val_set, const NetworkConfig& net_cfg,
                  const TrainConfig& cfg);
TrainResult train(const scene::DatasetManifest& manifest, const features::FeatureConfig& fcfg,
                  const NetworkConfig& net_cfg, const TrainConfig& cfg, const NormalizationSpec& norm = {});

/// Normalized prediction clamped to [0, 1]; equivalent to denormalize, clamp to the
/// velocity envelope, renormalize.
Array2f clamp_unit(const Array2f& pred);

struct EvalResult {
  std::vector<std::string> ids;
  std::vector<double> ssim;  // on clamped predictions
  std::vector<double> mse;   // on raw normalized predictions
  double mean_ssim = 0.0;
  double mean_mse = 0.0;
  std::vector<Array2f> predictions;  // raw, filled on request
};

EvalResult evaluate(const NetworkWeights& w, const ExampleSet& set, int jobs = 1, bool keep_predictions = false);
/// Scores precomputed raw predictions against the set's targets.
EvalResult score_predictions(const ExampleSet& set, std::vector<Array2f> predictions, bool keep_predictions);

// Checkpoints: weights in a ".wts" container; the sidecar carries the layer
// manifest plus the feature and normalization settings needed for inference.
struct Checkpoint {
  NetworkWeights weights;
  features::FeatureConfig features;
  NormalizationSpec norm;
  nlohmann::json extra = nlohmann::json::object();
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// "epoch,loss,val_ssim" rows, epochs 1-based.
void write_curves_csv(const std::filesystem::path& path, const TrainHistory& h);

nlohmann::json to_json(const NetworkConfig& c);
NetworkConfig network_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const features::FeatureConfig& c);
features::FeatureConfig feature_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const TrainHistory& h);

}  // namespace velinv::net
