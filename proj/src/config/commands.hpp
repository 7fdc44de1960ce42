#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "config/config.hpp"

namespace velinv::config {

// Each command returns a JSON summary of what it produced.

nlohmann::json cmd_gen(const RunConfig& cfg);

struct SimulateRequest {
  std::filesystem::path model;   // .svm
  std::filesystem::path output;  // .sgr; snapshots go to "<stem>.snp" beside it
  bool snapshots = false;
  int snapshot_shot = -1;  // emitter ordinal; -1 picks the centre emitter
};
nlohmann::json cmd_simulate(const RunConfig& cfg, const SimulateRequest& req);

/// Trains on the dataset at cfg.data_dir; checkpoint defaults to work_dir/model.wts.
/// `untrained` writes the seeded initial weights without any training.
nlohmann::json cmd_train(const RunConfig& cfg, const std::filesystem::path& checkpoint = {}, bool untrained = false);

/// Metrics of a checkpoint on one split, plus the predict-the-training-mean
/// baseline; also written to `output` when given.
nlohmann::json cmd_eval(const RunConfig& cfg, const std::filesystem::path& checkpoint, const std::string& split,
                        const std::filesystem::path& output = {});

nlohmann::json cmd_ablate(const RunConfig& cfg);

struct RenderRequest {
  std::filesystem::path out_dir;                 // defaults to work_dir/figures
  std::vector<std::filesystem::path> models;     // velocity maps (.svm) rendered as heat maps
  std::string sample;                            // dataset sample id used as ground truth
  std::vector<std::filesystem::path> checkpoints;  // first = single model, all = ensemble
  std::filesystem::path snapshots;               // .snp from simulate
  std::filesystem::path summary;                 // ablation summary.json for histograms
  bool profiles = false;                         // at cfg.profiles_m
};
nlohmann::json cmd_render(const RunConfig& cfg, const RenderRequest& req);

}  // namespace velinv::config
