#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "core/model.hpp"
#include "forward/solver.hpp"

namespace velinv::scene {

struct SceneParams {
  int min_layers = 2;
  int max_layers = 5;
  std::array<double, 2> layer_velocity = {2500.0, 4000.0};
  std::array<double, 2> inclusion_velocity = {4300.0, 4500.0};
  std::array<double, 2> inclusion_area_fraction = {0.05, 0.25};
  double undulation_amplitude = 60.0;  // m
  std::uint64_t seed = 1;

  void validate(const NormalizationSpec& norm = {}) const;
};

/// Deterministic 64-bit mix of (seed, counter); used for every derived seed.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t counter);

struct GeneratedModel {
  VelocityModel model;
  Array2D<std::uint8_t> inclusion_mask;
  double target_area_fraction = 0.0;
};

GeneratedModel gen_velocity_model_detailed(const SceneParams& params, const GridSpec& grid);
VelocityModel gen_velocity_model(const SceneParams& params, const GridSpec& grid);

enum class Split { Train, Validation, Test, Unassigned };
std::string to_string(Split s);
Split split_from_string(const std::string& s);

struct ManifestEntry {
  std::string id;
  std::uint64_t seed = 0;
  Split split = Split::Unassigned;
};

struct DatasetManifest {
  std::filesystem::path root;  // directory holding manifest.json and samples
  std::vector<ManifestEntry> entries;
  std::array<double, 3> ratios = {0.70, 0.15, 0.15};
  std::uint64_t generation_seed = 0;
  std::uint64_t split_seed = 0;
  nlohmann::json params_echo = nlohmann::json::object();

  std::vector<std::string> ids(Split s) const;
  std::filesystem::path model_path(const std::string& id) const { return root / (id + ".svm"); }
  std::filesystem::path record_path(const std::string& id) const { return root / (id + ".sgr"); }

  void save() const;  // root / "manifest.json"
  static DatasetManifest load(const std::filesystem::path& manifest_or_dir);
};

nlohmann::json to_json(const SceneParams& p);

struct GenOptions {
  forward::SourceSpec source;
  forward::SolverOptions solver;
  NormalizationSpec norm;
  int jobs = 1;
  std::array<double, 3> ratios = {0.70, 0.15, 0.15};
  bool verbose = false;
};

/// Generates and simulates n samples under `out_dir`. Existing samples that load
/// cleanly are kept; anything missing or corrupt is regenerated.
DatasetManifest gen_dataset(int n, const SceneParams& params, const GridSpec& grid,
                            const forward::AcquisitionSpec& acq, const std::filesystem::path& out_dir,
                            const GenOptions& opt = {});
/// As above; ids of the samples that had to be (re)generated are appended to `regenerated`.
DatasetManifest gen_dataset(int n, const SceneParams& params, const GridSpec& grid,
                            const forward::AcquisitionSpec& acq, const std::filesystem::path& out_dir,
                            const GenOptions& opt, std::vector<std::string>* regenerated);

/// Seeded permutation; floor counts for validation and test, remainder to train.
DatasetManifest split_dataset(DatasetManifest manifest, std::array<double, 3> ratios, std::uint64_t seed);

struct SplitCounts {
  std::size_t train, validation, test;
};
SplitCounts split_counts(std::size_t n, std::array<double, 3> ratios);

}  // namespace velinv::scene
