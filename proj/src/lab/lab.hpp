#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "net/train.hpp"
#include "stats/stats.hpp"

namespace velinv::lab {

struct AblationConfig {
  int shots = 9;  // 1, 3 or 9
  bool use_fourier = false;
  bool use_reg = false;
  int bootstrap_count = 10;
  std::uint64_t seed = 0;  // master seed of the whole matrix

  void validate() const;
  /// "s3_f1_r0"
  std::string label() const;
  /// Stable small integer identifying (shots, fourier, reg); feeds seed derivation.
  std::uint64_t code() const;
  std::uint64_t instance_seed(int instance) const;
};

/// The cross product shots x {off, on} x {off, on}, in table order.
std::vector<AblationConfig> ablation_matrix(const std::vector<int>& shots, int bootstrap_count, std::uint64_t seed);

/// Resample with replacement to the same size.
std::vector<std::string> bootstrap_resample(const std::vector<std::string>& train_ids, std::uint64_t seed);
std::vector<std::size_t> bootstrap_indices(std::size_t n, std::uint64_t seed);

/// Everything a population run needs beyond its AblationConfig.
struct LabSettings {
  net::NetworkConfig network;  // in_channels is derived per configuration
  net::TrainConfig train;      // reg_lambda here is the "on" value
  NormalizationSpec norm;
  int resample_height = 200;
  int jobs = 1;
  std::filesystem::path work_dir;  // populations/<label>/inst<k>.{wts,json}
  double alpha = 0.05;
};

features::FeatureConfig feature_config(const AblationConfig& cfg, const LabSettings& s);

struct InstanceResult {
  int index = 0;
  std::uint64_t seed = 0;
  bool valid = false;
  double test_ssim = 0.0;
  double test_mse = 0.0;
  int selected_epoch = -1;
  std::string checkpoint;  // relative to work_dir
  std::string error;
};

struct PopulationResult {
  AblationConfig config;
  std::vector<InstanceResult> instances;
  std::vector<double> test_ssims;  // valid instances only
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation
  std::vector<std::string> checkpoint_paths;
  bool valid = false;
  std::string invalid_reason;
};

/// Folds loaded once per feature configuration.
struct FoldSet {
  net::ExampleSet train, validation, test;
};
FoldSet load_folds(const scene::DatasetManifest& manifest, const features::FeatureConfig& fcfg,
                   const NormalizationSpec& norm, int jobs);

/// Trains missing instances and evaluates them; completed instances (checkpoint present)
/// are never retrained.
PopulationResult run_population(const AblationConfig& cfg, const scene::DatasetManifest& manifest,
                                const LabSettings& s);
PopulationResult run_population(const AblationConfig& cfg, const FoldSet& folds, const LabSettings& s);

/// Arithmetic mean of the members' outputs.
Array2f ensemble_predict(const std::vector<net::NetworkWeights>& members, const Tensor3& x);

struct EnsembleResult {
  AblationConfig config;
  std::vector<std::string> members;
  double ensemble_ssim = 0.0;
  double ensemble_mse = 0.0;
  double mean_member_mse = 0.0;
  double mean_member_ssim = 0.0;
};

/// Raises NumericalError if the ensemble MSE exceeds the mean member MSE.
EnsembleResult evaluate_ensemble(const PopulationResult& pop, const std::vector<net::NetworkWeights>& members,
                                 const net::ExampleSet& test);

struct ShapiroRow {
  AblationConfig config;
  std::size_t n = 0;
  stats::TestResult result;
  bool normal = false;  // p >= alpha
  std::string skipped;
};

struct LeveneRow {
  int shots = 0;
  std::size_t populations = 0;
  stats::TestResult result;
  bool equal_variance = false;
  std::string skipped;
};

struct AnovaRow {
  int shots = 0;
  bool fixed_flag = false;  // reg for the Fourier table, fourier for the reg table
  double mean_off = 0.0;
  double mean_on = 0.0;
  stats::TestResult result;
  bool significant = false;
  std::string skipped;
};

struct SignificanceReport {
  double alpha = 0.05;
  std::vector<ShapiroRow> shapiro;
  std::vector<LeveneRow> levene;
  std::vector<AnovaRow> anova_fourier;
  std::vector<AnovaRow> anova_reg;
};

SignificanceReport significance_pipeline(const std::vector<PopulationResult>& pops, double alpha = 0.05);

struct AblationReport {
  std::uint64_t master_seed = 0;
  std::vector<PopulationResult> populations;
  std::vector<EnsembleResult> ensembles;
  SignificanceReport significance;
  nlohmann::json settings = nlohmann::json::object();
};

/// table1.csv, shapiro.csv, levene.csv, anova_fourier.csv, anova_reg.csv,
/// ensembles.csv, summary.json, hist_shots<N>.png
void emit_report(const AblationReport& report, const std::filesystem::path& out_dir);
nlohmann::json summary_json(const AblationReport& report);

/// Full matrix: populations, ensembles, statistics, report under work_dir/report.
AblationReport run_ablation(const std::vector<AblationConfig>& matrix, const scene::DatasetManifest& manifest,
                            const LabSettings& s);

nlohmann::json to_json(const AblationConfig& c);

}  // namespace velinv::lab
