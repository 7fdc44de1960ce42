#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace velinv::net {

struct TrainConfig {
  int epochs_max = 50;
  double lr = 1e-4;
  int batch_size = 10;
  double reg_lambda = 0.0;  // 0 disables the Sobel term; 1e-3 when enabled
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps_adam = 1e-8;
  std::uint64_t seed = 0;
  int jobs = 1;  // per-sample gradient workers inside a batch

  void validate() const;
};

struct AdamState {
  std::vector<float> m;
  std::vector<float> v;
  long t = 0;  // last completed step

  static AdamState zeros(std::size_t n) { return {std::vector<float>(n, 0.0f), std::vector<float>(n, 0.0f), 0}; }
};

/// Bias-corrected Adam update at step t (1-based). `path_of` names a parameter
/// for the error raised on a non-finite gradient.
void adam_step(std::span<float> weights, std::span<const float> grads, AdamState& state, long t,
               const TrainConfig& cfg, const std::function<std::string(std::size_t)>& path_of = {});

}  // namespace velinv::net
