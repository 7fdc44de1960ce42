#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "core/array2d.hpp"
#include "core/tensor.hpp"

namespace velinv::net {

struct NetworkConfig {
  int in_channels = 1;
  int base_width = 32;
  int depth = 4;  // resolution levels; spatial dims are padded to a multiple of 2^(depth-1)

  void validate() const;
  int width_at(int level) const { return base_width << level; }
  int alignment() const { return 1 << (depth - 1); }
  friend bool operator==(const NetworkConfig&, const NetworkConfig&) = default;
};

struct ConvShape {
  std::string name;
  int cin = 0;
  int cout = 0;
  int kernel = 3;
  std::size_t weight_offset = 0;  // into NetworkWeights::params
  std::size_t bias_offset = 0;

  std::size_t fan_in() const { return static_cast<std::size_t>(cin) * kernel * kernel; }
  std::size_t weight_count() const { return fan_in() * static_cast<std::size_t>(cout); }
};

/// Conv layers in a fixed order:
///   enc{l}.a, enc{l}.b for l = 0..depth-1
///   dec{l}.up, dec{l}.a, dec{l}.b for l = depth-2..0
///   head (1x1, linear)
std::vector<ConvShape> layer_layout(const NetworkConfig& cfg);

struct NetworkWeights {
  NetworkConfig config;
  std::vector<ConvShape> layers;
  std::vector<float> params;  // all kernels and biases, flat
  std::uint64_t init_seed = 0;

  std::size_t size() const { return params.size(); }
  /// "enc0.a.weight[12]" style name for a flat parameter index.
  std::string parameter_path(std::size_t index) const;
  bool all_finite() const;
};

/// Fan-in scaled normal kernels (std = sqrt(2 / fan_in)), zero biases.
NetworkWeights init_weights(const NetworkConfig& cfg, std::uint64_t seed);
NetworkWeights zero_weights(const NetworkConfig& cfg);

/// Intermediates of one forward pass, consumed by backward_pass. Decoder
/// vectors are indexed by level (0..depth-2).
template <typename T>
struct BasicForwardCache {
  using Tensor = BasicTensor3<T>;
  int out_height = 0;  // unpadded output size
  int out_width = 0;
  std::vector<Tensor> enc_in;   // input of enc{l}.a: padded input, then pooled
  std::vector<Tensor> enc_a;    // relu(enc{l}.a)
  std::vector<Tensor> enc_b;    // relu(enc{l}.b), also the skip tensor
  std::vector<std::vector<std::int32_t>> pool_argmax;
  std::vector<Tensor> dec_up;   // upsampled input of dec{l}.up
  std::vector<Tensor> dec_cat;  // concat(skip, relu(dec{l}.up))
  std::vector<Tensor> dec_a;
  std::vector<Tensor> dec_b;
  bool valid() const { return !enc_in.empty(); }
};
using ForwardCache = BasicForwardCache<float>;
using ForwardCache64 = BasicForwardCache<double>;

/// Prediction in normalized-velocity units, same height/width as the input.
Array2f forward_pass(const NetworkWeights& w, const Tensor3& x, ForwardCache* cache = nullptr);

/// Exact reverse-mode gradient for dLoss/dOutput = grad_out; layout matches params.
std::vector<float> backward_pass(const NetworkWeights& w, const ForwardCache& cache, const Array2f& grad_out);
/// Same, accumulating into `grads` (size w.size()).
void backward_accumulate(const NetworkWeights& w, const ForwardCache& cache, const Array2f& grad_out,
                         std::vector<float>& grads);

// Same network evaluated entirely in double precision (weights widened). Used
// to check gradients without float32 round-off drowning the finite differences.
Array2d forward_pass_f64(const NetworkWeights& w, const Tensor3d& x, ForwardCache64* cache = nullptr);
std::vector<double> backward_pass_f64(const NetworkWeights& w, const ForwardCache64& cache, const Array2d& grad_out);

/// Reflect-pads the bottom/right edges up to the next multiple of `multiple`.
template <typename T>
BasicTensor3<T> reflect_pad(const BasicTensor3<T>& x, int multiple);

}  // namespace velinv::net
