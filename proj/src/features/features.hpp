#pragma once

#include <string>
#include <utility>
#include <vector>

#include "core/model.hpp"
#include "core/tensor.hpp"

namespace velinv::features {

enum class ShotSubset { Single, Triple, All };

std::string to_string(ShotSubset s);
ShotSubset subset_from_string(const std::string& s);
/// 1 -> single, 3 -> triple, anything else -> all.
ShotSubset subset_for_count(int shots);

struct FeatureConfig {
  bool use_fourier = false;
  ShotSubset shot_subset = ShotSubset::All;
  int resample_height = 200;
};

using InputTensor = Tensor3;

/// (x - min) / (max - min); a constant array maps to 0.5.
Array2f rescale01(const Array2f& a);
Array2d rescale01(const Array2d& a);

/// Unnormalised 2D DFT of a real array; returns (real, imaginary), no centre shift.
std::pair<Array2d, Array2d> fourier_channels(const Array2d& image);

/// Receiver x sample gather -> height x receiver image, linear interpolation in time.
Array2d resample_time_axis(const Array2f& gather, int height);

/// Shot ordinals selected from a record with n shots: single = centre, triple = ends + centre.
std::vector<std::size_t> select_shots(std::size_t n_shots, ShotSubset subset);

int channel_count(std::size_t n_selected, bool use_fourier);

/// Channel order: [raw_0 .. raw_{n-1}, re_0, im_0, re_1, im_1, ...].
InputTensor assemble_input(const SeismicRecord& record, const FeatureConfig& cfg);

}  // namespace velinv::features
