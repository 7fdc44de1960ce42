#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "core/array2d.hpp"

namespace velinv {

inline constexpr double kVelocityFloor = 2000.0;
inline constexpr double kVelocityCeil = 5000.0;
inline constexpr double kDefaultDensity = 2300.0;

struct GridSpec {
  int nx = 0;  // cell columns (OX)
  int ny = 0;  // cell rows (OY, depth)
  double dx = 0.0;
  double dy = 0.0;

  void validate() const;
  friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

struct NormalizationSpec {
  double vmin = kVelocityFloor;
  double vmax = kVelocityCeil;

  void validate() const;
  friend bool operator==(const NormalizationSpec&, const NormalizationSpec&) = default;
};

/// P-wave speed on a ny x nx grid, m/s.
struct VelocityModel {
  GridSpec grid;
  Array2f cp;

  /// Shape, finiteness and the global [2000, 5000] m/s envelope.
  void validate() const;
  float max_speed() const;
  float min_speed() const;
};

struct MaterialFields {
  Array2d rho;   // kg/m^3
  Array2d bulk;  // Pa
};

/// Surface vertical velocity for one emitter, n_receivers x n_samples.
struct ShotGather {
  int emitter_index = 0;   // ordinal among the acquisition's emitters
  int emitter_column = 0;  // grid column of the emitter
  double dt_record = 0.01;
  Array2f data;

  int n_receivers() const noexcept { return static_cast<int>(data.rows()); }
  int n_samples() const noexcept { return static_cast<int>(data.cols()); }
};

struct SeismicRecord {
  std::string model_id;
  std::vector<ShotGather> shots;

  void validate() const;
};

struct Sample {
  VelocityModel model;
  SeismicRecord record;

  void validate() const;
};

MaterialFields build_material_fields(const VelocityModel& vm, double rho0 = kDefaultDensity);

Array2f normalize_velocity(const VelocityModel& vm, const NormalizationSpec& spec);
Array2f denormalize_velocity(const Array2f& normalized, const NormalizationSpec& spec);

}  // namespace velinv
