#include "core/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "core/errors.hpp"

namespace velinv {

void GridSpec::validate() const {
  if (nx < 16 || ny < 16) {
    std::ostringstream os;
    os << "grid must be at least 16x16 cells, got nx=" << nx << " ny=" << ny;
    throw ConfigError(os.str());
  }
  if (!(dx > 0.0) || !(dy > 0.0) || !std::isfinite(dx) || !std::isfinite(dy)) {
    throw ConfigError("grid spacing must be positive and finite");
  }
}

void NormalizationSpec::validate() const {
  if (!(vmax > vmin) || !std::isfinite(vmin) || !std::isfinite(vmax)) {
    throw ConfigError("normalization requires finite vmax > vmin");
  }
}

void VelocityModel::validate() const {
  grid.validate();
  if (cp.rows() != static_cast<std::size_t>(grid.ny) || cp.cols() != static_cast<std::size_t>(grid.nx)) {
    throw DataError("velocity array shape does not match grid");
  }
  for (std::size_t r = 0; r < cp.rows(); ++r) {
    for (std::size_t c = 0; c < cp.cols(); ++c) {
      const float v = cp(r, c);
      if (!std::isfinite(v) || v < kVelocityFloor || v > kVelocityCeil) {
        std::ostringstream os;
        os << "velocity " << v << " at cell (row " << r << ", col " << c << ") outside ["
           << kVelocityFloor << ", " << kVelocityCeil << "] m/s";
        throw DataError(os.str());
      }
    }
  }
}

float VelocityModel::max_speed() const {
  return cp.empty() ? 0.0f : *std::max_element(cp.values().begin(), cp.values().end());
}

float VelocityModel::min_speed() const {
  return cp.empty() ? 0.0f : *std::min_element(cp.values().begin(), cp.values().end());
}

void SeismicRecord::validate() const {
  if (shots.empty()) throw DataError("seismic record has no shots");
  const auto& first = shots.front();
  for (std::size_t i = 0; i < shots.size(); ++i) {
    const auto& s = shots[i];
    if (s.n_receivers() != first.n_receivers() || s.n_samples() != first.n_samples() ||
        s.dt_record != first.dt_record) {
      throw DataError("shots in record " + model_id + " disagree on shape or sampling");
    }
    if (i > 0 && s.emitter_index <= shots[i - 1].emitter_index) {
      throw DataError("emitter indices must be strictly increasing");
    }
    for (float v : s.data.values()) {
      if (!std::isfinite(v)) throw DataError("non-finite value in shot gather");
    }
  }
}

void Sample::validate() const {
  model.validate();
  record.validate();
  if (record.shots.front().n_receivers() != model.grid.nx) {
    throw DataError("receiver count does not match model width");
  }
}

MaterialFields build_material_fields(const VelocityModel& vm, double rho0) {
  if (!(rho0 > 0.0) || !std::isfinite(rho0)) throw ConfigError("density must be positive");
  MaterialFields mat{Array2d(vm.cp.rows(), vm.cp.cols(), rho0), Array2d(vm.cp.rows(), vm.cp.cols())};
  for (std::size_t r = 0; r < vm.cp.rows(); ++r) {
    for (std::size_t c = 0; c < vm.cp.cols(); ++c) {
      const double v = vm.cp(r, c);
      if (!std::isfinite(v) || v <= 0.0) {
        std::ostringstream os;
        os << "invalid velocity " << v << " at cell (row " << r << ", col " << c << ")";
        throw DataError(os.str());
      }
      mat.bulk(r, c) = rho0 * v * v;
    }
  }
  return mat;
}

Array2f normalize_velocity(const VelocityModel& vm, const NormalizationSpec& spec) {
  spec.validate();
  Array2f out(vm.cp.rows(), vm.cp.cols());
  const double span = spec.vmax - spec.vmin;
  for (std::size_t i = 0; i < vm.cp.size(); ++i) {
    const double v = vm.cp.values()[i];
    if (!(v >= spec.vmin && v <= spec.vmax)) {
      std::ostringstream os;
      os << "velocity " << v << " outside normalization range [" << spec.vmin << ", " << spec.vmax << "]";
      throw DataError(os.str());
    }
    out.values()[i] = static_cast<float>((v - spec.vmin) / span);
  }
  return out;
}

Array2f denormalize_velocity(const Array2f& normalized, const NormalizationSpec& spec) {
  spec.validate();
  Array2f out(normalized.rows(), normalized.cols());
  const double span = spec.vmax - spec.vmin;
  for (std::size_t i = 0; i < normalized.size(); ++i) {
    out.values()[i] = static_cast<float>(spec.vmin + span * normalized.values()[i]);
  }
  return out;
}

}  // namespace velinv
