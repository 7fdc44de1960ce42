#pragma once

#include <optional>
#include <vector>

#include "core/model.hpp"

namespace velinv::forward {

/// Pressure and particle velocity on the cell grid. vy is positive downwards.
struct WaveState {
  Array2d p;
  Array2d vx;
  Array2d vy;

  static WaveState zeros(const GridSpec& grid);
  bool all_finite() const;
  double max_abs_pressure() const;
};

enum class Axis { X, Y };
enum class TopBoundary { FreeSurface, Absorbing };
enum class SchemeOrder { First, SecondMinmod };

struct SolverOptions {
  TopBoundary top = TopBoundary::FreeSurface;
  SchemeOrder order = SchemeOrder::First;
  double rho0 = kDefaultDensity;
};

struct SourceSpec {
  int column_index = 0;
  double f0 = 15.0;         // Hz
  double amplitude = 1e6;   // Pa added per solver step at the wavelet peak
  double delay = 1.2 / 15;  // s

  static SourceSpec with_frequency(int column, double f0, double amplitude = 1e6) {
    return {column, f0, amplitude, 1.2 / f0};
  }
};

struct AcquisitionSpec {
  std::vector<int> emitter_columns;
  std::vector<int> receiver_columns;
  double t_total = 2.0;
  double dt_record = 0.01;
  double cfl = 0.5;

  void validate(int nx) const;
  int n_samples() const;

  /// n equidistant emitters and one receiver per grid column.
  static AcquisitionSpec equidistant(int nx, int n_emitters, double t_total, double dt_record, double cfl = 0.5);
};

/// Per-cell wave speed and impedance derived from material fields.
struct Medium {
  GridSpec grid;
  Array2d c;
  Array2d z;
  Array2d bulk;
  Array2d rho;

  Medium(const GridSpec& grid, const MaterialFields& mat);
  double max_speed() const;
};

double ricker(double t, double f0);

/// Largest dt that divides dt_record into whole steps and keeps max(c)*dt <= cfl*min(dx, dy).
double solver_dt(const GridSpec& grid, double max_speed, double cfl, double dt_record);
void check_cfl(const GridSpec& grid, double max_speed, double dt, double cfl);

double energy(const WaveState& s, const Medium& m);

/// One characteristic sweep along `axis`; the transverse velocity is untouched.
void step_direction(WaveState& s, const Medium& m, double dt, Axis axis, const SolverOptions& opt = {},
                    double cfl = 1.0);
WaveState step_direction(const WaveState& s, const MaterialFields& mat, const GridSpec& grid, double dt,
                         Axis axis, const SolverOptions& opt = {}, double cfl = 1.0);

void apply_free_surface(WaveState& s);
void apply_absorbing(WaveState& s, const Medium& m, TopBoundary top = TopBoundary::FreeSurface);

/// Row where sources inject pressure; row 0 is pinned by the free surface.
inline constexpr int kSourceRow = 1;
inline constexpr int kReceiverRow = 0;

class Simulator {
 public:
  Simulator(const GridSpec& grid, const MaterialFields& mat, double dt, SolverOptions opt = {}, double cfl = 1.0);

  /// X sweep, Y sweep, then boundary conditions.
  void step();
  void inject_pressure(int row, int col, double dp) { state_.p(row, col) += dp; }

  const WaveState& state() const noexcept { return state_; }
  WaveState& state() noexcept { return state_; }
  const Medium& medium() const noexcept { return medium_; }
  double dt() const noexcept { return dt_; }
  long steps_taken() const noexcept { return steps_; }
  double time() const noexcept { return static_cast<double>(steps_) * dt_; }
  double energy() const { return forward::energy(state_, medium_); }

 private:
  Medium medium_;
  WaveState state_;
  SolverOptions opt_;
  double dt_;
  double cfl_;
  long steps_ = 0;
};

struct Snapshot {
  double time = 0.0;
  Array2f velocity_magnitude;
};

struct ShotResult {
  ShotGather gather;
  std::vector<Snapshot> snapshots;
};

ShotResult simulate_shot(const VelocityModel& vm, const MaterialFields& mat, const SourceSpec& src,
                         const AcquisitionSpec& acq, const SolverOptions& opt = {},
                         const std::vector<double>& snapshot_times = {});

/// One gather per emitter, ordered by emitter column; src_template's column is replaced per shot.
SeismicRecord simulate_record(const VelocityModel& vm, const AcquisitionSpec& acq, const SourceSpec& src_template,
                              const SolverOptions& opt = {}, int jobs = 1);

}  // namespace velinv::forward
