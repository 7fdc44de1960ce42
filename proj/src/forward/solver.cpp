#include "forward/solver.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "core/errors.hpp"
#include "core/parallel.hpp"

namespace velinv::forward {

namespace {

inline double minmod(double a, double b) {
  if (a * b <= 0.0) return 0.0;
  return std::abs(a) < std::abs(b) ? a : b;
}

// Upwind transfer of one invariant over a Courant number sigma. Arguments are
// ordered against the direction of travel: far-upwind, upwind, centre, downwind.
inline double advect_first(double /*wuu*/, double wu, double w0, double /*wd*/, double sigma) {
  return w0 - sigma * (w0 - wu);
}

inline double advect_minmod(double wuu, double wu, double w0, double wd, double sigma) {
  const double s0 = minmod(w0 - wu, wd - w0);
  const double su = minmod(wu - wuu, w0 - wu);
  return w0 - sigma * (w0 - wu) - 0.5 * sigma * (1.0 - sigma) * (s0 - su);
}

constexpr int kGhost = 2;

// Updates (p, v) at one node from a 5-point stencil of padded line values.
template <bool SecondOrder>
inline void update_node(const double* p, const double* v, double z, double sigma, double& p_out, double& v_out) {
  // p[-2..2], v[-2..2] relative to the node
  auto wp = [&](int k) { return p[k] + z * v[k]; };
  auto wm = [&](int k) { return p[k] - z * v[k]; };
  double plus, minus;
  if constexpr (SecondOrder) {
    plus = advect_minmod(wp(-2), wp(-1), wp(0), wp(1), sigma);
    minus = advect_minmod(wm(2), wm(1), wm(0), wm(-1), sigma);
  } else {
    plus = advect_first(0.0, wp(-1), wp(0), 0.0, sigma);
    minus = advect_first(0.0, wm(1), wm(0), 0.0, sigma);
  }
  p_out = 0.5 * (plus + minus);
  v_out = (plus - minus) / (2.0 * z);
}

template <bool SecondOrder>
void sweep_x(WaveState& s, const Medium& m, double dt) {
  const std::size_t nx = s.p.cols(), ny = s.p.rows();
  std::vector<double> pp(nx + 2 * kGhost, 0.0), vp(nx + 2 * kGhost, 0.0);
  const double k = dt / m.grid.dx;
  for (std::size_t r = 0; r < ny; ++r) {
    // Zero ghosts: nothing enters through the left or right edges.
    std::copy_n(s.p.row(r).data(), nx, pp.data() + kGhost);
    std::copy_n(s.vx.row(r).data(), nx, vp.data() + kGhost);
    auto prow = s.p.row(r);
    auto vrow = s.vx.row(r);
    auto crow = m.c.row(r);
    auto zrow = m.z.row(r);
    for (std::size_t i = 0; i < nx; ++i) {
      update_node<SecondOrder>(pp.data() + kGhost + i, vp.data() + kGhost + i, zrow[i], crow[i] * k, prow[i],
                               vrow[i]);
    }
  }
}

template <bool SecondOrder>
void sweep_y(WaveState& s, const Medium& m, double dt, TopBoundary top) {
  const std::size_t nx = s.p.cols(), ny = s.p.rows();
  const std::size_t rows = ny + 2 * kGhost;
  std::vector<double> pp(rows * nx, 0.0), vp(rows * nx, 0.0);
  std::copy_n(s.p.data(), ny * nx, pp.data() + kGhost * nx);
  std::copy_n(s.vy.data(), ny * nx, vp.data() + kGhost * nx);
  if (top == TopBoundary::FreeSurface) {
    // Odd reflection of pressure, even reflection of velocity about row 0.
    for (int g = 1; g <= kGhost; ++g) {
      const std::size_t ghost = static_cast<std::size_t>(kGhost - g) * nx;
      const std::size_t mirror = static_cast<std::size_t>(kGhost + g) * nx;
      for (std::size_t c = 0; c < nx; ++c) {
        pp[ghost + c] = -pp[mirror + c];
        vp[ghost + c] = vp[mirror + c];
      }
    }
  }
  const double k = dt / m.grid.dy;
  double p5[5], v5[5];
  for (std::size_t r = 0; r < ny; ++r) {
    auto prow = s.p.row(r);
    auto vrow = s.vy.row(r);
    auto crow = m.c.row(r);
    auto zrow = m.z.row(r);
    const double* base_p = pp.data() + (r + kGhost) * nx;
    const double* base_v = vp.data() + (r + kGhost) * nx;
    for (std::size_t c = 0; c < nx; ++c) {
      for (int o = -2; o <= 2; ++o) {
        p5[o + 2] = base_p[static_cast<std::ptrdiff_t>(o) * static_cast<std::ptrdiff_t>(nx) + static_cast<std::ptrdiff_t>(c)];
        v5[o + 2] = base_v[static_cast<std::ptrdiff_t>(o) * static_cast<std::ptrdiff_t>(nx) + static_cast<std::ptrdiff_t>(c)];
      }
      update_node<SecondOrder>(p5 + 2, v5 + 2, zrow[c], crow[c] * k, prow[c], vrow[c]);
    }
  }
}

}  // namespace

WaveState WaveState::zeros(const GridSpec& grid) {
  const auto ny = static_cast<std::size_t>(grid.ny), nx = static_cast<std::size_t>(grid.nx);
  return {Array2d(ny, nx), Array2d(ny, nx), Array2d(ny, nx)};
}

bool WaveState::all_finite() const {
  auto finite = [](const Array2d& a) {
    return std::all_of(a.values().begin(), a.values().end(), [](double x) { return std::isfinite(x); });
  };
  return finite(p) && finite(vx) && finite(vy);
}

double WaveState::max_abs_pressure() const {
  double m = 0.0;
  for (double x : p.values()) m = std::max(m, std::abs(x));
  return m;
}

void AcquisitionSpec::validate(int nx) const {
  if (emitter_columns.empty()) throw ConfigError("acquisition needs at least one emitter");
  if (receiver_columns.empty()) throw ConfigError("acquisition needs at least one receiver");
  for (int c : emitter_columns) {
    if (c < 0 || c >= nx) throw ConfigError("emitter column " + std::to_string(c) + " outside grid");
  }
  for (int c : receiver_columns) {
    if (c < 0 || c >= nx) throw ConfigError("receiver column " + std::to_string(c) + " outside grid");
  }
  if (!(cfl > 0.0 && cfl <= 1.0)) throw ConfigError("Courant factor must lie in (0, 1]");
  if (!(t_total > 0.0)) throw ConfigError("t_total must be positive");
  if (!(dt_record > 0.0)) throw ConfigError("dt_record must be positive");
  if (n_samples() < 2) throw ConfigError("recording window shorter than two samples");
}

int AcquisitionSpec::n_samples() const { return static_cast<int>(std::lround(t_total / dt_record)); }

AcquisitionSpec AcquisitionSpec::equidistant(int nx, int n_emitters, double t_total, double dt_record,
                                             double cfl) {
  AcquisitionSpec acq;
  acq.t_total = t_total;
  acq.dt_record = dt_record;
  acq.cfl = cfl;
  // Emitters at the centres of n equal segments of the surface.
  for (int e = 0; e < n_emitters; ++e) {
    acq.emitter_columns.push_back(static_cast<int>(std::floor((e + 0.5) * nx / n_emitters)));
  }
  for (int c = 0; c < nx; ++c) acq.receiver_columns.push_back(c);
  return acq;
}

Medium::Medium(const GridSpec& g, const MaterialFields& mat)
    : grid(g), c(mat.rho.rows(), mat.rho.cols()), z(mat.rho.rows(), mat.rho.cols()), bulk(mat.bulk), rho(mat.rho) {
  if (!mat.rho.same_shape(mat.bulk) || mat.rho.rows() != static_cast<std::size_t>(g.ny) ||
      mat.rho.cols() != static_cast<std::size_t>(g.nx)) {
    throw DataError("material fields do not match grid");
  }
  for (std::size_t i = 0; i < c.size(); ++i) {
    const double r = mat.rho.values()[i], k = mat.bulk.values()[i];
    if (!(r > 0.0) || !(k > 0.0)) throw DataError("material fields must be positive");
    c.values()[i] = std::sqrt(k / r);
    z.values()[i] = r * c.values()[i];
  }
}

double Medium::max_speed() const { return *std::max_element(c.values().begin(), c.values().end()); }

double ricker(double t, double f0) {
  const double a = std::numbers::pi * std::numbers::pi * f0 * f0 * t * t;
  return (1.0 - 2.0 * a) * std::exp(-a);
}

void check_cfl(const GridSpec& grid, double max_speed, double dt, double cfl) {
  const double limit = cfl * std::min(grid.dx, grid.dy);
  // Relative slack for the rounding in dt = dt_record / steps.
  if (!(max_speed * dt <= limit * (1.0 + 1e-12))) {
    std::ostringstream os;
    os << "CFL violated: max speed " << max_speed << " m/s with dt " << dt << " s exceeds " << cfl
       << " * min(dx, dy) = " << limit << " m";
    throw CflError(os.str());
  }
}

double solver_dt(const GridSpec& grid, double max_speed, double cfl, double dt_record) {
  if (!(max_speed > 0.0)) throw DataError("maximum wave speed must be positive");
  const double dt_max = cfl * std::min(grid.dx, grid.dy) / max_speed;
  const double steps = std::ceil(dt_record / dt_max - 1e-9);
  const double dt = dt_record / std::max(1.0, steps);
  check_cfl(grid, max_speed, dt, cfl);
  return dt;
}

double energy(const WaveState& s, const Medium& m) {
  double e = 0.0;
  for (std::size_t i = 0; i < s.p.size(); ++i) {
    const double p = s.p.values()[i], vx = s.vx.values()[i], vy = s.vy.values()[i];
    e += p * p / (2.0 * m.bulk.values()[i]) + 0.5 * m.rho.values()[i] * (vx * vx + vy * vy);
  }
  return e * m.grid.dx * m.grid.dy;
}

void step_direction(WaveState& s, const Medium& m, double dt, Axis axis, const SolverOptions& opt, double cfl) {
  check_cfl(m.grid, m.max_speed(), dt, cfl);
  const bool second = opt.order == SchemeOrder::SecondMinmod;
  if (axis == Axis::X) {
    second ? sweep_x<true>(s, m, dt) : sweep_x<false>(s, m, dt);
  } else {
    second ? sweep_y<true>(s, m, dt, opt.top) : sweep_y<false>(s, m, dt, opt.top);
  }
}

WaveState step_direction(const WaveState& s, const MaterialFields& mat, const GridSpec& grid, double dt, Axis axis,
                         const SolverOptions& opt, double cfl) {
  Medium m(grid, mat);
  WaveState out = s;
  step_direction(out, m, dt, axis, opt, cfl);
  return out;
}

void apply_free_surface(WaveState& s) {
  for (double& p : s.p.row(0)) p = 0.0;
}

void apply_absorbing(WaveState& s, const Medium& m, TopBoundary top) {
  const std::size_t nx = s.p.cols(), ny = s.p.rows();
  // Left edge: drop w+ = p + Z vx (travels into the domain).
  for (std::size_t r = 0; r < ny; ++r) {
    const double z = m.z(r, 0);
    const double out = s.p(r, 0) - z * s.vx(r, 0);
    s.p(r, 0) = 0.5 * out;
    s.vx(r, 0) = -0.5 * out / z;
  }
  // Right edge: drop w- = p - Z vx.
  for (std::size_t r = 0; r < ny; ++r) {
    const double z = m.z(r, nx - 1);
    const double out = s.p(r, nx - 1) + z * s.vx(r, nx - 1);
    s.p(r, nx - 1) = 0.5 * out;
    s.vx(r, nx - 1) = 0.5 * out / z;
  }
  // Bottom edge: drop the upgoing w- = p - Z vy.
  for (std::size_t c = 0; c < nx; ++c) {
    const double z = m.z(ny - 1, c);
    const double out = s.p(ny - 1, c) + z * s.vy(ny - 1, c);
    s.p(ny - 1, c) = 0.5 * out;
    s.vy(ny - 1, c) = 0.5 * out / z;
  }
  if (top == TopBoundary::Absorbing) {
    for (std::size_t c = 0; c < nx; ++c) {
      const double z = m.z(0, c);
      const double out = s.p(0, c) - z * s.vy(0, c);
      s.p(0, c) = 0.5 * out;
      s.vy(0, c) = -0.5 * out / z;
    }
  }
}

Simulator::Simulator(const GridSpec& grid, const MaterialFields& mat, double dt, SolverOptions opt, double cfl)
    : medium_(grid, mat), state_(WaveState::zeros(grid)), opt_(opt), dt_(dt), cfl_(cfl) {
  check_cfl(grid, medium_.max_speed(), dt, cfl);
}

void Simulator::step() {
  const bool second = opt_.order == SchemeOrder::SecondMinmod;
  if (second) {
    sweep_x<true>(state_, medium_, dt_);
    sweep_y<true>(state_, medium_, dt_, opt_.top);
  } else {
    sweep_x<false>(state_, medium_, dt_);
    sweep_y<false>(state_, medium_, dt_, opt_.top);
  }
  apply_absorbing(state_, medium_, opt_.top);
  if (opt_.top == TopBoundary::FreeSurface) apply_free_surface(state_);
  ++steps_;
}

namespace {

Array2f velocity_magnitude(const WaveState& s) {
  Array2f out(s.p.rows(), s.p.cols());
  for (std::size_t i = 0; i < s.p.size(); ++i) {
    const double vx = s.vx.values()[i], vy = s.vy.values()[i];
    out.values()[i] = static_cast<float>(std::sqrt(vx * vx + vy * vy));
  }
  return out;
}

}  // namespace

ShotResult simulate_shot(const VelocityModel& vm, const MaterialFields& mat, const SourceSpec& src,
                         const AcquisitionSpec& acq, const SolverOptions& opt,
                         const std::vector<double>& snapshot_times) {
  vm.validate();
  acq.validate(vm.grid.nx);
  if (src.column_index < 0 || src.column_index >= vm.grid.nx) throw ConfigError("source column outside grid");
  if (!(src.f0 > 0.0)) throw ConfigError("source frequency must be positive");

  Medium probe(vm.grid, mat);
  const double dt = solver_dt(vm.grid, probe.max_speed(), acq.cfl, acq.dt_record);
  const long substeps = std::lround(acq.dt_record / dt);
  Simulator sim(vm.grid, mat, dt, opt, acq.cfl);

  const int n_samples = acq.n_samples();
  ShotResult result;
  auto& gather = result.gather;
  gather.emitter_column = src.column_index;
  gather.dt_record = acq.dt_record;
  gather.data = Array2f(acq.receiver_columns.size(), static_cast<std::size_t>(n_samples));

  std::vector<std::pair<long, double>> snaps;
  for (double t : snapshot_times) snaps.emplace_back(std::lround(t / dt), t);
  std::sort(snaps.begin(), snaps.end());
  std::size_t next_snap = 0;
  auto take_snapshots = [&] {
    while (next_snap < snaps.size() && snaps[next_snap].first <= sim.steps_taken()) {
      result.snapshots.push_back({snaps[next_snap].second, velocity_magnitude(sim.state())});
      ++next_snap;
    }
  };
  auto record = [&](int k) {
    const auto& vy = sim.state().vy;
    for (std::size_t r = 0; r < acq.receiver_columns.size(); ++r) {
      gather.data(r, static_cast<std::size_t>(k)) =
          static_cast<float>(vy(kReceiverRow, static_cast<std::size_t>(acq.receiver_columns[r])));
    }
  };

  take_snapshots();
  record(0);
  const int src_row = std::min(kSourceRow, vm.grid.ny - 1);
  for (int k = 1; k < n_samples; ++k) {
    for (long s = 0; s < substeps; ++s) {
      sim.step();
      if (src.amplitude != 0.0) {
        sim.inject_pressure(src_row, src.column_index, src.amplitude * ricker(sim.time() - src.delay, src.f0));
      }
      take_snapshots();
    }
    if (!sim.state().all_finite()) {
      throw DivergenceError("non-finite wavefield at solver step " + std::to_string(sim.steps_taken()));
    }
    record(k);
  }
  return result;
}

SeismicRecord simulate_record(const VelocityModel& vm, const AcquisitionSpec& acq, const SourceSpec& src_template,
                              const SolverOptions& opt, int jobs) {
  acq.validate(vm.grid.nx);
  std::vector<int> columns = acq.emitter_columns;
  std::sort(columns.begin(), columns.end());
  const MaterialFields mat = build_material_fields(vm, opt.rho0);

  SeismicRecord rec;
  rec.shots.resize(columns.size());
  parallel_for(columns.size(), jobs, [&](std::size_t i) {
    SourceSpec src = src_template;
    src.column_index = columns[i];
    auto shot = simulate_shot(vm, mat, src, acq, opt);
    shot.gather.emitter_index = static_cast<int>(i);
    rec.shots[i] = std::move(shot.gather);
  });
  return rec;
}

}  // namespace velinv::forward
