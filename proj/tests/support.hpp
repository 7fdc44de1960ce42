#pragma once

#include <atomic>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "core/model.hpp"
#include "forward/solver.hpp"

namespace velinv::testing {

/// Fresh directory under the system temp dir, removed on scope exit.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("velinv_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline GridSpec desk_grid() { return {96, 64, 31.25, 31.25}; }

inline VelocityModel constant_model(const GridSpec& g, float cp) {
  return {g, Array2f(static_cast<std::size_t>(g.ny), static_cast<std::size_t>(g.nx), cp)};
}

inline Array2d random_image(std::size_t rows, std::size_t cols, std::uint64_t seed, double lo = 0.0,
                            double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  Array2d a(rows, cols);
  for (double& v : a.values()) v = u(rng);
  return a;
}

/// Traces recorded while driving the solver by hand: vy at the surface above
/// the source and p at one interior cell of the source column.
struct ProbeTraces {
  std::vector<double> surface_vy;
  std::vector<double> interior_p;
};

/// Same injection as simulate_shot, but with a caller-chosen dt so that runs on
/// different models stay sample-aligned.
inline ProbeTraces probe_run(const VelocityModel& vm, double dt, int src_col, int probe_row, int n_samples,
                             double f0, forward::SolverOptions opt = {}, double dt_record = 0.01) {
  forward::Simulator sim(vm.grid, build_material_fields(vm), dt, opt, 0.5);
  const long sub = std::lround(dt_record / dt);
  const auto src = forward::SourceSpec::with_frequency(src_col, f0);
  ProbeTraces t;
  t.surface_vy.push_back(0.0);
  t.interior_p.push_back(0.0);
  for (int k = 1; k < n_samples; ++k) {
    for (long s = 0; s < sub; ++s) {
      sim.step();
      sim.inject_pressure(forward::kSourceRow, src_col, src.amplitude * forward::ricker(sim.time() - src.delay, f0));
    }
    t.surface_vy.push_back(sim.state().vy(forward::kReceiverRow, static_cast<std::size_t>(src_col)));
    t.interior_p.push_back(sim.state().p(static_cast<std::size_t>(probe_row), static_cast<std::size_t>(src_col)));
  }
  return t;
}

inline VelocityModel two_layer_model(const GridSpec& g, float c1, float c2, int interface_row) {
  auto vm = constant_model(g, c1);
  for (int r = interface_row; r < g.ny; ++r) {
    for (int c = 0; c < g.nx; ++c) vm.cp(static_cast<std::size_t>(r), static_cast<std::size_t>(c)) = c2;
  }
  return vm;
}

}  // namespace velinv::testing

namespace velinv::testing {

/// Lag (in samples, sub-sample by parabolic fit) maximising the cross-correlation
/// of trace `b` against trace `a` of a receiver x sample gather.
inline double xcorr_lag(const Array2f& gather, int a, int b) {
  const std::size_t n = gather.cols();
  std::vector<double> c(n, 0.0);
  std::size_t best = 0;
  for (std::size_t lag = 0; lag < n; ++lag) {
    double s = 0.0;
    for (std::size_t k = 0; k + lag < n; ++k) {
      s += static_cast<double>(gather(static_cast<std::size_t>(a), k)) * gather(static_cast<std::size_t>(b), k + lag);
    }
    c[lag] = s;
    if (s > c[best]) best = lag;
  }
  if (best == 0 || best + 1 == n) return static_cast<double>(best);
  const double l = c[best - 1], m = c[best], r = c[best + 1];
  return static_cast<double>(best) + 0.5 * (l - r) / (l - 2.0 * m + r);
}

}  // namespace velinv::testing
