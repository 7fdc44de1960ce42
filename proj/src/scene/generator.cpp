#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "core/errors.hpp"
#include "scene/scene.hpp"

namespace velinv::scene {

namespace {

constexpr int kMaxPlacementAttempts = 100;

struct Point {
  double x, y;
};

double polygon_area(const std::vector<Point>& poly) {
  double a = 0.0;
  for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
    a += poly[j].x * poly[i].y - poly[i].x * poly[j].y;
  }
  return 0.5 * std::abs(a);
}

bool inside(const std::vector<Point>& poly, double x, double y) {
  bool in = false;
  for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
    const auto& a = poly[i];
    const auto& b = poly[j];
    if ((a.y > y) != (b.y > y) && x < (b.x - a.x) * (y - a.y) / (b.y - a.y) + a.x) in = !in;
  }
  return in;
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t counter) {
  // splitmix64 finaliser over a golden-ratio stride
  std::uint64_t z = master + 0x9e3779b97f4a7c15ULL * (counter + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

void SceneParams::validate(const NormalizationSpec& norm) const {
  if (min_layers < 2 || max_layers > 5 || min_layers > max_layers) {
    throw ConfigError("layer count range must lie within [2, 5]");
  }
  auto in_norm = [&](double v) { return v >= norm.vmin && v <= norm.vmax; };
  for (double v : {layer_velocity[0], layer_velocity[1], inclusion_velocity[0], inclusion_velocity[1]}) {
    if (!in_norm(v)) throw ConfigError("scene velocity " + std::to_string(v) + " outside normalization range");
  }
  if (layer_velocity[0] > layer_velocity[1] || inclusion_velocity[0] > inclusion_velocity[1]) {
    throw ConfigError("velocity ranges must be ordered");
  }
  const auto& f = inclusion_area_fraction;
  if (!(f[0] > 0.0 && f[1] < 1.0 && f[0] <= f[1])) throw ConfigError("inclusion area fractions must lie in (0, 1)");
  if (!(undulation_amplitude >= 0.0)) throw ConfigError("undulation amplitude must be non-negative");
}

GeneratedModel gen_velocity_model_detailed(const SceneParams& params, const GridSpec& grid) {
  params.validate();
  grid.validate();
  std::mt19937_64 rng(params.seed);
  auto uniform = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };

  const double width = grid.nx * grid.dx, depth = grid.ny * grid.dy;
  const int n_layers = std::uniform_int_distribution<int>(params.min_layers, params.max_layers)(rng);

  std::vector<double> speeds(static_cast<std::size_t>(n_layers));
  for (auto& v : speeds) v = uniform(params.layer_velocity[0], params.layer_velocity[1]);
  std::sort(speeds.begin(), speeds.end());

  struct Interface {
    double mean_depth, wavelength, phase;
  };
  std::vector<Interface> interfaces(static_cast<std::size_t>(n_layers - 1));
  for (auto& it : interfaces) {
    it.mean_depth = uniform(0.1, 0.9) * depth;
    it.wavelength = uniform(0.5, 2.0) * width;
    it.phase = uniform(0.0, 2.0 * std::numbers::pi);
  }
  std::sort(interfaces.begin(), interfaces.end(),
            [](const Interface& a, const Interface& b) { return a.mean_depth < b.mean_depth; });

  GeneratedModel out;
  out.model.grid = grid;
  out.model.cp = Array2f(static_cast<std::size_t>(grid.ny), static_cast<std::size_t>(grid.nx));
  for (int c = 0; c < grid.nx; ++c) {
    const double x = (c + 0.5) * grid.dx;
    for (int r = 0; r < grid.ny; ++r) {
      const double y = (r + 0.5) * grid.dy;
      std::size_t layer = 0;
      for (const auto& it : interfaces) {
        const double d = it.mean_depth +
                         params.undulation_amplitude * std::sin(2.0 * std::numbers::pi * x / it.wavelength + it.phase);
        if (y > d) ++layer;
      }
      out.model.cp(static_cast<std::size_t>(r), static_cast<std::size_t>(c)) = static_cast<float>(speeds[layer]);
    }
  }

  // Inclusion: radially perturbed ellipse, rescaled to the target area and
  // placed with a one-cell margin from every edge.
  const double target = uniform(params.inclusion_area_fraction[0], params.inclusion_area_fraction[1]);
  const double inclusion_speed = uniform(params.inclusion_velocity[0], params.inclusion_velocity[1]);
  const std::size_t cells = static_cast<std::size_t>(grid.nx) * static_cast<std::size_t>(grid.ny);
  for (int attempt = 0; attempt < kMaxPlacementAttempts; ++attempt) {
    const int n_vertices = std::uniform_int_distribution<int>(8, 16)(rng);
    const double aspect = uniform(0.6, 1.7);
    std::vector<Point> shape;
    for (int k = 0; k < n_vertices; ++k) {
      const double theta = 2.0 * std::numbers::pi * (k + uniform(-0.2, 0.2)) / n_vertices;
      const double radius = uniform(0.8, 1.2);
      shape.push_back({radius * aspect * std::cos(theta), radius / aspect * std::sin(theta)});
    }
    const double scale = std::sqrt(target * width * depth / polygon_area(shape));
    double min_x = 1e300, max_x = -1e300, min_y = 1e300, max_y = -1e300;
    for (auto& p : shape) {
      p.x *= scale;
      p.y *= scale;
      min_x = std::min(min_x, p.x);
      max_x = std::max(max_x, p.x);
      min_y = std::min(min_y, p.y);
      max_y = std::max(max_y, p.y);
    }
    const double lo_x = grid.dx - min_x, hi_x = width - grid.dx - max_x;
    const double lo_y = grid.dy - min_y, hi_y = depth - grid.dy - max_y;
    if (lo_x > hi_x || lo_y > hi_y) continue;
    const double cx = uniform(lo_x, hi_x), cy = uniform(lo_y, hi_y);
    for (auto& p : shape) {
      p.x += cx;
      p.y += cy;
    }

    Array2D<std::uint8_t> mask(static_cast<std::size_t>(grid.ny), static_cast<std::size_t>(grid.nx));
    std::size_t count = 0;
    for (int r = 0; r < grid.ny; ++r) {
      for (int c = 0; c < grid.nx; ++c) {
        if (inside(shape, (c + 0.5) * grid.dx, (r + 0.5) * grid.dy)) {
          mask(static_cast<std::size_t>(r), static_cast<std::size_t>(c)) = 1;
          ++count;
        }
      }
    }
    const double fraction = static_cast<double>(count) / static_cast<double>(cells);
    if (fraction < params.inclusion_area_fraction[0] || fraction > params.inclusion_area_fraction[1]) continue;

    for (std::size_t i = 0; i < cells; ++i) {
      if (mask.values()[i]) out.model.cp.values()[i] = static_cast<float>(inclusion_speed);
    }
    for (auto& v : out.model.cp.values()) {
      v = static_cast<float>(std::clamp<double>(v, kVelocityFloor, kVelocityCeil));
    }
    out.inclusion_mask = std::move(mask);
    out.target_area_fraction = target;
    return out;
  }
  throw ConfigError("could not place an inclusion after " + std::to_string(kMaxPlacementAttempts) +
                    " attempts; grid too small for the requested area fraction");
}

VelocityModel gen_velocity_model(const SceneParams& params, const GridSpec& grid) {
  return gen_velocity_model_detailed(params, grid).model;
}

}  // namespace velinv::scene
