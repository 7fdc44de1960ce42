#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>

#include "core/errors.hpp"
#include "render/render.hpp"

namespace velinv::render {

namespace fs = std::filesystem;

namespace {

constexpr int kGap = 8;
constexpr Rgb kAxis = {96, 96, 96};

}  // namespace

Image heatmap(const Array2f& values, double lo, double hi, int scale) {
  if (values.empty()) throw ConfigError("heatmap of an empty array");
  if (scale < 1) throw ConfigError("heatmap scale must be at least 1");
  const double span = hi > lo ? hi - lo : 1.0;
  Image img(static_cast<int>(values.cols()) * scale, static_cast<int>(values.rows()) * scale);
  for (std::size_t r = 0; r < values.rows(); ++r) {
    for (std::size_t c = 0; c < values.cols(); ++c) {
      const Rgb col = viridis((values(r, c) - lo) / span);
      img.fill_rect(static_cast<int>(c) * scale, static_cast<int>(r) * scale, static_cast<int>(c + 1) * scale,
                    static_cast<int>(r + 1) * scale, col);
    }
  }
  return img;
}

void render_velocity_map(const fs::path& path, const Array2f& cp, const NormalizationSpec& norm, int scale) {
  write_png(path, heatmap(cp, norm.vmin, norm.vmax, scale));
}

void render_velocity_panels(const fs::path& path, const std::vector<Array2f>& maps, const NormalizationSpec& norm,
                            int scale) {
  if (maps.empty()) throw ConfigError("no velocity maps to render");
  const int w = static_cast<int>(maps.front().cols()) * scale;
  const int h = static_cast<int>(maps.front().rows()) * scale;
  Image canvas(static_cast<int>(maps.size()) * (w + kGap) - kGap, h);
  for (std::size_t i = 0; i < maps.size(); ++i) {
    if (!maps[i].same_shape(maps.front())) throw ConfigError("velocity panels differ in shape");
    canvas.blit(heatmap(maps[i], norm.vmin, norm.vmax, scale), static_cast<int>(i) * (w + kGap), 0);
  }
  write_png(path, canvas);
}

void render_snapshots(const fs::path& path, const std::vector<Array2f>& fields, int columns, int scale) {
  if (fields.empty()) throw ConfigError("no snapshots to render");
  columns = std::max(1, std::min<int>(columns, static_cast<int>(fields.size())));
  const int w = static_cast<int>(fields.front().cols()) * scale;
  const int h = static_cast<int>(fields.front().rows()) * scale;
  const int rows = (static_cast<int>(fields.size()) + columns - 1) / columns;
  Image canvas(columns * (w + kGap) - kGap, rows * (h + kGap) - kGap);
  for (std::size_t i = 0; i < fields.size(); ++i) {
    const int r = static_cast<int>(i) / columns, c = static_cast<int>(i) % columns;
    // Per-panel scale at the 99.5th percentile; the source singularity would
    // otherwise wash out later wavefronts.
    std::vector<float> mag(fields[i].values().begin(), fields[i].values().end());
    for (float& v : mag) v = std::fabs(v);
    const auto k = static_cast<std::ptrdiff_t>(0.995 * static_cast<double>(mag.size() - 1));
    std::nth_element(mag.begin(), mag.begin() + k, mag.end());
    const double peak = mag[static_cast<std::size_t>(k)] > 0.0f ? mag[static_cast<std::size_t>(k)] : 1.0;
    canvas.blit(heatmap(fields[i], 0.0, peak, scale), c * (w + kGap), r * (h + kGap));
  }
  write_png(path, canvas);
}

void render_histogram(const fs::path& path, const std::vector<std::vector<double>>& series, int bins, double lo,
                      double hi) {
  if (bins < 1) throw ConfigError("histogram needs at least one bin");
  if (!(hi > lo)) {
    lo -= 0.5;
    hi += 0.5;
  }
  constexpr int kW = 480, kH = 320, kMargin = 20;
  Image img(kW, kH);
  std::vector<std::vector<int>> counts(series.size(), std::vector<int>(static_cast<std::size_t>(bins), 0));
  int peak = 1;
  for (std::size_t s = 0; s < series.size(); ++s) {
    for (double v : series[s]) {
      if (!std::isfinite(v)) continue;
      const int b = std::clamp(static_cast<int>((v - lo) / (hi - lo) * bins), 0, bins - 1);
      peak = std::max(peak, ++counts[s][static_cast<std::size_t>(b)]);
    }
  }
  const int plot_w = kW - 2 * kMargin, plot_h = kH - 2 * kMargin;
  const double bin_w = static_cast<double>(plot_w) / bins;
  const double bar_w = bin_w / std::max<std::size_t>(1, series.size());
  for (std::size_t s = 0; s < series.size(); ++s) {
    for (int b = 0; b < bins; ++b) {
      const int n = counts[s][static_cast<std::size_t>(b)];
      if (n == 0) continue;
      const int x0 = kMargin + static_cast<int>(b * bin_w + s * bar_w);
      const int x1 = std::max(x0 + 1, kMargin + static_cast<int>(b * bin_w + (s + 1) * bar_w));
      const int top = kH - kMargin - n * plot_h / peak;
      img.fill_rect(x0, top, x1, kH - kMargin, series_color(s + 1));
    }
  }
  img.draw_line(kMargin, kH - kMargin, kW - kMargin, kH - kMargin, kAxis);
  img.draw_line(kMargin, kMargin, kMargin, kH - kMargin, kAxis);
  write_png(path, img);
}

std::vector<double> vertical_profile(const Array2f& cp, const GridSpec& grid, double x_m) {
  if (cp.empty() || !(grid.dx > 0.0)) throw ConfigError("vertical_profile needs a populated grid");
  if (x_m < 0.0 || x_m > grid.nx * grid.dx) throw ConfigError("profile position outside the model");
  const auto col = static_cast<std::size_t>(std::clamp(static_cast<long>(std::floor(x_m / grid.dx)), 0L,
                                                       static_cast<long>(cp.cols()) - 1));
  std::vector<double> out(cp.rows());
  for (std::size_t r = 0; r < cp.rows(); ++r) out[r] = cp(r, col);
  return out;
}

void write_profiles(const fs::path& csv_path, const fs::path& png_path, const std::vector<double>& depths,
                    const std::vector<ProfileSeries>& series, const NormalizationSpec& norm) {
  if (series.empty()) throw ConfigError("no profiles to write");
  for (const auto& s : series) {
    if (s.values.size() != depths.size()) throw ConfigError("profile '" + s.name + "' has the wrong length");
  }
  if (csv_path.has_parent_path()) fs::create_directories(csv_path.parent_path());
  {
    std::ofstream out(csv_path);
    if (!out) throw DataError("cannot write " + csv_path.string());
    out << "depth_m";
    for (const auto& s : series) out << ',' << s.name;
    out << '\n' << std::setprecision(10);
    for (std::size_t i = 0; i < depths.size(); ++i) {
      out << depths[i];
      for (const auto& s : series) out << ',' << s.values[i];
      out << '\n';
    }
    if (!out) throw DataError("write failed for " + csv_path.string());
  }
  // Velocity on the horizontal axis, depth increasing downwards.
  constexpr int kW = 320, kH = 480, kMargin = 20;
  Image img(kW, kH);
  img.draw_line(kMargin, kMargin, kW - kMargin, kMargin, kAxis);
  img.draw_line(kMargin, kMargin, kMargin, kH - kMargin, kAxis);
  const double dmax = depths.empty() ? 1.0 : std::max(depths.back(), 1e-9);
  const auto px = [&](double v) {
    return kMargin + static_cast<int>(std::lround((v - norm.vmin) / (norm.vmax - norm.vmin) * (kW - 2 * kMargin)));
  };
  const auto py = [&](double d) { return kMargin + static_cast<int>(std::lround(d / dmax * (kH - 2 * kMargin))); };
  for (std::size_t s = 0; s < series.size(); ++s) {
    for (std::size_t i = 1; i < depths.size(); ++i) {
      img.draw_line(px(series[s].values[i - 1]), py(depths[i - 1]), px(series[s].values[i]), py(depths[i]),
                    series_color(s));
    }
  }
  write_png(png_path, img);
}

}  // namespace velinv::render
