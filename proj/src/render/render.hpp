#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "core/model.hpp"

namespace velinv::render {

using Rgb = std::array<std::uint8_t, 3>;

struct Image {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;  // RGB, row-major

  Image() = default;
  Image(int w, int h, Rgb background = {255, 255, 255});

  void set(int x, int y, Rgb c);
  Rgb get(int x, int y) const;
  void fill_rect(int x0, int y0, int x1, int y1, Rgb c);  // half-open
  void draw_line(int x0, int y0, int x1, int y1, Rgb c);
  void blit(const Image& src, int x, int y);
};

/// Piecewise-linear viridis through its 11 reference stops; t is clamped to [0, 1].
Rgb viridis(double t);
/// Fixed series colours for line and bar plots.
Rgb series_color(std::size_t i);

void write_png(const std::filesystem::path& path, const Image& img);
/// (width, height) from the PNG header.
std::pair<int, int> png_dimensions(const std::filesystem::path& path);

/// Each cell becomes a scale x scale block coloured on [lo, hi].
Image heatmap(const Array2f& values, double lo, double hi, int scale = 1);

/// Velocity maps share the fixed [vmin, vmax] colour scale of the normalization.
void render_velocity_map(const std::filesystem::path& path, const Array2f& cp, const NormalizationSpec& norm,
                         int scale = 2);
/// Side-by-side maps (e.g. truth, single model, ensemble) on the same scale.
void render_velocity_panels(const std::filesystem::path& path, const std::vector<Array2f>& maps,
                            const NormalizationSpec& norm, int scale = 2);
/// Wavefield magnitude panels, coloured on [0, global max].
void render_snapshots(const std::filesystem::path& path, const std::vector<Array2f>& fields, int columns = 3,
                      int scale = 2);
/// Overlaid histograms, one colour per series, over [lo, hi].
void render_histogram(const std::filesystem::path& path, const std::vector<std::vector<double>>& series, int bins,
                      double lo, double hi);

struct ProfileSeries {
  std::string name;
  std::vector<double> values;  // one per depth
};

/// Column of `cp` nearest to horizontal position x_m (cell centres).
std::vector<double> vertical_profile(const Array2f& cp, const GridSpec& grid, double x_m);

/// CSV "depth_m,<name>..." and a velocity-versus-depth line plot.
void write_profiles(const std::filesystem::path& csv_path, const std::filesystem::path& png_path,
                    const std::vector<double>& depths, const std::vector<ProfileSeries>& series,
                    const NormalizationSpec& norm);

}  // namespace velinv::render
