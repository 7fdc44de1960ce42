#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>

#include "core/errors.hpp"
#include "render/render.hpp"

namespace velinv::render {

namespace fs = std::filesystem;

Image::Image(int w, int h, Rgb background) : width(w), height(h) {
  if (w <= 0 || h <= 0) throw ConfigError("image dimensions must be positive");
  pixels.resize(static_cast<std::size_t>(w) * h * 3);
  for (std::size_t i = 0; i < pixels.size(); i += 3) std::copy(background.begin(), background.end(), pixels.begin() + i);
}

void Image::set(int x, int y, Rgb c) {
  if (x < 0 || y < 0 || x >= width || y >= height) return;
  std::copy(c.begin(), c.end(), pixels.begin() + (static_cast<std::size_t>(y) * width + x) * 3);
}

Rgb Image::get(int x, int y) const {
  const std::size_t o = (static_cast<std::size_t>(y) * width + x) * 3;
  return {pixels[o], pixels[o + 1], pixels[o + 2]};
}

void Image::fill_rect(int x0, int y0, int x1, int y1, Rgb c) {
  for (int y = std::max(0, y0); y < std::min(height, y1); ++y) {
    for (int x = std::max(0, x0); x < std::min(width, x1); ++x) set(x, y, c);
  }
}

void Image::draw_line(int x0, int y0, int x1, int y1, Rgb c) {
  // Bresenham
  const int dx = std::abs(x1 - x0), sx = x0 < x1 ? 1 : -1;
  const int dy = -std::abs(y1 - y0), sy = y0 < y1 ? 1 : -1;
  int err = dx + dy;
  while (true) {
    set(x0, y0, c);
    if (x0 == x1 && y0 == y1) break;
    const int e2 = 2 * err;
    if (e2 >= dy) {
      err += dy;
      x0 += sx;
    }
    if (e2 <= dx) {
      err += dx;
      y0 += sy;
    }
  }
}

void Image::blit(const Image& src, int x, int y) {
  for (int r = 0; r < src.height; ++r) {
    for (int c = 0; c < src.width; ++c) set(x + c, y + r, src.get(c, r));
  }
}

Rgb viridis(double t) {
  static constexpr std::array<Rgb, 11> kStops = {{{0x44, 0x01, 0x54},
                                                  {0x48, 0x24, 0x75},
                                                  {0x41, 0x44, 0x87},
                                                  {0x35, 0x5f, 0x8d},
                                                  {0x2a, 0x78, 0x8e},
                                                  {0x21, 0x91, 0x8c},
                                                  {0x22, 0xa8, 0x84},
                                                  {0x44, 0xbf, 0x70},
                                                  {0x7a, 0xd1, 0x51},
                                                  {0xbd, 0xdf, 0x26},
                                                  {0xfd, 0xe7, 0x25}}};
  if (std::isnan(t)) return {0, 0, 0};
  t = std::clamp(t, 0.0, 1.0) * 10.0;
  const int i = std::min(9, static_cast<int>(t));
  const double f = t - i;
  Rgb out{};
  for (int k = 0; k < 3; ++k) {
    out[k] = static_cast<std::uint8_t>(std::lround(kStops[i][k] * (1.0 - f) + kStops[i + 1][k] * f));
  }
  return out;
}

Rgb series_color(std::size_t i) {
  static constexpr std::array<Rgb, 6> kColors = {
      {{0, 0, 0}, {214, 39, 40}, {31, 119, 180}, {44, 160, 44}, {148, 103, 189}, {255, 127, 14}}};
  return kColors[i % kColors.size()];
}

void write_png(const fs::path& path, const Image& img) {
  if (img.width <= 0 || img.height <= 0) throw ConfigError("cannot write an empty image");
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  png_image pi{};
  pi.version = PNG_IMAGE_VERSION;
  pi.width = static_cast<png_uint_32>(img.width);
  pi.height = static_cast<png_uint_32>(img.height);
  pi.format = PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&pi, tmp.c_str(), 0, img.pixels.data(), 0, nullptr)) {
    const std::string msg = pi.message;
    png_image_free(&pi);
    throw DataError("cannot write " + path.string() + ": " + msg);
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw DataError("cannot rename " + tmp.string() + ": " + ec.message());
}

std::pair<int, int> png_dimensions(const fs::path& path) {
  png_image pi{};
  pi.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&pi, path.c_str())) {
    throw DataError("cannot read PNG " + path.string() + ": " + pi.message);
  }
  const std::pair<int, int> dims{static_cast<int>(pi.width), static_cast<int>(pi.height)};
  png_image_free(&pi);
  return dims;
}

}  // namespace velinv::render
