#include "features/features.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <mutex>

#include <fftw3.h>

#include "core/errors.hpp"

namespace velinv::features {

namespace {

// FFTW's planner is not re-entrant; execution of distinct plans is.
std::mutex& planner_mutex() {
  static std::mutex mu;
  return mu;
}

template <typename T>
Array2D<T> rescale_impl(const Array2D<T>& a) {
  if (a.empty()) return a;
  T lo = a.values()[0], hi = a.values()[0];
  for (T v : a.values()) {
    if (!std::isfinite(v)) throw DataError("rescale01: non-finite input");
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  Array2D<T> out(a.rows(), a.cols());
  if (hi == lo) {
    out.fill(T(0.5));
    return out;
  }
  const double span = static_cast<double>(hi) - static_cast<double>(lo);
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a.values()[i] == lo) {
      out.values()[i] = T(0);
    } else if (a.values()[i] == hi) {
      out.values()[i] = T(1);
    } else {
      out.values()[i] = static_cast<T>((static_cast<double>(a.values()[i]) - lo) / span);
    }
  }
  return out;
}

}  // namespace

std::string to_string(ShotSubset s) {
  switch (s) {
    case ShotSubset::Single: return "single";
    case ShotSubset::Triple: return "triple";
    case ShotSubset::All: return "all";
  }
  return "all";
}

ShotSubset subset_from_string(const std::string& s) {
  if (s == "single" || s == "1") return ShotSubset::Single;
  if (s == "triple" || s == "3") return ShotSubset::Triple;
  if (s == "all") return ShotSubset::All;
  throw ConfigError("unknown shot subset '" + s + "'");
}

ShotSubset subset_for_count(int shots) {
  if (shots == 1) return ShotSubset::Single;
  if (shots == 3) return ShotSubset::Triple;
  return ShotSubset::All;
}

Array2f rescale01(const Array2f& a) { return rescale_impl(a); }
Array2d rescale01(const Array2d& a) { return rescale_impl(a); }

std::pair<Array2d, Array2d> fourier_channels(const Array2d& image) {
  for (double v : image.values()) {
    if (!std::isfinite(v)) throw DataError("fourier_channels: non-finite input");
  }
  const int h = static_cast<int>(image.rows()), w = static_cast<int>(image.cols());
  const int wh = w / 2 + 1;
  std::vector<double> in(image.values().begin(), image.values().end());
  auto* out = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * static_cast<std::size_t>(h) * wh));
  fftw_plan plan;
  {
    std::lock_guard<std::mutex> lock(planner_mutex());
    plan = fftw_plan_dft_r2c_2d(h, w, in.data(), out, FFTW_ESTIMATE);
  }
  fftw_execute(plan);

  Array2d re(image.rows(), image.cols()), im(image.rows(), image.cols());
  for (int k = 0; k < h; ++k) {
    for (int l = 0; l < w; ++l) {
      double a, b;
      if (l < wh) {
        const auto& z = out[static_cast<std::size_t>(k) * wh + l];
        a = z[0];
        b = z[1];
      } else {
        // Hermitian completion of the half spectrum.
        const auto& z = out[static_cast<std::size_t>((h - k) % h) * wh + (w - l)];
        a = z[0];
        b = -z[1];
      }
      re(static_cast<std::size_t>(k), static_cast<std::size_t>(l)) = a;
      im(static_cast<std::size_t>(k), static_cast<std::size_t>(l)) = b;
    }
  }
  {
    std::lock_guard<std::mutex> lock(planner_mutex());
    fftw_destroy_plan(plan);
  }
  fftw_free(out);
  return {std::move(re), std::move(im)};
}

Array2d resample_time_axis(const Array2f& gather, int height) {
  const std::size_t nr = gather.rows(), ns = gather.cols();
  if (height < 2 || ns < 2) throw ConfigError("resampling needs at least two samples");
  Array2d out(static_cast<std::size_t>(height), nr);
  const double scale = static_cast<double>(ns - 1) / (height - 1);
  for (int k = 0; k < height; ++k) {
    const double u = k * scale;
    const auto i0 = std::min(static_cast<std::size_t>(u), ns - 2);
    const double f = u - static_cast<double>(i0);
    for (std::size_t r = 0; r < nr; ++r) {
      out(static_cast<std::size_t>(k), r) = (1.0 - f) * gather(r, i0) + f * gather(r, i0 + 1);
    }
  }
  return out;
}

std::vector<std::size_t> select_shots(std::size_t n_shots, ShotSubset subset) {
  if (n_shots == 0) throw DataError("record has no shots");
  switch (subset) {
    case ShotSubset::Single: return {n_shots / 2};
    case ShotSubset::Triple:
      if (n_shots < 3) throw DataError("triple-shot subset requested from a record with fewer than 3 shots");
      return {0, n_shots / 2, n_shots - 1};
    case ShotSubset::All: break;
  }
  std::vector<std::size_t> all(n_shots);
  for (std::size_t i = 0; i < n_shots; ++i) all[i] = i;
  return all;
}

int channel_count(std::size_t n_selected, bool use_fourier) {
  return static_cast<int>(use_fourier ? 3 * n_selected : n_selected);
}

InputTensor assemble_input(const SeismicRecord& record, const FeatureConfig& cfg) {
  const auto chosen = select_shots(record.shots.size(), cfg.shot_subset);
  const int width = record.shots.front().n_receivers();
  const int n = static_cast<int>(chosen.size());
  InputTensor x(channel_count(chosen.size(), cfg.use_fourier), cfg.resample_height, width);

  auto put = [&](int channel, const Array2d& img) {
    float* dst = x.channel(channel);
    for (std::size_t i = 0; i < img.size(); ++i) dst[i] = static_cast<float>(img.values()[i]);
  };
  for (int s = 0; s < n; ++s) {
    const Array2d raw = resample_time_axis(record.shots[chosen[static_cast<std::size_t>(s)]].data, cfg.resample_height);
    put(s, rescale01(raw));
    if (cfg.use_fourier) {
      auto [re, im] = fourier_channels(raw);
      put(n + 2 * s, rescale01(re));
      put(n + 2 * s + 1, rescale01(im));
    }
  }
  return x;
}

}  // namespace velinv::features
