#include <cmath>

#include "core/errors.hpp"
#include "stats/stats.hpp"

namespace velinv::stats {

namespace {

// Valid-mode separable filtering: (h - n + 1) x (w - n + 1).
Array2d filter_valid(const Array2d& img, const std::vector<double>& g) {
  const std::size_t n = g.size();
  const std::size_t h = img.rows(), w = img.cols();
  const std::size_t oh = h - n + 1, ow = w - n + 1;
  Array2d tmp(h, ow);
  for (std::size_t r = 0; r < h; ++r) {
    for (std::size_t c = 0; c < ow; ++c) {
      double s = 0.0;
      for (std::size_t k = 0; k < n; ++k) s += g[k] * img(r, c + k);
      tmp(r, c) = s;
    }
  }
  Array2d out(oh, ow);
  for (std::size_t r = 0; r < oh; ++r) {
    for (std::size_t c = 0; c < ow; ++c) {
      double s = 0.0;
      for (std::size_t k = 0; k < n; ++k) s += g[k] * tmp(r + k, c);
      out(r, c) = s;
    }
  }
  return out;
}

Array2d product(const Array2d& a, const Array2d& b) {
  Array2d out(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.size(); ++i) out.values()[i] = a.values()[i] * b.values()[i];
  return out;
}

Array2d to_double(const Array2f& a) {
  Array2d out(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.size(); ++i) out.values()[i] = a.values()[i];
  return out;
}

}  // namespace

std::vector<double> gaussian_taps(int size, double sigma) {
  std::vector<double> g(static_cast<std::size_t>(size));
  const double centre = (size - 1) / 2.0;
  double sum = 0.0;
  for (int i = 0; i < size; ++i) {
    const double d = i - centre;
    g[static_cast<std::size_t>(i)] = std::exp(-d * d / (2.0 * sigma * sigma));
    sum += g[static_cast<std::size_t>(i)];
  }
  for (auto& v : g) v /= sum;
  return g;
}

double ssim(const Array2d& a, const Array2d& b, const SsimParams& params) {
  if (!a.same_shape(b)) throw ConfigError("ssim: image shapes differ");
  if (params.window < 1 || a.rows() < static_cast<std::size_t>(params.window) ||
      a.cols() < static_cast<std::size_t>(params.window)) {
    throw ConfigError("ssim: window larger than image");
  }
  if (!(params.k1 > 0.0) || !(params.k2 > 0.0)) throw ConfigError("ssim: k1 and k2 must be positive");
  const auto g = gaussian_taps(params.window, params.sigma);
  const double c1 = (params.k1 * params.data_range) * (params.k1 * params.data_range);
  const double c2 = (params.k2 * params.data_range) * (params.k2 * params.data_range);

  const Array2d mu_a = filter_valid(a, g);
  const Array2d mu_b = filter_valid(b, g);
  const Array2d e_aa = filter_valid(product(a, a), g);
  const Array2d e_bb = filter_valid(product(b, b), g);
  const Array2d e_ab = filter_valid(product(a, b), g);

  double total = 0.0;
  for (std::size_t i = 0; i < mu_a.size(); ++i) {
    const double ma = mu_a.values()[i], mb = mu_b.values()[i];
    const double va = e_aa.values()[i] - ma * ma;
    const double vb = e_bb.values()[i] - mb * mb;
    const double cov = e_ab.values()[i] - ma * mb;
    total += ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
  }
  return total / static_cast<double>(mu_a.size());
}

double ssim(const Array2f& a, const Array2f& b, const SsimParams& params) {
  return ssim(to_double(a), to_double(b), params);
}

}  // namespace velinv::stats
