#include "net/loss.hpp"

#include <cmath>

#include "core/errors.hpp"

namespace velinv::net {

namespace {

constexpr double kGx[3][3] = {{-1, 0, 1}, {-2, 0, 2}, {-1, 0, 1}};
constexpr double kGy[3][3] = {{-1, -2, -1}, {0, 0, 0}, {1, 2, 1}};

template <typename T>
std::pair<Array2d, Array2d> sobel_impl(const Array2D<T>& img) {
  if (img.rows() < 3 || img.cols() < 3) throw ConfigError("sobel_filter needs an image of at least 3x3");
  const std::size_t h = img.rows() - 2, w = img.cols() - 2;
  Array2d gx(h, w), gy(h, w);
  for (std::size_t r = 0; r < h; ++r) {
    for (std::size_t c = 0; c < w; ++c) {
      double sx = 0.0, sy = 0.0;
      for (std::size_t i = 0; i < 3; ++i) {
        for (std::size_t j = 0; j < 3; ++j) {
          const double v = img(r + i, c + j);
          sx += kGx[i][j] * v;
          sy += kGy[i][j] * v;
        }
      }
      gx(r, c) = sx;
      gy(r, c) = sy;
    }
  }
  return {std::move(gx), std::move(gy)};
}

}  // namespace

std::pair<Array2d, Array2d> sobel_filter(const Array2d& img) { return sobel_impl(img); }
std::pair<Array2d, Array2d> sobel_filter(const Array2f& img) { return sobel_impl(img); }

namespace {

template <typename T>
double mse_impl(const Array2D<T>& a, const Array2D<T>& b) {
  if (!a.same_shape(b)) throw ConfigError("mse: shape mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a.values()[i]) - b.values()[i];
    s += d * d;
  }
  return a.empty() ? 0.0 : s / static_cast<double>(a.size());
}

template <typename T>
LossTerms loss_impl(const Array2D<T>& pred, const Array2D<T>& target, double reg_lambda, Array2D<T>* grad) {
  if (!pred.same_shape(target)) throw ConfigError("loss: prediction and target shapes differ");
  if (reg_lambda < 0.0) throw ConfigError("reg_lambda must be non-negative");
  LossTerms t;
  const double n = static_cast<double>(pred.size());
  t.mse = mse_impl(pred, target);
  if (grad) {
    *grad = Array2D<T>(pred.rows(), pred.cols());
    for (std::size_t i = 0; i < pred.size(); ++i) {
      grad->values()[i] = static_cast<T>(2.0 * (static_cast<double>(pred.values()[i]) - target.values()[i]) / n);
    }
  }
  if (reg_lambda > 0.0) {
    auto [gx, gy] = sobel_filter(pred);
    const double interior = static_cast<double>(gx.size());
    double ss = 0.0;
    for (std::size_t i = 0; i < gx.size(); ++i) ss += gx.values()[i] * gx.values()[i] + gy.values()[i] * gy.values()[i];
    const double norm = std::sqrt(ss);
    t.sobel_norm = norm / interior;
    if (grad && norm > 0.0) {
      // d(norm)/d(pred) = (Gx^T gx + Gy^T gy) / norm, the transposed correlation.
      const double scale = reg_lambda / (interior * norm);
      for (std::size_t r = 0; r < gx.rows(); ++r) {
        for (std::size_t c = 0; c < gx.cols(); ++c) {
          const double ax = gx(r, c) * scale, ay = gy(r, c) * scale;
          for (std::size_t i = 0; i < 3; ++i) {
            for (std::size_t j = 0; j < 3; ++j) {
              (*grad)(r + i, c + j) += static_cast<T>(kGx[i][j] * ax + kGy[i][j] * ay);
            }
          }
        }
      }
    }
  }
  t.total = t.mse + reg_lambda * t.sobel_norm;
  return t;
}

}  // namespace

double mse(const Array2f& a, const Array2f& b) { return mse_impl(a, b); }

LossTerms loss(const Array2f& pred, const Array2f& target, double reg_lambda, Array2f* grad) {
  return loss_impl(pred, target, reg_lambda, grad);
}

LossTerms loss(const Array2d& pred, const Array2d& target, double reg_lambda, Array2d* grad) {
  return loss_impl(pred, target, reg_lambda, grad);
}

}  // namespace velinv::net
