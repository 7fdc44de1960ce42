#pragma once

#include <utility>

#include "core/array2d.hpp"

namespace velinv::net {

/// Valid-mode 3x3 correlation with Gx = [[-1,0,1],[-2,0,2],[-1,0,1]] and Gy = Gx^T.
/// Outputs are (rows-2) x (cols-2); element (r, c) is centred on input (r+1, c+1).
std::pair<Array2d, Array2d> sobel_filter(const Array2d& img);
std::pair<Array2d, Array2d> sobel_filter(const Array2f& img);

struct LossTerms {
  double mse = 0.0;
  double sobel_norm = 0.0;  // sqrt(sum gx^2 + gy^2) / interior pixel count
  double total = 0.0;       // mse + reg_lambda * sobel_norm
};

/// Mean squared error plus reg_lambda times the normalised Sobel magnitude of `pred`.
/// When `grad` is non-null it receives dTotal/dPred (zero subgradient where the Sobel norm vanishes).
LossTerms loss(const Array2f& pred, const Array2f& target, double reg_lambda, Array2f* grad = nullptr);
LossTerms loss(const Array2d& pred, const Array2d& target, double reg_lambda, Array2d* grad = nullptr);

double mse(const Array2f& a, const Array2f& b);

}  // namespace velinv::net
