#pragma once

#include <span>
#include <vector>

#include "core/array2d.hpp"

namespace velinv::stats {

struct SsimParams {
  int window = 11;
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
  double data_range = 1.0;
};

/// Mean of the local SSIM map over all valid window positions (Gaussian window).
double ssim(const Array2d& a, const Array2d& b, const SsimParams& params = {});
double ssim(const Array2f& a, const Array2f& b, const SsimParams& params = {});

/// Normalised 1D Gaussian taps; the 2D window is their outer product.
std::vector<double> gaussian_taps(int size, double sigma);

struct TestResult {
  double statistic = 0.0;
  double p_value = 1.0;
  double df1 = 0.0;  // unused by Shapiro-Wilk
  double df2 = 0.0;
};

// Distribution functions.
double log_beta(double a, double b);
/// Regularised incomplete beta I_x(a, b) by continued fraction.
double incomplete_beta(double a, double b, double x);
double f_cdf(double x, double d1, double d2);
/// Upper tail 1 - F(x), evaluated directly for accuracy at small p.
double f_sf(double x, double d1, double d2);
double normal_cdf(double z);
double normal_quantile(double p);

/// Shapiro-Wilk W with Royston's approximation (AS R94), 3 <= n <= 50.
TestResult shapiro_wilk(std::span<const double> sample);

/// Classical (mean-centred) Levene test for equal variances.
TestResult levene(const std::vector<std::vector<double>>& groups);

/// One-way ANOVA, F = MS_between / MS_within.
TestResult anova_oneway(const std::vector<std::vector<double>>& groups);

double mean(std::span<const double> x);
/// Sample standard deviation (n - 1 denominator).
double stddev(std::span<const double> x);

}  // namespace velinv::stats
