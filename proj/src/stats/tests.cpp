#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "core/errors.hpp"
#include "stats/stats.hpp"

namespace velinv::stats {

namespace {

// Horner evaluation with cc[0] as the constant term.
double poly(const double* cc, int nord, double x) {
  double ret = cc[0];
  if (nord > 1) {
    double p = x * cc[nord - 1];
    for (int j = nord - 2; j > 0; --j) p = (p + cc[j]) * x;
    ret += p;
  }
  return ret;
}

double sign_of(int v) { return v > 0 ? 1.0 : (v < 0 ? -1.0 : 0.0); }

void check_groups(const std::vector<std::vector<double>>& groups, const char* what) {
  if (groups.size() < 2) throw ConfigError(std::string(what) + ": at least two groups required");
  for (const auto& g : groups) {
    if (g.size() < 2) throw ConfigError(std::string(what) + ": every group needs at least two observations");
    for (double v : g) {
      if (!std::isfinite(v)) throw DataError(std::string(what) + ": non-finite observation");
    }
  }
}

}  // namespace

double mean(std::span<const double> x) {
  if (x.empty()) throw ConfigError("mean of an empty sample");
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double stddev(std::span<const double> x) {
  if (x.size() < 2) return 0.0;
  const double m = mean(x);
  double ss = 0.0;
  for (double v : x) ss += (v - m) * (v - m);
  return std::sqrt(ss / static_cast<double>(x.size() - 1));
}

TestResult shapiro_wilk(std::span<const double> sample) {
  const int n = static_cast<int>(sample.size());
  if (n < 3 || n > 50) throw ConfigError("shapiro_wilk: sample size must lie in [3, 50]");
  std::vector<double> x(sample.begin(), sample.end());
  for (double v : x) {
    if (!std::isfinite(v)) throw DataError("shapiro_wilk: non-finite observation");
  }
  std::sort(x.begin(), x.end());

  static constexpr double kSmall = 1e-19;
  static constexpr double g[2] = {-2.273, 0.459};
  static constexpr double c1[6] = {0.0, 0.221157, -0.147981, -2.07119, 4.434685, -2.706056};
  static constexpr double c2[6] = {0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633};
  static constexpr double c3[4] = {0.544, -0.39978, 0.025054, -6.714e-4};
  static constexpr double c4[4] = {1.3822, -0.77857, 0.062767, -0.0020322};
  static constexpr double c5[4] = {-1.5861, -0.31082, -0.083751, 0.0038915};
  static constexpr double c6[3] = {-0.4803, -0.082676, 0.0030302};

  const int nn2 = n / 2;
  std::vector<double> a(static_cast<std::size_t>(nn2) + 1, 0.0);  // 1-based
  const double an = n;

  if (n == 3) {
    a[1] = std::sqrt(0.5);
  } else {
    const double an25 = an + 0.25;
    double summ2 = 0.0;
    for (int i = 1; i <= nn2; ++i) {
      const double mi = normal_quantile((i - 0.375) / an25);
      a[static_cast<std::size_t>(i)] = mi;
      summ2 += mi * mi;
    }
    summ2 *= 2.0;
    const double ssumm2 = std::sqrt(summ2);
    const double rsn = 1.0 / std::sqrt(an);
    const double a1 = poly(c1, 6, rsn) - a[1] / ssumm2;
    int i1;
    double fac;
    if (n > 5) {
      i1 = 3;
      const double a2 = -a[2] / ssumm2 + poly(c2, 6, rsn);
      fac = std::sqrt((summ2 - 2.0 * (a[1] * a[1]) - 2.0 * (a[2] * a[2])) /
                      (1.0 - 2.0 * (a1 * a1) - 2.0 * (a2 * a2)));
      a[2] = a2;
    } else {
      i1 = 2;
      fac = std::sqrt((summ2 - 2.0 * (a[1] * a[1])) / (1.0 - 2.0 * (a1 * a1)));
    }
    a[1] = a1;
    for (int i = i1; i <= nn2; ++i) a[static_cast<std::size_t>(i)] /= -fac;
  }

  const double range = x[static_cast<std::size_t>(n - 1)] - x[0];
  if (range < kSmall) throw DataError("shapiro_wilk: sample is constant");

  double sx = x[0] / range;
  double sa = -a[1];
  for (int i = 1, j = n - 1; i < n; --j) {
    const double xi = x[static_cast<std::size_t>(i)] / range;
    sx += xi;
    ++i;
    if (i != j) sa += sign_of(i - j) * a[static_cast<std::size_t>(std::min(i, j))];
  }
  sa /= n;
  sx /= n;
  double ssa = 0.0, ssx = 0.0, sax = 0.0;
  for (int i = 0, j = n - 1; i < n; ++i, --j) {
    const double asa = (i != j) ? sign_of(i - j) * a[static_cast<std::size_t>(1 + std::min(i, j))] - sa : -sa;
    const double xsx = x[static_cast<std::size_t>(i)] / range - sx;
    ssa += asa * asa;
    ssx += xsx * xsx;
    sax += asa * xsx;
  }
  // w1 = 1 - W, kept separately to limit rounding near W = 1.
  const double ssassx = std::sqrt(ssa * ssx);
  const double w1 = (ssassx - sax) * (ssassx + sax) / (ssa * ssx);
  TestResult r;
  r.statistic = 1.0 - w1;

  if (n == 3) {
    constexpr double pi6 = 1.90985931710274;   // 6/pi
    constexpr double stqr = 1.04719755119660;  // pi/3
    r.p_value = std::clamp(pi6 * (std::asin(std::sqrt(r.statistic)) - stqr), 0.0, 1.0);
    return r;
  }
  double y = std::log(w1);
  const double lxx = std::log(an);
  double m, s;
  if (n <= 11) {
    const double gamma = poly(g, 2, an);
    if (y >= gamma) {
      r.p_value = 1e-99;
      return r;
    }
    y = -std::log(gamma - y);
    m = poly(c3, 4, an);
    s = std::exp(poly(c4, 4, an));
  } else {
    m = poly(c5, 4, lxx);
    s = std::exp(poly(c6, 3, lxx));
  }
  // Upper normal tail.
  r.p_value = std::clamp(0.5 * std::erfc((y - m) / (s * std::sqrt(2.0))), 0.0, 1.0);
  return r;
}

TestResult levene(const std::vector<std::vector<double>>& groups) {
  check_groups(groups, "levene");
  const std::size_t k = groups.size();
  std::vector<std::vector<double>> z(k);
  std::vector<double> zbar(k);
  std::size_t total_n = 0;
  double zsum = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    const double m = mean(groups[i]);
    for (double v : groups[i]) z[i].push_back(std::fabs(v - m));
    zbar[i] = mean(z[i]);
    total_n += groups[i].size();
    zsum += std::accumulate(z[i].begin(), z[i].end(), 0.0);
  }
  const double zgrand = zsum / static_cast<double>(total_n);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    num += static_cast<double>(z[i].size()) * (zbar[i] - zgrand) * (zbar[i] - zgrand);
    for (double v : z[i]) den += (v - zbar[i]) * (v - zbar[i]);
  }
  TestResult r;
  r.df1 = static_cast<double>(k - 1);
  r.df2 = static_cast<double>(total_n - k);
  // Group means that differ only by rounding of the grand mean count as equal.
  const double eps_num = std::numeric_limits<double>::epsilon() * zgrand;
  if (num <= eps_num * eps_num * static_cast<double>(total_n)) {
    r.statistic = 0.0;
    r.p_value = 1.0;
    return r;
  }
  if (den == 0.0) {
    r.statistic = std::numeric_limits<double>::infinity();
    r.p_value = 0.0;
    return r;
  }
  r.statistic = (r.df2 / r.df1) * (num / den);
  r.p_value = std::clamp(f_sf(r.statistic, r.df1, r.df2), 0.0, 1.0);
  return r;
}

TestResult anova_oneway(const std::vector<std::vector<double>>& groups) {
  check_groups(groups, "anova");
  const std::size_t k = groups.size();
  std::size_t total_n = 0;
  double sum = 0.0;
  for (const auto& g : groups) {
    total_n += g.size();
    sum += std::accumulate(g.begin(), g.end(), 0.0);
  }
  const double grand = sum / static_cast<double>(total_n);
  double ss_between = 0.0, ss_within = 0.0;
  for (const auto& g : groups) {
    const double m = mean(g);
    ss_between += static_cast<double>(g.size()) * (m - grand) * (m - grand);
    for (double v : g) ss_within += (v - m) * (v - m);
  }
  const double eps_grand = std::numeric_limits<double>::epsilon() * std::fabs(grand);
  if (ss_between <= eps_grand * eps_grand * static_cast<double>(total_n)) ss_between = 0.0;
  TestResult r;
  r.df1 = static_cast<double>(k - 1);
  r.df2 = static_cast<double>(total_n - k);
  if (ss_within == 0.0) {
    if (ss_between == 0.0) throw NumericalError("anova: all observations identical, F is undefined");
    r.statistic = std::numeric_limits<double>::infinity();
    r.p_value = 0.0;
    return r;
  }
  r.statistic = (ss_between / r.df1) / (ss_within / r.df2);
  r.p_value = std::clamp(f_sf(r.statistic, r.df1, r.df2), 0.0, 1.0);
  return r;
}

}  // namespace velinv::stats
