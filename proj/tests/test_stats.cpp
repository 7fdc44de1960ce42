#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "core/errors.hpp"
#include "oracles.hpp"
#include "stats/stats.hpp"
#include "support.hpp"

using namespace velinv;
using namespace velinv::stats;

namespace {

Array2d random_image(std::size_t r, std::size_t c, std::uint64_t seed) {
  Array2d a(r, c);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (double& v : a.values()) v = u(rng);
  return a;
}

std::vector<double> normal_sample(int n, double mu, double sd, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d(mu, sd);
  std::vector<double> v(static_cast<std::size_t>(n));
  for (double& x : v) x = d(rng);
  return v;
}

const std::vector<std::vector<double>> kGroups = {
    {8.2, 9.1, 7.7, 8.8, 9.4}, {10.1, 12.3, 9.8, 11.5, 13.0}, {7.0, 6.1, 8.4, 7.7, 5.9}};

}  // namespace

TEST_CASE("ssim identity, symmetry and range") {
  const auto a = random_image(32, 32, 1), b = random_image(32, 32, 2);
  CHECK(std::fabs(ssim(a, a) - 1.0) <= 1e-12);
  CHECK(ssim(a, b) == doctest::Approx(ssim(b, a)).epsilon(1e-14));
  Array2d neg(32, 32);
  for (std::size_t i = 0; i < a.size(); ++i) neg.values()[i] = 1.0 - a.values()[i];
  for (const Array2d* other : {&b, static_cast<const Array2d*>(&neg)}) {
    const double s = ssim(a, *other);
    CHECK(s >= -1.0);
    CHECK(s <= 1.0);
  }
  CHECK(ssim(a, neg) < 0.0);
}

TEST_CASE("ssim matches the direct windowed definition") {
  for (std::uint64_t seed : {3, 4, 5}) {
    const auto a = random_image(32, 32, seed);
    auto b = a;
    std::mt19937_64 rng(seed + 10);
    std::normal_distribution<double> n(0.0, 0.1);
    for (double& v : b.values()) v += n(rng);
    CHECK(std::fabs(ssim(a, b) - oracle::ssim_direct(a, b)) <= 1e-9);
  }
  const auto a = random_image(17, 23, 9), b = random_image(17, 23, 10);
  CHECK(std::fabs(ssim(a, b) - oracle::ssim_direct(a, b)) <= 1e-9);
}

TEST_CASE("ssim single-pixel perturbation stays close to one") {
  const auto a = random_image(32, 32, 6);
  auto b = a;
  b(16, 16) += 0.2;
  const double s = ssim(a, b);
  CHECK(s < 1.0);
  CHECK(s > 0.95);
}

TEST_CASE("ssim argument errors") {
  CHECK_THROWS_AS((void)ssim(Array2d(10, 10), Array2d(10, 10)), ConfigError);
  CHECK_THROWS_AS((void)ssim(Array2d(20, 20), Array2d(20, 21)), ConfigError);
  const auto g = gaussian_taps(11, 1.5);
  double s = 0;
  for (double v : g) s += v;
  CHECK(s == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(g[5] > g[4]);
  CHECK(g[0] == doctest::Approx(g[10]));
}

TEST_CASE("shapiro-wilk reference values") {
  struct Case {
    std::vector<double> x;
    double w, p;
  };
  const std::vector<Case> cases = {
      {{-1.0, 0.0, 1.0}, 1.0, 1.0},
      {{-1.335177736118937, -0.9084578685373851, -0.6045853465832371, -0.3487556955170447, -0.11418529432142838,
        0.11418529432142838, 0.3487556955170447, 0.6045853465832371, 0.9084578685373851, 1.335177736118937},
       0.9923577168228395, 0.9988865901771233},
      {{0, 0, 0, 0, 0, 100, 100, 100, 100, 100}, 0.6552710244620128, 0.0002539627375607894},
      {{2.1, 3.4, 1.9, 5.6, 4.4, 3.3, 2.8, 3.9, 4.1, 3.0, 6.2, 2.2}, 0.9377772495939797, 0.4698250253907422},
  };
  for (const auto& c : cases) {
    const auto r = shapiro_wilk(c.x);
    CHECK(r.statistic == doctest::Approx(c.w).epsilon(1e-6));
    CHECK(std::fabs(r.p_value - c.p) <= 1e-3);
  }
  CHECK_THROWS_AS((void)shapiro_wilk(std::vector<double>{1.0, 2.0}), ConfigError);
  CHECK_THROWS_AS((void)shapiro_wilk(std::vector<double>(5, 2.0)), DataError);
}

TEST_CASE("shapiro-wilk separates normal from heavily skewed samples") {
  int rejected_normal = 0, rejected_skewed = 0;
  for (std::uint64_t s = 0; s < 40; ++s) {
    const auto x = normal_sample(30, 0.0, 1.0, 100 + s);
    std::vector<double> e(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) e[i] = std::exp(2.0 * x[i]);
    rejected_normal += shapiro_wilk(x).p_value < 0.05;
    rejected_skewed += shapiro_wilk(e).p_value < 0.05;
  }
  CHECK(rejected_normal <= 8);
  CHECK(rejected_skewed >= 36);
}

TEST_CASE("levene reference values and edge cases") {
  const auto r = levene(kGroups);
  CHECK(r.statistic == doctest::Approx(1.6389678426127177).epsilon(1e-9));
  CHECK(r.p_value == doctest::Approx(0.2348007130635538).epsilon(1e-7));
  CHECK(std::fabs(r.statistic - oracle::levene_direct(kGroups)) <= 1e-9);
  CHECK(r.df1 == 2.0);
  CHECK(r.df2 == 12.0);

  const auto same = levene({kGroups[0], kGroups[0], kGroups[0]});
  CHECK(same.statistic == 0.0);
  CHECK(same.p_value == 1.0);

  // Multiplying every observation by a constant leaves the statistic alone.
  auto scaled = kGroups;
  for (auto& g : scaled) {
    for (double& v : g) v = 3.5 * v + 1.0;
  }
  CHECK(levene(scaled).statistic == doctest::Approx(r.statistic).epsilon(1e-9));

  for (std::uint64_t s = 0; s < 5; ++s) {
    const std::vector<std::vector<double>> g = {normal_sample(7, 0, 1, s), normal_sample(9, 1, 2, s + 50),
                                                normal_sample(6, 2, 0.5, s + 99)};
    CHECK(std::fabs(levene(g).statistic - oracle::levene_direct(g)) <= 1e-9);
  }
  CHECK_THROWS_AS((void)levene({kGroups[0]}), ConfigError);
  CHECK_THROWS_AS((void)levene({kGroups[0], {1.0}}), ConfigError);
}

TEST_CASE("anova reference values") {
  const auto r = anova_oneway(kGroups);
  CHECK(r.statistic == doctest::Approx(20.452905811623246).epsilon(1e-9));
  CHECK(r.p_value == doctest::Approx(0.0001361655325069511).epsilon(1e-6));
}

TEST_CASE("two-group anova equals the pooled t-test") {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const auto a = normal_sample(8 + static_cast<int>(s % 3), 0.0, 1.0, 200 + s);
    const auto b = normal_sample(9, 0.3 * static_cast<double>(s % 4), 1.3, 300 + s);
    CHECK(std::fabs(anova_oneway({a, b}).p_value - oracle::pooled_t_test_p(a, b)) <= 1e-9);
  }
}

TEST_CASE("anova invariances and edge cases") {
  const std::vector<std::vector<double>> equal_means = {{1.0, 3.0}, {0.0, 4.0}, {2.0, 2.5, 1.5}};
  const auto z = anova_oneway(equal_means);
  CHECK(z.statistic == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(z.p_value == doctest::Approx(1.0));

  auto shifted = kGroups;
  for (auto& g : shifted) {
    for (double& v : g) v += 1000.0;
  }
  const auto r = anova_oneway(kGroups);
  CHECK(anova_oneway(shifted).statistic == doctest::Approx(r.statistic).epsilon(1e-9));
  const auto re = anova_oneway({kGroups[2], kGroups[0], kGroups[1]});
  CHECK(re.statistic == doctest::Approx(r.statistic).epsilon(1e-12));

  CHECK_THROWS_AS((void)anova_oneway({{2.0, 2.0}, {2.0, 2.0}}), NumericalError);
  const auto inf = anova_oneway({{1.0, 1.0}, {2.0, 2.0}});
  CHECK(std::isinf(inf.statistic));
  CHECK(inf.p_value == 0.0);
}

TEST_CASE("f distribution") {
  for (double d : {1.0, 3.0, 10.0, 57.0}) CHECK(f_cdf(1.0, d, d) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(f_cdf(0.0, 2, 5) == 0.0);
  CHECK(f_sf(0.0, 2, 5) == 1.0);
  CHECK(f_cdf(2.5, 3, 7) == doctest::Approx(0.8564905437210608).epsilon(1e-10));
  CHECK(f_cdf(0.3, 1, 1) == doctest::Approx(0.3190057200399772).epsilon(1e-10));
  CHECK(f_sf(40, 2, 12) == doctest::Approx(4.924481522180069e-06).epsilon(1e-8));
  for (double x : {0.2, 0.9, 1.7, 4.0}) {
    for (auto [d1, d2] : {std::pair{2.0, 5.0}, {3.0, 12.0}, {11.0, 4.0}}) {
      CHECK(std::fabs(f_cdf(x, d1, d2) - oracle::f_cdf_quadrature(x, d1, d2)) <= 1e-6);
      CHECK(f_cdf(x, d1, d2) + f_sf(x, d1, d2) == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
  double prev = 0.0;
  for (double x = 0.05; x < 20.0; x += 0.05) {
    const double c = f_cdf(x, 4, 9);
    CHECK(c >= prev);
    CHECK(c <= 1.0);
    prev = c;
  }
}

TEST_CASE("p-values are always in the unit interval") {
  for (std::uint64_t s = 0; s < 20; ++s) {
    const std::vector<std::vector<double>> g = {normal_sample(5, 0, 1, s), normal_sample(5, 0.5 * s, 1, s + 1),
                                                normal_sample(5, 0, 0.1 + 0.2 * s, s + 2)};
    for (const auto& r : {levene(g), anova_oneway(g), shapiro_wilk(g[1])}) {
      CHECK(r.p_value >= 0.0);
      CHECK(r.p_value <= 1.0);
    }
  }
}

TEST_CASE("mean and sample deviation") {
  const std::vector<double> x{2, 4, 4, 4, 5, 5, 7, 9};
  CHECK(mean(x) == 5.0);
  CHECK(stddev(x) == doctest::Approx(std::sqrt(32.0 / 7.0)));
  CHECK(stddev(std::vector<double>{3.0}) == 0.0);
  CHECK(normal_quantile(normal_cdf(1.3)) == doctest::Approx(1.3).epsilon(1e-9));
}
