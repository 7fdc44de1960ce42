#include <doctest.h>

#include <cmath>
#include <complex>
#include <numbers>

#include "core/errors.hpp"
#include "features/features.hpp"
#include "support.hpp"

using namespace velinv;
using namespace velinv::features;

namespace {

// Straight O(N^2 M^2) DFT as the oracle.
void naive_dft(const Array2d& x, Array2d& re, Array2d& im) {
  const std::size_t h = x.rows(), w = x.cols();
  re = Array2d(h, w);
  im = Array2d(h, w);
  for (std::size_t k = 0; k < h; ++k) {
    for (std::size_t l = 0; l < w; ++l) {
      std::complex<double> s = 0.0;
      for (std::size_t m = 0; m < h; ++m) {
        for (std::size_t n = 0; n < w; ++n) {
          const double ang = -2.0 * std::numbers::pi *
                             (static_cast<double>(k * m) / static_cast<double>(h) +
                              static_cast<double>(l * n) / static_cast<double>(w));
          s += x(m, n) * std::complex<double>(std::cos(ang), std::sin(ang));
        }
      }
      re(k, l) = s.real();
      im(k, l) = s.imag();
    }
  }
}

SeismicRecord synthetic_record(int shots, int receivers, int samples) {
  SeismicRecord r;
  r.model_id = "syn";
  for (int s = 0; s < shots; ++s) {
    ShotGather g;
    g.emitter_index = s;
    g.emitter_column = s * 3;
    g.data = Array2f(static_cast<std::size_t>(receivers), static_cast<std::size_t>(samples));
    for (std::size_t i = 0; i < g.data.size(); ++i) g.data.values()[i] = std::sin(0.01f * i * (s + 1)) * (s + 1);
    r.shots.push_back(g);
  }
  return r;
}

}  // namespace

TEST_CASE("rescale01") {
  Array2d a(1, 3);
  a(0, 0) = -2;
  a(0, 1) = 0;
  a(0, 2) = 2;
  const auto r = rescale01(a);
  CHECK(r(0, 0) == 0.0);
  CHECK(r(0, 1) == 0.5);
  CHECK(r(0, 2) == 1.0);

  const auto c = rescale01(Array2d(4, 4, 7.25));
  for (double v : c.values()) CHECK(v == 0.5);

  const auto rnd = rescale01(velinv::testing::random_image(13, 17, 9, -40.0, 3.0));
  CHECK(*std::min_element(rnd.values().begin(), rnd.values().end()) == 0.0);
  CHECK(*std::max_element(rnd.values().begin(), rnd.values().end()) == 1.0);
}

TEST_CASE("fourier channels of a delta are flat") {
  Array2d x(8, 6, 0.0);
  x(0, 0) = 1.0;
  const auto [re, im] = fourier_channels(x);
  for (double v : re.values()) CHECK(v == doctest::Approx(1.0).epsilon(1e-14));
  for (double v : im.values()) CHECK(std::fabs(v) <= 1e-14);
}

TEST_CASE("fourier channels match a naive DFT") {
  const auto x = velinv::testing::random_image(9, 12, 4, -1.0, 1.0);
  const auto [re, im] = fourier_channels(x);
  Array2d nre, nim;
  naive_dft(x, nre, nim);
  for (std::size_t i = 0; i < x.size(); ++i) {
    CHECK(re.values()[i] == doctest::Approx(nre.values()[i]).epsilon(1e-10).scale(10.0));
    CHECK(im.values()[i] == doctest::Approx(nim.values()[i]).epsilon(1e-10).scale(10.0));
  }
}

TEST_CASE("DFT of a real input: Hermitian symmetry and Parseval") {
  const auto x = velinv::testing::random_image(20, 31, 8, -3.0, 5.0);
  const auto [re, im] = fourier_channels(x);
  const std::size_t h = x.rows(), w = x.cols();
  double scale = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) scale = std::max(scale, std::hypot(re.values()[i], im.values()[i]));
  for (std::size_t k = 0; k < h; ++k) {
    for (std::size_t l = 0; l < w; ++l) {
      const std::size_t k2 = (h - k) % h, l2 = (w - l) % w;
      CHECK(std::fabs(re(k, l) - re(k2, l2)) <= 1e-9 * scale);
      CHECK(std::fabs(im(k, l) + im(k2, l2)) <= 1e-9 * scale);
    }
  }
  double ex = 0.0, eX = 0.0;
  for (double v : x.values()) ex += v * v;
  for (std::size_t i = 0; i < x.size(); ++i) eX += re.values()[i] * re.values()[i] + im.values()[i] * im.values()[i];
  CHECK(eX / static_cast<double>(h * w) == doctest::Approx(ex).epsilon(1e-6));
}

TEST_CASE("time-axis resampling") {
  Array2f g(3, 5);
  for (std::size_t r = 0; r < 3; ++r) {
    for (std::size_t k = 0; k < 5; ++k) g(r, k) = static_cast<float>(10 * r + k);
  }
  const auto same = resample_time_axis(g, 5);
  REQUIRE(same.rows() == 5);
  REQUIRE(same.cols() == 3);
  for (std::size_t k = 0; k < 5; ++k) CHECK(same(k, 2) == doctest::Approx(20.0 + k));
  const auto up = resample_time_axis(g, 9);
  // Linear data stays linear; endpoints are preserved.
  CHECK(up(0, 1) == doctest::Approx(10.0));
  CHECK(up(8, 1) == doctest::Approx(14.0));
  CHECK(up(4, 1) == doctest::Approx(12.0));
}

TEST_CASE("shot subsets") {
  CHECK(select_shots(9, ShotSubset::Single) == std::vector<std::size_t>{4});
  CHECK(select_shots(9, ShotSubset::Triple) == std::vector<std::size_t>{0, 4, 8});
  CHECK(select_shots(5, ShotSubset::Triple) == std::vector<std::size_t>{0, 2, 4});
  CHECK(select_shots(5, ShotSubset::All).size() == 5);
  CHECK(subset_for_count(1) == ShotSubset::Single);
  CHECK(subset_for_count(3) == ShotSubset::Triple);
  CHECK(subset_for_count(9) == ShotSubset::All);
  CHECK(channel_count(9, false) == 9);
  CHECK(channel_count(9, true) == 27);
}

TEST_CASE("assemble_input channel layout and range") {
  const auto rec = synthetic_record(9, 30, 50);
  FeatureConfig cfg;
  cfg.resample_height = 20;
  cfg.use_fourier = false;
  auto x = assemble_input(rec, cfg);
  CHECK(x.channels == 9);
  CHECK(x.height == 20);
  CHECK(x.width == 30);
  cfg.use_fourier = true;
  x = assemble_input(rec, cfg);
  CHECK(x.channels == 27);
  for (float v : x.data) {
    CHECK(v >= 0.0f);
    CHECK(v <= 1.0f);
  }
  cfg.shot_subset = ShotSubset::Single;
  CHECK(assemble_input(rec, cfg).channels == 3);
}

TEST_CASE("paper-scale record gives a 27x200x300 tensor") {
  const auto rec = synthetic_record(9, 300, 200);
  FeatureConfig cfg;
  cfg.use_fourier = true;
  cfg.resample_height = 200;
  const auto x = assemble_input(rec, cfg);
  CHECK(x.channels == 27);
  CHECK(x.height == 200);
  CHECK(x.width == 300);
}
