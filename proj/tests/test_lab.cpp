#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <set>

#include "core/errors.hpp"
#include "lab/lab.hpp"
#include "scene/scene.hpp"
#include "support.hpp"

using namespace velinv;
using namespace velinv::lab;
namespace fs = std::filesystem;

namespace {

PopulationResult fake_population(int shots, bool f, bool r, std::vector<double> ssims) {
  PopulationResult p;
  p.config = {shots, f, r, static_cast<int>(ssims.size()), 1};
  p.test_ssims = std::move(ssims);
  p.mean = stats::mean(p.test_ssims);
  p.std = stats::stddev(p.test_ssims);
  p.valid = p.test_ssims.size() >= 3;
  return p;
}

std::vector<double> noisy(double mu, double sd, int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d(mu, sd);
  std::vector<double> v(static_cast<std::size_t>(n));
  for (double& x : v) x = d(rng);
  return v;
}

std::vector<PopulationResult> fake_matrix(bool fourier_helps) {
  std::vector<PopulationResult> pops;
  std::uint64_t s = 0;
  for (int shots : {1, 3}) {
    for (bool f : {false, true}) {
      for (bool r : {false, true}) {
        const double mu = 0.5 + ((fourier_helps && f) ? 0.2 : 0.0);
        pops.push_back(fake_population(shots, f, r, noisy(mu, 0.02, 10, ++s)));
      }
    }
  }
  return pops;
}

std::string read_text(const fs::path& p) {
  std::ifstream in(p);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_CASE("bootstrap resampling") {
  std::vector<std::string> ids;
  for (int i = 0; i < 200; ++i) ids.push_back("m" + std::to_string(i));
  const auto a = bootstrap_resample(ids, 3);
  CHECK(a.size() == ids.size());
  CHECK(a == bootstrap_resample(ids, 3));
  CHECK(a != bootstrap_resample(ids, 4));
  double frac = 0.0;
  for (std::uint64_t s = 0; s < 100; ++s) {
    const auto idx = bootstrap_indices(200, s);
    frac += static_cast<double>(std::set<std::size_t>(idx.begin(), idx.end()).size()) / 200.0;
  }
  CHECK(frac / 100.0 == doctest::Approx(1.0 - std::exp(-1.0)).epsilon(0.05));
  CHECK_THROWS_AS((void)bootstrap_indices(0, 1), ConfigError);
}

TEST_CASE("ablation matrix order, labels and seeds") {
  const auto m = ablation_matrix({1, 3, 9}, 10, 42);
  REQUIRE(m.size() == 12);
  CHECK(ablation_matrix({1, 9}, 10, 42).size() == 8);
  CHECK(m[0].label() == "s1_f0_r0");
  CHECK(m[1].label() == "s1_f0_r1");
  CHECK(m[2].label() == "s1_f1_r0");
  CHECK(m[11].label() == "s9_f1_r1");
  std::set<std::uint64_t> seeds;
  for (const auto& c : m) {
    for (int k = 0; k < 10; ++k) seeds.insert(c.instance_seed(k));
  }
  CHECK(seeds.size() == 120);
  CHECK(m[4].instance_seed(2) == ablation_matrix({3}, 5, 42)[0].instance_seed(2));
  CHECK_THROWS_AS((void)ablation_matrix({2}, 10, 1), ConfigError);
  CHECK_THROWS_AS((void)ablation_matrix({1}, 0, 1), ConfigError);
}

TEST_CASE("ensemble prediction is the member mean") {
  Tensor3 x(2, 8, 8);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<float> u(0, 1);
  for (float& v : x.data) v = u(rng);
  const auto w = net::init_weights({2, 4, 2}, 5);
  CHECK(ensemble_predict({w}, x) == net::forward_pass(w, x));

  // The head is linear, so negating its parameters negates the output.
  auto neg = w;
  const auto& head = neg.layers.back();
  for (std::size_t i = head.weight_offset; i < head.bias_offset + static_cast<std::size_t>(head.cout); ++i) {
    neg.params[i] = -neg.params[i];
  }
  const auto cancelled = ensemble_predict({w, neg}, x);
  for (float v : cancelled.values()) CHECK(std::fabs(v) <= 1e-6f);
  CHECK_THROWS_AS((void)ensemble_predict({}, x), ConfigError);
  CHECK_THROWS_AS((void)ensemble_predict({w, net::init_weights({2, 4, 3}, 5)}, x), ConfigError);
}

TEST_CASE("ensemble MSE never exceeds the mean member MSE") {
  net::ExampleSet test;
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<float> u(0, 1);
  for (int i = 0; i < 3; ++i) {
    net::Example e;
    e.input = Tensor3(2, 16, 16);
    for (float& v : e.input.data) v = u(rng);
    e.target = Array2f(16, 16);
    for (float& v : e.target.values()) v = u(rng);
    test.items.push_back(std::move(e));
  }
  std::vector<net::NetworkWeights> members;
  for (std::uint64_t s = 0; s < 5; ++s) members.push_back(net::init_weights({2, 4, 2}, s));
  PopulationResult pop;
  pop.config = {1, false, false, 5, 0};
  const auto r = evaluate_ensemble(pop, members, test);
  CHECK(r.ensemble_mse <= r.mean_member_mse);
  CHECK(r.ensemble_mse > 0.0);
  const auto one = evaluate_ensemble(pop, {members[0]}, test);
  CHECK(one.ensemble_mse == doctest::Approx(one.mean_member_mse).epsilon(1e-12));
}

TEST_CASE("significance pipeline on identical populations") {
  std::vector<PopulationResult> pops;
  const std::vector<double> same{0.5, 0.52, 0.49, 0.51, 0.55, 0.47};
  for (bool f : {false, true}) {
    for (bool r : {false, true}) pops.push_back(fake_population(3, f, r, same));
  }
  const auto rep = significance_pipeline(pops);
  CHECK(rep.shapiro.size() == 4);
  REQUIRE(rep.levene.size() == 1);
  CHECK(rep.levene[0].result.statistic == 0.0);
  CHECK(rep.levene[0].result.p_value == 1.0);
  REQUIRE(rep.anova_fourier.size() == 2);
  REQUIRE(rep.anova_reg.size() == 2);
  for (const auto& row : rep.anova_fourier) {
    CHECK(row.skipped.empty());
    CHECK(row.result.statistic == 0.0);
    CHECK(row.result.p_value == 1.0);
    CHECK_FALSE(row.significant);
  }
}

TEST_CASE("significance pipeline detects a separated factor") {
  const auto rep = significance_pipeline(fake_matrix(true));
  CHECK(rep.shapiro.size() == 8);
  CHECK(rep.levene.size() == 2);
  REQUIRE(rep.anova_fourier.size() == 4);
  for (const auto& row : rep.anova_fourier) {
    CHECK(row.result.p_value < 0.05);
    CHECK(row.significant);
    CHECK(row.mean_on > row.mean_off);
  }
  int reg_hits = 0;
  for (const auto& row : rep.anova_reg) reg_hits += row.significant;
  CHECK(reg_hits <= 1);
}

TEST_CASE("invalid populations are skipped, not tested") {
  auto pops = fake_matrix(false);
  pops[0].test_ssims.resize(2);
  pops[0].valid = false;
  pops[0].invalid_reason = "only 2 surviving instances (need 3)";
  const auto rep = significance_pipeline(pops);
  CHECK_FALSE(rep.shapiro[0].skipped.empty());
  CHECK(rep.levene[0].populations == 3);
  CHECK_FALSE(rep.anova_fourier[0].skipped.empty());
  CHECK_FALSE(rep.anova_reg[0].skipped.empty());
}

TEST_CASE("report files and summary") {
  velinv::testing::TempDir dir("lab_report");
  AblationReport rep;
  rep.master_seed = 9;
  rep.populations = fake_matrix(true);
  rep.significance = significance_pipeline(rep.populations);
  emit_report(rep, dir.path());
  for (const char* f : {"table1.csv", "shapiro.csv", "levene.csv", "anova_fourier.csv", "anova_reg.csv",
                        "ensembles.csv", "summary.json", "hist_shots1.png", "hist_shots3.png"}) {
    CAPTURE(f);
    CHECK(fs::exists(dir / f));
  }
  CHECK_FALSE(fs::exists(dir / "hist_shots9.png"));
  const auto t1 = read_text(dir / "table1.csv");
  CHECK(t1.rfind("shots,fourier,regularization,mean_ssim,std_ssim\n", 0) == 0);
  CHECK(std::count(t1.begin(), t1.end(), '\n') == 9);
  const auto j = summary_json(rep);
  CHECK(j.at("master_seed") == 9);
  CHECK(j.at("populations").size() == 8);
  CHECK(j.at("anova_fourier").size() == 4);
  CHECK_THROWS_AS(emit_report(AblationReport{}, dir.path()), ConfigError);
}

TEST_CASE("population run trains, resumes and reproduces") {
  velinv::testing::TempDir dir("lab_pop");
  const GridSpec g{48, 32, 31.25, 31.25};
  scene::SceneParams p;
  p.seed = 11;
  const auto acq = forward::AcquisitionSpec::equidistant(g.nx, 3, 0.3, 0.01);
  scene::GenOptions opt;
  opt.source = forward::SourceSpec::with_frequency(0, 6.0);
  const auto manifest = scene::gen_dataset(12, p, g, acq, dir / "data", opt);

  LabSettings s;
  s.network = {0, 4, 2};
  s.train.epochs_max = 2;
  s.train.batch_size = 4;
  s.train.lr = 1e-3;
  s.train.reg_lambda = 1e-3;
  s.resample_height = 32;
  s.work_dir = dir / "work";
  const AblationConfig cfg{3, true, true, 3, 77};
  const auto a = run_population(cfg, manifest, s);
  REQUIRE(a.instances.size() == 3);
  CHECK(a.valid);
  CHECK(a.test_ssims.size() == 3);
  for (const auto& i : a.instances) CHECK(fs::exists(s.work_dir / i.checkpoint));

  const auto ck = s.work_dir / a.instances[1].checkpoint;
  const auto before = read_text(ck);
  const auto mtime = fs::last_write_time(s.work_dir / a.instances[0].checkpoint);
  fs::remove(ck);
  fs::remove(fs::path(ck).replace_extension(".json"));
  const auto b = run_population(cfg, manifest, s);
  CHECK(read_text(ck) == before);
  CHECK(fs::last_write_time(s.work_dir / a.instances[0].checkpoint) == mtime);
  CHECK(b.test_ssims == a.test_ssims);
}
