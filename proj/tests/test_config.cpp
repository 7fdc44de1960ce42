#include <doctest.h>

#include <algorithm>

#include "config/config.hpp"
#include "core/errors.hpp"

using namespace velinv;
using velinv::config::RunConfig;

TEST_CASE("presets") {
  const auto paper = RunConfig::preset_named("paper");
  CHECK(paper.grid.nx == 300);
  CHECK(paper.grid.ny == 200);
  CHECK(paper.grid.dx == 10.0);
  CHECK(paper.emitters == 9);
  CHECK(paper.samples == 1600);
  CHECK(paper.train.epochs_max == 50);
  CHECK(paper.train.lr == 1e-4);
  CHECK(paper.train.batch_size == 10);
  CHECK(paper.bootstrap_count == 10);
  CHECK(paper.ablation_shots == std::vector<int>{1, 3, 9});
  CHECK(paper.acquisition().n_samples() == 200);
  CHECK_NOTHROW(paper.validate());

  const auto desk = RunConfig::preset_named("desk");
  CHECK(desk.grid.nx == 96);
  CHECK(desk.samples == 256);
  CHECK(desk.train.epochs_max == 15);
  CHECK(desk.train.lr == 1e-3);
  CHECK_NOTHROW(desk.validate());
  CHECK_THROWS_AS((void)RunConfig::preset_named("huge"), ConfigError);
}

TEST_CASE("set parses values and rejects unknown keys") {
  auto c = RunConfig::preset_named("desk");
  c.set("train.lr", "3e-4");
  c.set("features.fourier", "off");
  c.set("ablation.shots", "[1, 9]");
  c.set("render.profiles", "100,200");
  c.set("solver.top", "\"absorbing\"");
  CHECK(c.train.lr == 3e-4);
  CHECK_FALSE(c.fourier);
  CHECK(c.ablation_shots == std::vector<int>{1, 9});
  CHECK(c.profiles_m == std::vector<double>{100.0, 200.0});
  CHECK(c.solver.top == forward::TopBoundary::Absorbing);
  CHECK_THROWS_AS(c.set("train.lrr", "1"), ConfigError);
  CHECK_THROWS_AS(c.set("train.lr", "fast"), ConfigError);
  CHECK_THROWS_AS(c.set("features.fourier", "maybe"), ConfigError);
  CHECK_THROWS_AS(c.set("solver.order", "third"), ConfigError);
  CHECK_THROWS_AS(c.set("preset", "paper"), ConfigError);
}

TEST_CASE("load_text sections, comments and errors") {
  auto c = RunConfig::preset_named("desk");
  c.load_text(
      "preset = \"desk\"  # ignored here\n"
      "[train]\n"
      "epochs = 3\n"
      "lr = 2e-4   # trailing comment\n"
      "\n"
      "[paths]\n"
      "work = \"/tmp/x#y\"\n");
  CHECK(c.train.epochs_max == 3);
  CHECK(c.train.lr == 2e-4);
  CHECK(c.work_dir == "/tmp/x#y");
  try {
    c.load_text("[train]\nbogus = 1\n", "run.toml");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("run.toml:2") != std::string::npos);
  }
  CHECK_THROWS_AS(c.load_text("[train\n"), ConfigError);
  CHECK_THROWS_AS(c.load_text("epochs 3\n"), ConfigError);
  CHECK(config::preset_in_text("# c\npreset = \"paper\"\n[train]\n") == "paper");
  CHECK(config::preset_in_text("[train]\npreset = 1\n").empty());
}

TEST_CASE("dump round-trips every key") {
  auto a = RunConfig::preset_named("paper");
  a.set("train.lr", "0.00031");
  a.set("ablation.seed", "18446744073709551615");
  a.set("render.snapshot_times", "0.1, 0.25");
  auto b = RunConfig::preset_named("paper");
  b.load_text(a.dump());
  CHECK(b.dump() == a.dump());
  CHECK(b.ablation_seed == 18446744073709551615ULL);
  const auto keys = RunConfig::keys();
  for (const auto& k : keys) {
    CAPTURE(k);
    const auto section = k.substr(0, k.find('.'));
    CHECK(a.dump().find("[" + section + "]") != std::string::npos);
  }
  CHECK(std::find(keys.begin(), keys.end(), "train.reg_lambda") != keys.end());
}

TEST_CASE("validate rejects inconsistent settings") {
  const auto base = RunConfig::preset_named("desk");
  auto bad = [&](const char* key, const char* value) {
    CAPTURE(std::string(key));
    auto c = base;
    c.set(key, value);
    CHECK_THROWS_AS(c.validate(), ConfigError);
  };
  bad("features.shots", "2");
  bad("features.resample_height", "50");
  bad("dataset.samples", "5");
  bad("dataset.train_ratio", "0.9");
  bad("ablation.shots", "[1, 4]");
  bad("ablation.alpha", "1.5");
  bad("acquisition.emitters", "0");
  bad("grid.dx", "-1");
  bad("train.lr", "-1e-4");
  bad("network.depth", "0");
  bad("normalization.vmin", "9000");
}

TEST_CASE("derived settings follow the flags") {
  auto c = RunConfig::preset_named("desk");
  c.regularization = false;
  CHECK(c.train_config().reg_lambda == 0.0);
  c.regularization = true;
  CHECK(c.train_config().reg_lambda == c.reg_lambda);
  CHECK(c.ablation_configs().size() == 4 * c.ablation_shots.size());
  CHECK(c.feature_config().resample_height == c.grid.ny);
  CHECK(c.source().f0 == c.f0);
}
