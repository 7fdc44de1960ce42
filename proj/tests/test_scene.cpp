#include <doctest.h>

#include <algorithm>
#include <set>

#include "core/container.hpp"
#include "core/errors.hpp"
#include "scene/scene.hpp"
#include "support.hpp"

using namespace velinv;
using namespace velinv::scene;

TEST_CASE("generated models stay in the layer/inclusion velocity range") {
  const auto g = velinv::testing::desk_grid();
  SceneParams p;
  for (std::uint64_t seed = 1; seed <= 40; ++seed) {
    p.seed = seed;
    const auto gm = gen_velocity_model_detailed(p, g);
    CHECK(gm.model.min_speed() >= 2500.0f);
    CHECK(gm.model.max_speed() <= 4500.0f);
    std::size_t inside = 0;
    for (auto m : gm.inclusion_mask.values()) inside += m ? 1 : 0;
    const double frac = static_cast<double>(inside) / static_cast<double>(gm.inclusion_mask.size());
    CAPTURE(seed);
    CHECK(frac >= p.inclusion_area_fraction[0] - 0.01);
    CHECK(frac <= p.inclusion_area_fraction[1] + 0.01);
    for (std::size_t i = 0; i < gm.inclusion_mask.size(); ++i) {
      if (gm.inclusion_mask.values()[i]) CHECK(gm.model.cp.values()[i] >= 4300.0f);
    }
  }
}

TEST_CASE("model generation is deterministic per seed") {
  const auto g = velinv::testing::desk_grid();
  SceneParams p;
  p.seed = 77;
  const auto a = gen_velocity_model(p, g);
  const auto b = gen_velocity_model(p, g);
  CHECK(a.cp == b.cp);
  p.seed = 78;
  CHECK_FALSE(gen_velocity_model(p, g).cp == a.cp);
}

TEST_CASE("derive_seed mixes both arguments") {
  std::set<std::uint64_t> seen;
  for (std::uint64_t m = 0; m < 20; ++m) {
    for (std::uint64_t c = 0; c < 20; ++c) seen.insert(derive_seed(m, c));
  }
  CHECK(seen.size() == 400);
  CHECK(derive_seed(5, 9) == derive_seed(5, 9));
}

TEST_CASE("split counts are floor for validation and test") {
  const std::array<double, 3> r{0.70, 0.15, 0.15};
  auto c = split_counts(1600, r);
  CHECK(c.train == 1120);
  CHECK(c.validation == 240);
  CHECK(c.test == 240);
  c = split_counts(20, r);
  CHECK(c.train == 14);
  CHECK(c.validation == 3);
  CHECK(c.test == 3);
  c = split_counts(256, r);
  CHECK(c.train + c.validation + c.test == 256);
  CHECK_THROWS_AS((void)split_counts(20, {0.5, 0.2, 0.2}), ConfigError);
}

TEST_CASE("split assignment is seeded") {
  DatasetManifest m;
  for (int i = 0; i < 40; ++i) m.entries.push_back({"m" + std::to_string(i), static_cast<std::uint64_t>(i)});
  const auto a = split_dataset(m, {0.70, 0.15, 0.15}, 11);
  const auto b = split_dataset(m, {0.70, 0.15, 0.15}, 11);
  const auto c = split_dataset(m, {0.70, 0.15, 0.15}, 12);
  CHECK(a.ids(Split::Test) == b.ids(Split::Test));
  CHECK(a.ids(Split::Train) == b.ids(Split::Train));
  CHECK_FALSE(a.ids(Split::Test) == c.ids(Split::Test));
  CHECK(a.ids(Split::Train).size() == 28);
  CHECK(a.ids(Split::Validation).size() == 6);
  CHECK(a.ids(Split::Test).size() == 6);
}

TEST_CASE("gen_dataset writes, reloads and resumes") {
  velinv::testing::TempDir dir("scene_gen");
  const auto g = velinv::testing::desk_grid();
  SceneParams p;
  p.seed = 5;
  const auto acq = forward::AcquisitionSpec::equidistant(g.nx, 2, 0.4, 0.01);
  GenOptions opt;
  opt.source = forward::SourceSpec::with_frequency(0, 6.0);
  opt.jobs = 2;
  const auto m = gen_dataset(10, p, g, acq, dir.path(), opt);
  REQUIRE(m.entries.size() == 10);
  for (const auto& e : m.entries) {
    CHECK(std::filesystem::exists(m.model_path(e.id)));
    CHECK(std::filesystem::exists(m.record_path(e.id)));
  }
  const auto loaded = DatasetManifest::load(dir.path());
  CHECK(loaded.entries.size() == 10);
  const auto s = load_sample(dir.path(), m.entries[3].id);
  CHECK(s.record.shots.size() == 2);
  CHECK(s.model.grid == g);

  const auto victim = m.entries[6].id;
  const auto before = read_payload(m.record_path(victim), PayloadKind::SeismicRecord);
  std::filesystem::remove(m.record_path(victim));
  std::vector<std::string> regenerated;
  (void)gen_dataset(10, p, g, acq, dir.path(), opt, &regenerated);
  REQUIRE(regenerated.size() == 1);
  CHECK(regenerated.front() == victim);
  CHECK(read_payload(m.record_path(victim), PayloadKind::SeismicRecord) == before);
}
