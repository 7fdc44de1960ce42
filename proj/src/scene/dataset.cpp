#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>

#include "core/container.hpp"
#include "core/errors.hpp"
#include "core/log.hpp"
#include "core/parallel.hpp"
#include "scene/scene.hpp"

namespace velinv::scene {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::uint64_t kSplitStream = 0x5b117ULL;

std::string sample_id(int i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "m%05d", i);
  return buf;
}

bool sample_intact(const fs::path& dir, const std::string& id) {
  if (!fs::exists(dir / (id + ".svm")) || !fs::exists(dir / (id + ".sgr"))) return false;
  try {
    (void)load_sample(dir, id);
    return true;
  } catch (const Error&) {
    return false;
  }
}

}  // namespace

std::string to_string(Split s) {
  switch (s) {
    case Split::Train: return "train";
    case Split::Validation: return "validation";
    case Split::Test: return "test";
    case Split::Unassigned: return "unassigned";
  }
  return "unassigned";
}

Split split_from_string(const std::string& s) {
  if (s == "train") return Split::Train;
  if (s == "validation" || s == "val") return Split::Validation;
  if (s == "test") return Split::Test;
  if (s == "unassigned") return Split::Unassigned;
  throw ConfigError("unknown split '" + s + "'");
}

json to_json(const SceneParams& p) {
  return {{"min_layers", p.min_layers},
          {"max_layers", p.max_layers},
          {"layer_velocity", p.layer_velocity},
          {"inclusion_velocity", p.inclusion_velocity},
          {"inclusion_area_fraction", p.inclusion_area_fraction},
          {"undulation_amplitude", p.undulation_amplitude},
          {"seed", p.seed}};
}

std::vector<std::string> DatasetManifest::ids(Split s) const {
  std::vector<std::string> out;
  for (const auto& e : entries) {
    if (e.split == s) out.push_back(e.id);
  }
  return out;
}

void DatasetManifest::save() const {
  json samples = json::array();
  for (const auto& e : entries) {
    samples.push_back({{"id", e.id},
                       {"seed", e.seed},
                       {"split", to_string(e.split)},
                       {"model", e.id + ".svm"},
                       {"record", e.id + ".sgr"}});
  }
  json j = {{"version", 1},
            {"generation_seed", generation_seed},
            {"split_seed", split_seed},
            {"ratios", ratios},
            {"params", params_echo},
            {"samples", samples}};
  write_json(root / "manifest.json", j);
}

DatasetManifest DatasetManifest::load(const fs::path& manifest_or_dir) {
  const fs::path file = fs::is_directory(manifest_or_dir) ? manifest_or_dir / "manifest.json" : manifest_or_dir;
  const json j = read_json(file);
  DatasetManifest m;
  m.root = file.parent_path();
  try {
    m.generation_seed = j.at("generation_seed").get<std::uint64_t>();
    m.split_seed = j.at("split_seed").get<std::uint64_t>();
    m.ratios = j.at("ratios").get<std::array<double, 3>>();
    m.params_echo = j.value("params", json::object());
    for (const auto& s : j.at("samples")) {
      m.entries.push_back(
          {s.at("id").get<std::string>(), s.at("seed").get<std::uint64_t>(), split_from_string(s.at("split"))});
    }
  } catch (const json::exception& e) {
    throw DataError(file.string() + ": malformed manifest: " + e.what());
  }
  return m;
}

SplitCounts split_counts(std::size_t n, std::array<double, 3> ratios) {
  for (double r : ratios) {
    if (!(r > 0.0)) throw ConfigError("split ratios must be positive");
  }
  if (std::abs(ratios[0] + ratios[1] + ratios[2] - 1.0) > 1e-9) throw ConfigError("split ratios must sum to 1");
  const auto val = static_cast<std::size_t>(std::floor(ratios[1] * static_cast<double>(n) + 1e-9));
  const auto test = static_cast<std::size_t>(std::floor(ratios[2] * static_cast<double>(n) + 1e-9));
  if (val == 0 || test == 0 || val + test >= n) {
    throw ConfigError("dataset of " + std::to_string(n) + " samples is too small for non-empty splits");
  }
  return {n - val - test, val, test};
}

DatasetManifest split_dataset(DatasetManifest manifest, std::array<double, 3> ratios, std::uint64_t seed) {
  const std::size_t n = manifest.entries.size();
  const auto counts = split_counts(n, ratios);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  // Fisher-Yates, spelled out so the permutation does not depend on std::shuffle internals.
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = std::uniform_int_distribution<std::size_t>(0, i - 1)(rng);
    std::swap(order[i - 1], order[j]);
  }
  for (std::size_t k = 0; k < n; ++k) {
    auto& e = manifest.entries[order[k]];
    if (k < counts.validation) {
      e.split = Split::Validation;
    } else if (k < counts.validation + counts.test) {
      e.split = Split::Test;
    } else {
      e.split = Split::Train;
    }
  }
  manifest.ratios = ratios;
  manifest.split_seed = seed;
  return manifest;
}

DatasetManifest gen_dataset(int n, const SceneParams& params, const GridSpec& grid,
                            const forward::AcquisitionSpec& acq, const fs::path& out_dir, const GenOptions& opt) {
  return gen_dataset(n, params, grid, acq, out_dir, opt, nullptr);
}

DatasetManifest gen_dataset(int n, const SceneParams& params, const GridSpec& grid,
                            const forward::AcquisitionSpec& acq, const fs::path& out_dir, const GenOptions& opt,
                            std::vector<std::string>* regenerated) {
  if (n < 10) throw ConfigError("dataset needs at least 10 samples");
  params.validate(opt.norm);
  grid.validate();
  acq.validate(grid.nx);
  (void)split_counts(static_cast<std::size_t>(n), opt.ratios);
  fs::create_directories(out_dir);

  DatasetManifest manifest;
  manifest.root = out_dir;
  manifest.generation_seed = params.seed;
  manifest.params_echo = {{"scene", to_json(params)},
                          {"grid", {{"nx", grid.nx}, {"ny", grid.ny}, {"dx", grid.dx}, {"dy", grid.dy}}},
                          {"acquisition",
                           {{"emitter_columns", acq.emitter_columns},
                            {"n_receivers", acq.receiver_columns.size()},
                            {"t_total", acq.t_total},
                            {"dt_record", acq.dt_record},
                            {"cfl", acq.cfl}}},
                          {"source",
                           {{"f0", opt.source.f0}, {"amplitude", opt.source.amplitude}, {"delay", opt.source.delay}}},
                          {"solver",
                           {{"order", opt.solver.order == forward::SchemeOrder::First ? "first" : "second-minmod"},
                            {"rho0", opt.solver.rho0}}},
                          {"normalization", {{"vmin", opt.norm.vmin}, {"vmax", opt.norm.vmax}}}};
  for (int i = 0; i < n; ++i) {
    manifest.entries.push_back({sample_id(i), derive_seed(params.seed, static_cast<std::uint64_t>(i)), Split::Unassigned});
  }

  std::vector<char> fresh(static_cast<std::size_t>(n), 0);
  std::atomic<int> done{0};
  parallel_for(static_cast<std::size_t>(n), opt.jobs, [&](std::size_t i) {
    const auto& entry = manifest.entries[i];
    if (sample_intact(out_dir, entry.id)) return;
    SceneParams p = params;
    p.seed = entry.seed;
    Sample s;
    s.model = gen_velocity_model(p, grid);
    s.record = forward::simulate_record(s.model, acq, opt.source, opt.solver, 1);
    s.record.model_id = entry.id;
    try {
      save_sample(out_dir, entry.id, s, opt.norm);
    } catch (const DataError& e) {
      throw DataError("sample " + entry.id + ": " + e.what());
    }
    fresh[i] = 1;
    const int k = ++done;
    if (opt.verbose && (k % 16 == 0)) log::info("generated ", k, " samples");
  });
  if (regenerated) {
    for (std::size_t i = 0; i < fresh.size(); ++i) {
      if (fresh[i]) regenerated->push_back(manifest.entries[i].id);
    }
  }

  manifest = split_dataset(std::move(manifest), opt.ratios, derive_seed(params.seed, kSplitStream));
  manifest.save();
  return manifest;
}

}  // namespace velinv::scene
