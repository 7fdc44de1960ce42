#include "config/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>

#include "core/errors.hpp"

namespace velinv::config {

namespace fs = std::filesystem;

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::string unquote(const std::string& raw) {
  const std::string s = trim(raw);
  if (s.size() >= 2 && (s.front() == '"' || s.front() == '\'') && s.back() == s.front()) {
    return s.substr(1, s.size() - 2);
  }
  return s;
}

long long to_int(const std::string& key, const std::string& raw) {
  const std::string s = unquote(raw);
  long long v = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size() || s.empty()) {
    throw ConfigError(key + ": expected an integer, got '" + s + "'");
  }
  return v;
}

double to_double(const std::string& key, const std::string& raw) {
  const std::string s = unquote(raw);
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size() || !std::isfinite(v)) {
    throw ConfigError(key + ": expected a number, got '" + s + "'");
  }
  return v;
}

std::uint64_t to_u64(const std::string& key, const std::string& raw) {
  const std::string s = unquote(raw);
  std::uint64_t v = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size() || s.empty()) {
    throw ConfigError(key + ": expected a non-negative integer, got '" + s + "'");
  }
  return v;
}

bool to_bool(const std::string& key, const std::string& raw) {
  const std::string s = unquote(raw);
  if (s == "true" || s == "on" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "off" || s == "0" || s == "no") return false;
  throw ConfigError(key + ": expected true/false, got '" + s + "'");
}

// Accepts "[1, 3]", "1,3" or a single value.
std::vector<std::string> to_items(const std::string& raw) {
  std::string s = trim(raw);
  if (!s.empty() && s.front() == '[' && s.back() == ']') s = s.substr(1, s.size() - 2);
  s = unquote(s);
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

template <typename T>
std::string fmt_list(const std::vector<T>& v) {
  std::string s = "[";
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ", ";
    if constexpr (std::is_floating_point_v<T>) {
      s += fmt(v[i]);
    } else {
      s += std::to_string(v[i]);
    }
  }
  return s + "]";
}

std::string quote(const std::string& s) { return "\"" + s + "\""; }

struct Field {
  std::string key;
  std::function<void(RunConfig&, const std::string&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

#define VELINV_NUM(KEY, EXPR, CONV)                                                                \
  Field {                                                                                          \
    KEY, [](RunConfig& c, const std::string& k, const std::string& v) { EXPR = CONV(k, v); },      \
        [](const RunConfig& c) { return fmt(static_cast<double>(EXPR)); }                          \
  }
#define VELINV_INT(KEY, EXPR)                                                                                 \
  Field {                                                                                                     \
    KEY, [](RunConfig& c, const std::string& k, const std::string& v) { EXPR = static_cast<int>(to_int(k, v)); }, \
        [](const RunConfig& c) { return std::to_string(EXPR); }                                               \
  }
#define VELINV_BOOL(KEY, EXPR)                                                                \
  Field {                                                                                     \
    KEY, [](RunConfig& c, const std::string& k, const std::string& v) { EXPR = to_bool(k, v); }, \
        [](const RunConfig& c) { return std::string(EXPR ? "true" : "false"); }               \
  }

const std::vector<Field>& registry() {
  static const std::vector<Field> fields = {
      Field{"paths.data", [](RunConfig& c, const std::string&, const std::string& v) { c.data_dir = unquote(v); },
            [](const RunConfig& c) { return quote(c.data_dir.string()); }},
      Field{"paths.work", [](RunConfig& c, const std::string&, const std::string& v) { c.work_dir = unquote(v); },
            [](const RunConfig& c) { return quote(c.work_dir.string()); }},
      VELINV_INT("grid.nx", c.grid.nx),
      VELINV_INT("grid.ny", c.grid.ny),
      VELINV_NUM("grid.dx", c.grid.dx, to_double),
      VELINV_NUM("grid.dy", c.grid.dy, to_double),
      VELINV_INT("acquisition.emitters", c.emitters),
      VELINV_NUM("acquisition.t_total", c.t_total, to_double),
      VELINV_NUM("acquisition.dt_record", c.dt_record, to_double),
      VELINV_NUM("acquisition.cfl", c.cfl, to_double),
      VELINV_NUM("source.f0", c.f0, to_double),
      VELINV_NUM("source.amplitude", c.amplitude, to_double),
      Field{"solver.top",
            [](RunConfig& c, const std::string& k, const std::string& v) {
              const std::string s = unquote(v);
              if (s == "free_surface") {
                c.solver.top = forward::TopBoundary::FreeSurface;
              } else if (s == "absorbing") {
                c.solver.top = forward::TopBoundary::Absorbing;
              } else {
                throw ConfigError(k + ": expected free_surface or absorbing, got '" + s + "'");
              }
            },
            [](const RunConfig& c) {
              return quote(c.solver.top == forward::TopBoundary::FreeSurface ? "free_surface" : "absorbing");
            }},
      Field{"solver.order",
            [](RunConfig& c, const std::string& k, const std::string& v) {
              const std::string s = unquote(v);
              if (s == "first") {
                c.solver.order = forward::SchemeOrder::First;
              } else if (s == "minmod") {
                c.solver.order = forward::SchemeOrder::SecondMinmod;
              } else {
                throw ConfigError(k + ": expected first or minmod, got '" + s + "'");
              }
            },
            [](const RunConfig& c) {
              return quote(c.solver.order == forward::SchemeOrder::First ? "first" : "minmod");
            }},
      VELINV_NUM("solver.rho0", c.solver.rho0, to_double),
      VELINV_INT("scene.min_layers", c.scene.min_layers),
      VELINV_INT("scene.max_layers", c.scene.max_layers),
      VELINV_NUM("scene.layer_vmin", c.scene.layer_velocity[0], to_double),
      VELINV_NUM("scene.layer_vmax", c.scene.layer_velocity[1], to_double),
      VELINV_NUM("scene.inclusion_vmin", c.scene.inclusion_velocity[0], to_double),
      VELINV_NUM("scene.inclusion_vmax", c.scene.inclusion_velocity[1], to_double),
      VELINV_NUM("scene.inclusion_area_min", c.scene.inclusion_area_fraction[0], to_double),
      VELINV_NUM("scene.inclusion_area_max", c.scene.inclusion_area_fraction[1], to_double),
      VELINV_NUM("scene.undulation", c.scene.undulation_amplitude, to_double),
      Field{"scene.seed", [](RunConfig& c, const std::string& k, const std::string& v) { c.scene.seed = to_u64(k, v); },
            [](const RunConfig& c) { return std::to_string(c.scene.seed); }},
      VELINV_INT("dataset.samples", c.samples),
      VELINV_NUM("dataset.train_ratio", c.ratios[0], to_double),
      VELINV_NUM("dataset.val_ratio", c.ratios[1], to_double),
      VELINV_NUM("dataset.test_ratio", c.ratios[2], to_double),
      VELINV_NUM("normalization.vmin", c.norm.vmin, to_double),
      VELINV_NUM("normalization.vmax", c.norm.vmax, to_double),
      VELINV_INT("features.shots", c.shots),
      VELINV_BOOL("features.fourier", c.fourier),
      VELINV_INT("features.resample_height", c.resample_height),
      VELINV_INT("network.base_width", c.network.base_width),
      VELINV_INT("network.depth", c.network.depth),
      VELINV_INT("train.epochs", c.train.epochs_max),
      VELINV_NUM("train.lr", c.train.lr, to_double),
      VELINV_INT("train.batch_size", c.train.batch_size),
      VELINV_BOOL("train.regularization", c.regularization),
      VELINV_NUM("train.reg_lambda", c.reg_lambda, to_double),
      VELINV_NUM("train.beta1", c.train.beta1, to_double),
      VELINV_NUM("train.beta2", c.train.beta2, to_double),
      VELINV_NUM("train.eps_adam", c.train.eps_adam, to_double),
      Field{"train.seed", [](RunConfig& c, const std::string& k, const std::string& v) { c.train.seed = to_u64(k, v); },
            [](const RunConfig& c) { return std::to_string(c.train.seed); }},
      Field{"ablation.shots",
            [](RunConfig& c, const std::string& k, const std::string& v) {
              c.ablation_shots.clear();
              for (const auto& item : to_items(v)) c.ablation_shots.push_back(static_cast<int>(to_int(k, item)));
            },
            [](const RunConfig& c) { return fmt_list(c.ablation_shots); }},
      VELINV_INT("ablation.bootstrap_count", c.bootstrap_count),
      Field{"ablation.seed",
            [](RunConfig& c, const std::string& k, const std::string& v) { c.ablation_seed = to_u64(k, v); },
            [](const RunConfig& c) { return std::to_string(c.ablation_seed); }},
      VELINV_NUM("ablation.alpha", c.alpha, to_double),
      Field{"render.profiles",
            [](RunConfig& c, const std::string& k, const std::string& v) {
              c.profiles_m.clear();
              for (const auto& item : to_items(v)) c.profiles_m.push_back(to_double(k, item));
            },
            [](const RunConfig& c) { return fmt_list(c.profiles_m); }},
      Field{"render.snapshot_times",
            [](RunConfig& c, const std::string& k, const std::string& v) {
              c.snapshot_times.clear();
              for (const auto& item : to_items(v)) c.snapshot_times.push_back(to_double(k, item));
            },
            [](const RunConfig& c) { return fmt_list(c.snapshot_times); }},
      VELINV_INT("render.scale", c.render_scale),
      VELINV_INT("run.jobs", c.jobs),
      VELINV_INT("run.verbose", c.verbose),
  };
  return fields;
}

#undef VELINV_NUM
#undef VELINV_INT
#undef VELINV_BOOL

fs::path data_root() {
  const char* env = std::getenv("VELINV_DATA_ROOT");
  return env && *env ? fs::path(env) : fs::path(".");
}

}  // namespace

RunConfig RunConfig::preset_named(const std::string& name) {
  RunConfig c;
  c.preset = name;
  if (name == "paper") {
    c.grid = {300, 200, 10.0, 10.0};
    c.emitters = 9;
    c.t_total = 2.0;
    c.f0 = 15.0;
    c.samples = 1600;
    c.train.epochs_max = 50;
    c.train.lr = 1e-4;
    c.network.base_width = 32;
    c.bootstrap_count = 10;
    c.ablation_shots = {1, 3, 9};
  } else if (name == "desk") {
    c.grid = {96, 64, 31.25, 31.25};
    c.emitters = 5;
    c.t_total = 1.2;
    c.f0 = 6.0;  // keeps the wavelet resolved on 31.25 m cells
    c.samples = 256;
    c.train.epochs_max = 15;
    c.train.lr = 1e-3;  // 15 short epochs leave too few steps at 1e-4
    c.network.base_width = 16;
    c.bootstrap_count = 5;
    c.ablation_shots = {1, 3};
  } else {
    throw ConfigError("unknown preset '" + name + "' (expected paper or desk)");
  }
  c.dt_record = 0.01;
  c.cfl = 0.5;
  c.network.depth = 4;
  c.train.batch_size = 10;
  c.train.seed = 1;
  c.data_dir = data_root() / "data" / name;
  c.work_dir = data_root() / "runs" / name;
  return c;
}

std::vector<std::string> RunConfig::keys() {
  std::vector<std::string> out;
  for (const auto& f : registry()) out.push_back(f.key);
  return out;
}

void RunConfig::set(const std::string& key, const std::string& value) {
  if (key == "preset") throw ConfigError("the preset can only be chosen by --preset or the first file line");
  for (const auto& f : registry()) {
    if (f.key == key) {
      f.set(*this, key, value);
      return;
    }
  }
  throw ConfigError("unknown config key '" + key + "'");
}

std::string preset_in_text(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  bool in_section = false;
  while (std::getline(in, line)) {
    line = trim(line.substr(0, line.find('#')));
    if (line.empty()) continue;
    if (line.front() == '[') {
      in_section = true;
      continue;
    }
    const auto eq = line.find('=');
    if (!in_section && eq != std::string::npos && trim(line.substr(0, eq)) == "preset") {
      return unquote(line.substr(eq + 1));
    }
  }
  return "";
}

void RunConfig::load_text(const std::string& text, const std::string& origin) {
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string where = origin + ":" + std::to_string(lineno);
    // '#' inside quotes is kept.
    bool quoted = false;
    std::size_t cut = std::string::npos;
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (line[i] == '"') quoted = !quoted;
      if (line[i] == '#' && !quoted) {
        cut = i;
        break;
      }
    }
    line = trim(line.substr(0, cut));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where + ": malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (section.empty() && key == "preset") continue;  // consumed by the caller
    try {
      set(section.empty() ? key : section + "." + key, value);
    } catch (const ConfigError& e) {
      throw ConfigError(where + ": " + e.what());
    }
  }
}

void RunConfig::load_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  load_text(ss.str(), path.string());
}

std::string RunConfig::dump() const {
  std::string out = "preset = " + quote(preset) + "\n";
  std::string section;
  for (const auto& f : registry()) {
    const auto dot = f.key.find('.');
    const std::string sec = f.key.substr(0, dot);
    if (sec != section) {
      out += "\n[" + sec + "]\n";
      section = sec;
    }
    out += f.key.substr(dot + 1) + " = " + f.get(*this) + "\n";
  }
  return out;
}

void RunConfig::validate() const {
  grid.validate();
  norm.validate();
  if (emitters < 1 || emitters > grid.nx) throw ConfigError("acquisition.emitters must lie in [1, grid.nx]");
  acquisition().validate(grid.nx);
  if (!(f0 > 0.0)) throw ConfigError("source.f0 must be positive");
  if (!(solver.rho0 > 0.0)) throw ConfigError("solver.rho0 must be positive");
  scene.validate(norm);
  if (samples < 10) throw ConfigError("dataset.samples must be at least 10");
  if (std::fabs(ratios[0] + ratios[1] + ratios[2] - 1.0) > 1e-9) throw ConfigError("dataset ratios must sum to 1");
  (void)scene::split_counts(static_cast<std::size_t>(samples), ratios);
  if (shots != 1 && shots != 3 && shots != 9) throw ConfigError("features.shots must be 1, 3 or 9");
  if (effective_resample_height() != grid.ny) {
    throw ConfigError("features.resample_height must equal grid.ny so the output matches the velocity grid");
  }
  net::NetworkConfig n = network;
  n.in_channels = 1;
  n.validate();
  train_config().validate();
  if (!(reg_lambda >= 0.0)) throw ConfigError("train.reg_lambda must be non-negative");
  if (ablation_shots.empty()) throw ConfigError("ablation.shots is empty");
  for (int s : ablation_shots) {
    if (s != 1 && s != 3 && s != 9) throw ConfigError("ablation.shots entries must be 1, 3 or 9");
  }
  if (bootstrap_count < 1) throw ConfigError("ablation.bootstrap_count must be at least 1");
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("ablation.alpha must lie in (0, 1)");
  if (render_scale < 1) throw ConfigError("render.scale must be at least 1");
}

forward::AcquisitionSpec RunConfig::acquisition() const {
  return forward::AcquisitionSpec::equidistant(grid.nx, emitters, t_total, dt_record, cfl);
}

forward::SourceSpec RunConfig::source() const { return forward::SourceSpec::with_frequency(0, f0, amplitude); }

features::FeatureConfig RunConfig::feature_config() const {
  features::FeatureConfig f;
  f.use_fourier = fourier;
  f.shot_subset = features::subset_for_count(shots);
  f.resample_height = effective_resample_height();
  return f;
}

net::TrainConfig RunConfig::train_config() const {
  net::TrainConfig t = train;
  t.reg_lambda = regularization ? reg_lambda : 0.0;
  t.jobs = jobs;
  return t;
}

lab::LabSettings RunConfig::lab_settings() const {
  lab::LabSettings s;
  s.network = network;
  s.train = train;
  s.train.reg_lambda = reg_lambda;
  s.train.jobs = jobs;
  s.norm = norm;
  s.resample_height = effective_resample_height();
  s.jobs = jobs;
  s.work_dir = work_dir;
  s.alpha = alpha;
  return s;
}

std::vector<lab::AblationConfig> RunConfig::ablation_configs() const {
  return lab::ablation_matrix(ablation_shots, bootstrap_count, ablation_seed);
}

scene::GenOptions RunConfig::gen_options() const {
  scene::GenOptions o;
  o.source = source();
  o.solver = solver;
  o.norm = norm;
  o.jobs = jobs;
  o.ratios = ratios;
  o.verbose = verbose > 0;
  return o;
}

}  // namespace velinv::config
