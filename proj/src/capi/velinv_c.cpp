#include "velinv/velinv.h"

#include <cstring>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <new>
#include <string>

#include "config/commands.hpp"
#include "core/container.hpp"
#include "core/errors.hpp"
#include "core/log.hpp"

struct velinv_config {
  velinv::config::RunConfig cfg;
};
struct velinv_text {
  std::string text;
};
struct velinv_model {
  velinv::VelocityModel vm;
};
struct velinv_record {
  velinv::SeismicRecord rec;
};

namespace {

thread_local std::string g_last_error;

velinv_status fail(velinv_status s, const char* what) {
  g_last_error = what ? what : "";
  return s;
}

// Runs `fn`, translating the library's exception types into status codes.
template <typename Fn>
velinv_status guarded(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return VELINV_OK;
  } catch (const velinv::ConfigError& e) {
    return fail(VELINV_ERR_CONFIG, e.what());
  } catch (const velinv::DataError& e) {
    return fail(VELINV_ERR_DATA, e.what());
  } catch (const velinv::NumericalError& e) {
    return fail(VELINV_ERR_NUMERICAL, e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    return fail(VELINV_ERR_DATA, e.what());
  } catch (const nlohmann::json::exception& e) {
    return fail(VELINV_ERR_DATA, e.what());
  } catch (const std::bad_alloc&) {
    return fail(VELINV_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(VELINV_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(VELINV_ERR_INTERNAL, "unknown failure");
  }
}

void require(const void* p, const char* what) {
  if (!p) throw velinv::ConfigError(std::string(what) + " must not be null");
}

std::string str_or_empty(const char* s) { return s ? s : ""; }

velinv_text* make_text(std::string s) { return new velinv_text{std::move(s)}; }

}  // namespace

extern "C" {

const char* velinv_version(void) { return "0.3.0"; }

const char* velinv_last_error(void) { return g_last_error.c_str(); }

const char* velinv_status_name(velinv_status status) {
  switch (status) {
    case VELINV_OK: return "ok";
    case VELINV_ERR_CONFIG: return "config";
    case VELINV_ERR_DATA: return "data";
    case VELINV_ERR_NUMERICAL: return "numerical";
    case VELINV_ERR_INTERNAL: return "internal";
  }
  return "internal";
}

void velinv_set_verbosity(int level) { velinv::log::verbosity() = level; }

const char* velinv_text_get(const velinv_text* text) { return text ? text->text.c_str() : ""; }

void velinv_text_destroy(velinv_text* text) { delete text; }

velinv_status velinv_config_create(const char* preset, velinv_config** out) {
  return guarded([&] {
    require(out, "out");
    *out = nullptr;
    const std::string name = preset && *preset ? preset : "desk";
    *out = new velinv_config{velinv::config::RunConfig::preset_named(name)};
  });
}

void velinv_config_destroy(velinv_config* cfg) { delete cfg; }

velinv_status velinv_config_load_file(velinv_config* cfg, const char* path) {
  return guarded([&] {
    require(cfg, "config");
    require(path, "path");
    cfg->cfg.load_file(path);
  });
}

velinv_status velinv_config_set(velinv_config* cfg, const char* key, const char* value) {
  return guarded([&] {
    require(cfg, "config");
    require(key, "key");
    require(value, "value");
    cfg->cfg.set(key, value);
  });
}

velinv_status velinv_config_validate(const velinv_config* cfg) {
  return guarded([&] {
    require(cfg, "config");
    cfg->cfg.validate();
  });
}

velinv_status velinv_config_dump(const velinv_config* cfg, velinv_text** out) {
  return guarded([&] {
    require(cfg, "config");
    require(out, "out");
    *out = make_text(cfg->cfg.dump());
  });
}

velinv_status velinv_config_keys(velinv_text** out) {
  return guarded([&] {
    require(out, "out");
    std::string s;
    for (const auto& k : velinv::config::RunConfig::keys()) s += k + "\n";
    *out = make_text(std::move(s));
  });
}

velinv_status velinv_config_file_preset(const char* path, velinv_text** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    std::ifstream in(path);
    if (!in) throw velinv::ConfigError(std::string("cannot open config file ") + path);
    const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    *out = make_text(velinv::config::preset_in_text(text));
  });
}

velinv_status velinv_model_load(const char* path, velinv_model** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = new velinv_model{velinv::load_model(path)};
  });
}

void velinv_model_destroy(velinv_model* model) { delete model; }

void velinv_model_shape(const velinv_model* model, int* nx, int* ny, double* dx, double* dy) {
  if (!model) return;
  if (nx) *nx = model->vm.grid.nx;
  if (ny) *ny = model->vm.grid.ny;
  if (dx) *dx = model->vm.grid.dx;
  if (dy) *dy = model->vm.grid.dy;
}

velinv_status velinv_model_copy(const velinv_model* model, float* buffer, size_t capacity) {
  return guarded([&] {
    require(model, "model");
    require(buffer, "buffer");
    const auto& v = model->vm.cp.values();
    if (capacity < v.size()) throw velinv::ConfigError("buffer too small for the velocity model");
    std::memcpy(buffer, v.data(), v.size() * sizeof(float));
  });
}

velinv_status velinv_record_load(const char* path, velinv_record** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = new velinv_record{velinv::load_record(path)};
  });
}

velinv_status velinv_simulate_model(const velinv_config* cfg, const velinv_model* model, velinv_record** out) {
  return guarded([&] {
    require(cfg, "config");
    require(model, "model");
    require(out, "out");
    const auto& c = cfg->cfg;
    const auto acq =
        velinv::forward::AcquisitionSpec::equidistant(model->vm.grid.nx, c.emitters, c.t_total, c.dt_record, c.cfl);
    *out = new velinv_record{velinv::forward::simulate_record(model->vm, acq, c.source(), c.solver, c.jobs)};
  });
}

void velinv_record_destroy(velinv_record* record) { delete record; }

void velinv_record_shape(const velinv_record* record, int* shots, int* receivers, int* samples) {
  if (!record) return;
  const auto& s = record->rec.shots;
  if (shots) *shots = static_cast<int>(s.size());
  if (receivers) *receivers = s.empty() ? 0 : s.front().n_receivers();
  if (samples) *samples = s.empty() ? 0 : s.front().n_samples();
}

velinv_status velinv_record_copy_shot(const velinv_record* record, int shot, float* buffer, size_t capacity) {
  return guarded([&] {
    require(record, "record");
    require(buffer, "buffer");
    if (shot < 0 || static_cast<size_t>(shot) >= record->rec.shots.size()) {
      throw velinv::ConfigError("shot index out of range");
    }
    const auto& v = record->rec.shots[static_cast<size_t>(shot)].data.values();
    if (capacity < v.size()) throw velinv::ConfigError("buffer too small for the gather");
    std::memcpy(buffer, v.data(), v.size() * sizeof(float));
  });
}

velinv_status velinv_gen(const velinv_config* cfg, velinv_text** out) {
  return guarded([&] {
    require(cfg, "config");
    require(out, "out");
    *out = make_text(velinv::config::cmd_gen(cfg->cfg).dump());
  });
}

velinv_status velinv_simulate(const velinv_config* cfg, const char* model_path, const char* output_path,
                              int snapshots, int snapshot_shot, velinv_text** out) {
  return guarded([&] {
    require(cfg, "config");
    require(out, "out");
    velinv::config::SimulateRequest req;
    req.model = str_or_empty(model_path);
    req.output = str_or_empty(output_path);
    req.snapshots = snapshots != 0;
    req.snapshot_shot = snapshot_shot;
    *out = make_text(velinv::config::cmd_simulate(cfg->cfg, req).dump());
  });
}

velinv_status velinv_train(const velinv_config* cfg, const char* checkpoint_path, int untrained,
                           velinv_text** out) {
  return guarded([&] {
    require(cfg, "config");
    require(out, "out");
    *out = make_text(velinv::config::cmd_train(cfg->cfg, str_or_empty(checkpoint_path), untrained != 0).dump());
  });
}

velinv_status velinv_eval(const velinv_config* cfg, const char* checkpoint_path, const char* split,
                          const char* output_path, velinv_text** out) {
  return guarded([&] {
    require(cfg, "config");
    require(out, "out");
    const std::string sp = split && *split ? split : "test";
    *out = make_text(
        velinv::config::cmd_eval(cfg->cfg, str_or_empty(checkpoint_path), sp, str_or_empty(output_path)).dump());
  });
}

velinv_status velinv_ablate(const velinv_config* cfg, velinv_text** out) {
  return guarded([&] {
    require(cfg, "config");
    require(out, "out");
    *out = make_text(velinv::config::cmd_ablate(cfg->cfg).dump());
  });
}

velinv_status velinv_render(const velinv_config* cfg, const char* out_dir, const char* const* models,
                            size_t n_models, const char* sample, const char* const* checkpoints,
                            size_t n_checkpoints, const char* snapshots, const char* summary, int profiles,
                            velinv_text** out) {
  return guarded([&] {
    require(cfg, "config");
    require(out, "out");
    velinv::config::RenderRequest req;
    req.out_dir = str_or_empty(out_dir);
    for (size_t i = 0; i < n_models; ++i) req.models.emplace_back(str_or_empty(models[i]));
    req.sample = str_or_empty(sample);
    for (size_t i = 0; i < n_checkpoints; ++i) req.checkpoints.emplace_back(str_or_empty(checkpoints[i]));
    req.snapshots = str_or_empty(snapshots);
    req.summary = str_or_empty(summary);
    req.profiles = profiles != 0;
    *out = make_text(velinv::config::cmd_render(cfg->cfg, req).dump());
  });
}

}  // extern "C"
