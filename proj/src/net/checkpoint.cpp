#include <fstream>
#include <iomanip>

#include "core/container.hpp"
#include "core/errors.hpp"
#include "net/train.hpp"

namespace velinv::net {

using nlohmann::json;

json to_json(const NetworkConfig& c) {
  return {{"in_channels", c.in_channels}, {"base_width", c.base_width}, {"depth", c.depth}};
}

NetworkConfig network_config_from_json(const json& j) {
  NetworkConfig c;
  c.in_channels = j.at("in_channels").get<int>();
  c.base_width = j.at("base_width").get<int>();
  c.depth = j.at("depth").get<int>();
  return c;
}

json to_json(const features::FeatureConfig& c) {
  return {{"use_fourier", c.use_fourier},
          {"shot_subset", features::to_string(c.shot_subset)},
          {"resample_height", c.resample_height}};
}

features::FeatureConfig feature_config_from_json(const json& j) {
  features::FeatureConfig c;
  c.use_fourier = j.at("use_fourier").get<bool>();
  c.shot_subset = features::subset_from_string(j.at("shot_subset").get<std::string>());
  c.resample_height = j.at("resample_height").get<int>();
  return c;
}

json to_json(const TrainHistory& h) {
  return {{"train_loss", h.train_loss}, {"val_ssim", h.val_ssim}, {"selected_epoch", h.selected_epoch}};
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  const auto& w = ckpt.weights;
  if (!w.all_finite()) throw NumericalError("refusing to checkpoint non-finite weights");
  json layers = json::array();
  for (const auto& l : w.layers) {
    layers.push_back({{"name", l.name},
                      {"cin", l.cin},
                      {"cout", l.cout},
                      {"kernel", l.kernel},
                      {"weight_offset", l.weight_offset},
                      {"bias_offset", l.bias_offset}});
  }
  json meta = {{"network", to_json(w.config)},
               {"init_seed", w.init_seed},
               {"layers", layers},
               {"features", to_json(ckpt.features)},
               {"normalization", {{"vmin", ckpt.norm.vmin}, {"vmax", ckpt.norm.vmax}}},
               {"extra", ckpt.extra}};
  save_array(path, PayloadKind::Weights, {w.params.size()}, w.params, meta);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::vector<std::size_t> shape;
  json meta;
  auto values = load_array(path, PayloadKind::Weights, &shape, &meta);
  Checkpoint c;
  try {
    const NetworkConfig cfg = network_config_from_json(meta.at("network"));
    cfg.validate();
    c.weights = zero_weights(cfg);
    c.weights.init_seed = meta.value("init_seed", std::uint64_t{0});
    if (values.size() != c.weights.size()) {
      throw DataError(path.string() + ": " + std::to_string(values.size()) + " parameters stored, network needs " +
                      std::to_string(c.weights.size()));
    }
    const auto& layers = meta.at("layers");
    if (layers.size() != c.weights.layers.size()) throw DataError(path.string() + ": layer manifest mismatch");
    for (std::size_t i = 0; i < layers.size(); ++i) {
      const auto& l = c.weights.layers[i];
      if (layers[i].at("name").get<std::string>() != l.name || layers[i].at("cin").get<int>() != l.cin ||
          layers[i].at("cout").get<int>() != l.cout) {
        throw DataError(path.string() + ": layer " + l.name + " disagrees with the network config");
      }
    }
    c.weights.params = std::move(values);
    c.features = feature_config_from_json(meta.at("features"));
    c.norm.vmin = meta.at("normalization").at("vmin").get<double>();
    c.norm.vmax = meta.at("normalization").at("vmax").get<double>();
    c.extra = meta.value("extra", json::object());
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": bad checkpoint manifest: " + e.what());
  } catch (const ConfigError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  if (!c.weights.all_finite()) throw DataError(path.string() + ": checkpoint holds non-finite weights");
  return c;
}

void write_curves_csv(const std::filesystem::path& path, const TrainHistory& h) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << "epoch,loss,val_ssim\n" << std::setprecision(17);
  for (std::size_t i = 0; i < h.train_loss.size(); ++i) {
    out << i + 1 << ',' << h.train_loss[i] << ',' << (i < h.val_ssim.size() ? h.val_ssim[i] : 0.0) << '\n';
  }
  if (!out) throw DataError("write failed for " + path.string());
}

}  // namespace velinv::net
