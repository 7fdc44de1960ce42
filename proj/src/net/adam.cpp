#include "net/adam.hpp"

#include <cmath>

#include "core/errors.hpp"

namespace velinv::net {

void TrainConfig::validate() const {
  if (epochs_max < 1) throw ConfigError("epochs_max must be at least 1");
  if (!(lr >= 0.0)) throw ConfigError("learning rate must be non-negative");
  if (batch_size < 1) throw ConfigError("batch size must be at least 1");
  if (!(reg_lambda >= 0.0)) throw ConfigError("reg_lambda must be non-negative");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) throw ConfigError("Adam betas must lie in [0, 1)");
  if (!(eps_adam > 0.0)) throw ConfigError("eps_adam must be positive");
}

void adam_step(std::span<float> weights, std::span<const float> grads, AdamState& state, long t,
               const TrainConfig& cfg, const std::function<std::string(std::size_t)>& path_of) {
  if (t < 1) throw ConfigError("Adam step index starts at 1");
  if (grads.size() != weights.size() || state.m.size() != weights.size() || state.v.size() != weights.size()) {
    throw ConfigError("Adam buffers disagree in size");
  }
  for (std::size_t i = 0; i < grads.size(); ++i) {
    if (!std::isfinite(grads[i])) {
      const std::string where = path_of ? path_of(i) : "param[" + std::to_string(i) + "]";
      throw DivergenceError("non-finite gradient at " + where);
    }
  }
  const double b1 = cfg.beta1, b2 = cfg.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(t));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(t));
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const double g = grads[i];
    const double m = b1 * state.m[i] + (1.0 - b1) * g;
    const double v = b2 * state.v[i] + (1.0 - b2) * g * g;
    state.m[i] = static_cast<float>(m);
    state.v[i] = static_cast<float>(v);
    const double mhat = m / c1, vhat = v / c2;
    weights[i] = static_cast<float>(weights[i] - cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps_adam));
  }
  state.t = t;
}

}  // namespace velinv::net
