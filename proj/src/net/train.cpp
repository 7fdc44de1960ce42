#include "net/train.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "core/container.hpp"
#include "core/errors.hpp"
#include "core/log.hpp"
#include "core/parallel.hpp"
#include "net/loss.hpp"
#include "stats/stats.hpp"

namespace velinv::net {

ExampleSet ExampleSet::load(const scene::DatasetManifest& manifest, const std::vector<std::string>& ids,
                            const features::FeatureConfig& fcfg, const NormalizationSpec& norm, int jobs) {
  ExampleSet set;
  set.items.resize(ids.size());
  parallel_for(ids.size(), jobs, [&](std::size_t i) {
    const Sample s = load_sample(manifest.root, ids[i]);
    Example& e = set.items[i];
    e.id = ids[i];
    e.input = features::assemble_input(s.record, fcfg);
    e.target = normalize_velocity(s.model, norm);
    if (e.input.height != static_cast<int>(e.target.rows()) || e.input.width != static_cast<int>(e.target.cols())) {
      throw ConfigError("sample " + ids[i] + ": input " + std::to_string(e.input.height) + "x" +
                        std::to_string(e.input.width) + " does not match the " +
                        std::to_string(e.target.rows()) + "x" + std::to_string(e.target.cols()) +
                        " velocity grid (resample_height must equal ny)");
    }
  });
  for (const auto& e : set.items) {
    if (!e.input.same_shape(set.items.front().input)) throw DataError("inconsistent input shapes in fold");
  }
  return set;
}

ExampleSet ExampleSet::load(const scene::DatasetManifest& manifest, scene::Split split,
                            const features::FeatureConfig& fcfg, const NormalizationSpec& norm, int jobs) {
  return load(manifest, manifest.ids(split), fcfg, norm, jobs);
}

Array2f clamp_unit(const Array2f& pred) {
  Array2f out = pred;
  for (auto& v : out.values()) v = std::clamp(v, 0.0f, 1.0f);
  return out;
}

namespace {

double mean_of(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

EvalResult score_predictions(const ExampleSet& set, std::vector<Array2f> predictions, bool keep_predictions) {
  if (predictions.size() != set.size()) throw ConfigError("prediction count differs from example count");
  EvalResult r;
  for (std::size_t i = 0; i < set.size(); ++i) {
    const auto& e = set.items[i];
    r.ids.push_back(e.id);
    r.ssim.push_back(stats::ssim(clamp_unit(predictions[i]), e.target));
    r.mse.push_back(mse(predictions[i], e.target));
  }
  r.mean_ssim = mean_of(r.ssim);
  r.mean_mse = mean_of(r.mse);
  if (keep_predictions) r.predictions = std::move(predictions);
  return r;
}

EvalResult evaluate(const NetworkWeights& w, const ExampleSet& set, int jobs, bool keep_predictions) {
  std::vector<Array2f> preds(set.size());
  parallel_for(set.size(), jobs, [&](std::size_t i) { preds[i] = forward_pass(w, set.items[i].input); });
  return score_predictions(set, std::move(preds), keep_predictions);
}

TrainResult train(const ExampleSet& train_set, const std::vector<std::size_t>& train_indices,
                  const ExampleSet& val_set, const NetworkConfig& net_cfg, const TrainConfig& cfg) {
  cfg.validate();
  net_cfg.validate();
  if (train_indices.empty()) throw ConfigError("training fold is empty");
  if (val_set.empty()) throw ConfigError("validation fold is empty");
  for (std::size_t i : train_indices) {
    if (i >= train_set.size()) throw ConfigError("training index out of range");
  }
  if (train_set.channels() != net_cfg.in_channels || val_set.channels() != net_cfg.in_channels) {
    throw ConfigError("network expects " + std::to_string(net_cfg.in_channels) + " input channels, data has " +
                      std::to_string(train_set.channels()));
  }

  NetworkWeights w = init_weights(net_cfg, scene::derive_seed(cfg.seed, 1));
  AdamState adam = AdamState::zeros(w.size());
  std::mt19937_64 rng(scene::derive_seed(cfg.seed, 2));
  const auto path_of = [&w](std::size_t i) { return w.parameter_path(i); };

  TrainResult best{w, {}};
  double best_ssim = -std::numeric_limits<double>::infinity();
  std::vector<std::size_t> order = train_indices;
  const std::size_t bs = static_cast<std::size_t>(cfg.batch_size);
  const int workers = std::max(1, std::min<int>(resolve_jobs(cfg.jobs), cfg.batch_size));
  std::vector<std::vector<float>> sample_grads(std::min<std::size_t>(bs, order.size()), std::vector<float>(w.size()));
  std::vector<float> batch_grad(w.size());
  long step = 0;

  for (int epoch = 0; epoch < cfg.epochs_max; ++epoch) {
    // Explicit Fisher-Yates so the permutation does not depend on the library.
    for (std::size_t i = order.size(); i > 1; --i) {
      std::uniform_int_distribution<std::size_t> pick(0, i - 1);
      std::swap(order[i - 1], order[pick(rng)]);
    }
    double loss_sum = 0.0;
    const std::size_t n_batches = (order.size() + bs - 1) / bs;
    for (std::size_t b = 0; b < n_batches; ++b) {
      const std::size_t lo = b * bs, hi = std::min(order.size(), lo + bs);
      const std::size_t count = hi - lo;
      std::vector<double> losses(count);
      parallel_for(count, workers, [&](std::size_t k) {
        const Example& e = train_set.items[order[lo + k]];
        ForwardCache cache;
        const Array2f pred = forward_pass(w, e.input, &cache);
        Array2f g;
        losses[k] = loss(pred, e.target, cfg.reg_lambda, &g).total;
        std::fill(sample_grads[k].begin(), sample_grads[k].end(), 0.0f);
        backward_accumulate(w, cache, g, sample_grads[k]);
      });
      // Fixed reduction order keeps results independent of the worker count.
      std::fill(batch_grad.begin(), batch_grad.end(), 0.0f);
      for (std::size_t k = 0; k < count; ++k) {
        if (!std::isfinite(losses[k])) {
          throw DivergenceError("non-finite loss at epoch " + std::to_string(epoch + 1) + ", batch " +
                                std::to_string(b + 1));
        }
        loss_sum += losses[k];
        const float* src = sample_grads[k].data();
        for (std::size_t j = 0; j < batch_grad.size(); ++j) batch_grad[j] += src[j];
      }
      const float inv = 1.0f / static_cast<float>(count);
      for (auto& v : batch_grad) v *= inv;
      try {
        adam_step(w.params, batch_grad, adam, ++step, cfg, path_of);
      } catch (const DivergenceError& err) {
        throw DivergenceError(std::string(err.what()) + " (epoch " + std::to_string(epoch + 1) + ", batch " +
                              std::to_string(b + 1) + ")");
      }
    }
    const double epoch_loss = loss_sum / static_cast<double>(order.size());
    const double val = evaluate(w, val_set, workers).mean_ssim;
    best.history.train_loss.push_back(epoch_loss);
    best.history.val_ssim.push_back(val);
    if (val > best_ssim) {
      best_ssim = val;
      best.history.selected_epoch = epoch;
      best.weights.params = w.params;
    }
    log::info("epoch ", epoch + 1, "/", cfg.epochs_max, " loss ", epoch_loss, " val_ssim ", val);
  }
  if (best.history.selected_epoch < 0) throw DivergenceError("validation SSIM was never finite");
  const auto& vs = best.history.val_ssim;
  if (static_cast<std::ptrdiff_t>(best.history.selected_epoch) != std::max_element(vs.begin(), vs.end()) - vs.begin()) {
    throw NumericalError("selected epoch is not the validation SSIM maximum");
  }
  return best;
}

TrainResult train(const ExampleSet& train_set, const ExampleSet& val_set, const NetworkConfig& net_cfg,
                  const TrainConfig& cfg) {
  std::vector<std::size_t> idx(train_set.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  return train(train_set, idx, val_set, net_cfg, cfg);
}

TrainResult train(const scene::DatasetManifest& manifest, const features::FeatureConfig& fcfg,
                  const NetworkConfig& net_cfg, const TrainConfig& cfg, const NormalizationSpec& norm) {
  const ExampleSet tr = ExampleSet::load(manifest, scene::Split::Train, fcfg, norm, cfg.jobs);
  const ExampleSet va = ExampleSet::load(manifest, scene::Split::Validation, fcfg, norm, cfg.jobs);
  return train(tr, va, net_cfg, cfg);
}

}  // namespace velinv::net
