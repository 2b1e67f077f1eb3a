#include "ecnd/training.hpp"

#include <cmath>
#include <string>

namespace ecnd {

void TrainConfig::validate() const {
  if (!(lr_end > 0.0 && lr_end <= lr_start)) {
    throw ConfigError("need 0 < lr_end <= lr_start");
  }
  if (!(beta1 > 0.0 && beta1 < 1.0 && beta2 > 0.0 && beta2 < 1.0)) {
    throw ConfigError("Adam betas must lie in (0,1)");
  }
  if (!(eps > 0.0)) throw ConfigError("Adam eps must be positive");
  if (sigma < 0.0f) throw ConfigError("sigma must be >= 0");
  if (batch_size < 1) throw ConfigError("batch size must be >= 1");
  if (patch_size < 1 || stride < 1) {
    throw ConfigError("patch size and stride must be >= 1");
  }
}

std::vector<ParamRef> collect_params(Model &model) {
  std::vector<ParamRef> refs;
  for (Layer &layer : model.layers) {
    refs.push_back({layer.conv.weights.data.data(),
                    layer.conv.weights.data.size()});
    if (layer.conv.bias) {
      refs.push_back({layer.conv.bias->data(), layer.conv.bias->size()});
    }
    if (layer.bn) {
      refs.push_back({layer.bn->gamma.data(), layer.bn->gamma.size()});
      refs.push_back({layer.bn->beta.data(), layer.bn->beta.size()});
    }
  }
  return refs;
}

std::vector<ParamRef> collect_grads(ModelGrads &grads) {
  std::vector<ParamRef> refs;
  for (LayerGrads &lg : grads.layers) {
    refs.push_back({lg.conv.weights.data.data(), lg.conv.weights.data.size()});
    if (!lg.conv.bias.empty()) {
      refs.push_back({lg.conv.bias.data(), lg.conv.bias.size()});
    }
    if (lg.bn) {
      refs.push_back({lg.bn->gamma.data(), lg.bn->gamma.size()});
      refs.push_back({lg.bn->beta.data(), lg.bn->beta.size()});
    }
  }
  return refs;
}

AdamState AdamState::for_model(Model &model) {
  AdamState state;
  for (const ParamRef &p : collect_params(model)) {
    state.m.emplace_back(p.len, 0.0f);
    state.v.emplace_back(p.len, 0.0f);
  }
  return state;
}

namespace {

double sq_error_loss(const Tensor4 &pred, const Tensor4 &target) {
  double acc = 0.0;
  for (std::size_t i = 0; i < pred.data.size(); ++i) {
    const double d = static_cast<double>(pred.data[i]) - target.data[i];
    acc += d * d;
  }
  return acc / (2.0 * pred.n);
}

Tensor4 sq_error_grad(const Tensor4 &pred, const Tensor4 &target) {
  Tensor4 grad(pred.n, pred.c, pred.h, pred.w);
  const double inv_n = 1.0 / pred.n;
  for (std::size_t i = 0; i < pred.data.size(); ++i) {
    grad.data[i] = static_cast<float>(
        inv_n * (static_cast<double>(pred.data[i]) - target.data[i]));
  }
  return grad;
}

} // namespace

double residual_loss(const Tensor4 &residual_pred, const Tensor4 &noisy,
                     const Tensor4 &clean) {
  if (!residual_pred.same_shape(noisy) || !noisy.same_shape(clean)) {
    throw ShapeError("residual_loss: shape mismatch");
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < residual_pred.data.size(); ++i) {
    const double target =
        static_cast<double>(noisy.data[i]) - clean.data[i];
    const double d = residual_pred.data[i] - target;
    acc += d * d;
  }
  return acc / (2.0 * residual_pred.n);
}

Tensor4 residual_loss_grad(const Tensor4 &residual_pred, const Tensor4 &noisy,
                           const Tensor4 &clean) {
  if (!residual_pred.same_shape(noisy) || !noisy.same_shape(clean)) {
    throw ShapeError("residual_loss_grad: shape mismatch");
  }
  Tensor4 grad(residual_pred.n, residual_pred.c, residual_pred.h,
               residual_pred.w);
  const double inv_n = 1.0 / residual_pred.n;
  for (std::size_t i = 0; i < residual_pred.data.size(); ++i) {
    const double target =
        static_cast<double>(noisy.data[i]) - clean.data[i];
    grad.data[i] = static_cast<float>(inv_n * (residual_pred.data[i] - target));
  }
  return grad;
}

double target_loss(const Tensor4 &pred, const Tensor4 &target) {
  if (!pred.same_shape(target)) throw ShapeError("target_loss: shape mismatch");
  return sq_error_loss(pred, target);
}

Tensor4 target_loss_grad(const Tensor4 &pred, const Tensor4 &target) {
  if (!pred.same_shape(target)) {
    throw ShapeError("target_loss_grad: shape mismatch");
  }
  return sq_error_grad(pred, target);
}

void adam_step(AdamState &state, std::vector<ParamRef> &params,
               const std::vector<ParamRef> &grads, double lr,
               const TrainConfig &config) {
  if (params.size() != grads.size() || params.size() != state.m.size()) {
    throw StateError("adam_step: parameter/gradient/state count mismatch");
  }
  if (!(lr > 0.0)) throw ConfigError("adam_step: lr must be positive");

  state.step += 1;
  const double b1 = config.beta1, b2 = config.beta2;
  const double bc1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(b2, static_cast<double>(state.step));

  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    if (params[pi].len != grads[pi].len || params[pi].len != state.m[pi].size()) {
      throw StateError("adam_step: parameter block shape mismatch");
    }
    float *theta = params[pi].data;
    const float *g = grads[pi].data;
    std::vector<float> &m = state.m[pi];
    std::vector<float> &v = state.v[pi];
    for (std::size_t i = 0; i < params[pi].len; ++i) {
      const double gi = g[i];
      if (!std::isfinite(gi)) {
        throw DivergedError("adam_step: non-finite gradient");
      }
      const double mi = b1 * m[i] + (1.0 - b1) * gi;
      const double vi = b2 * v[i] + (1.0 - b2) * gi * gi;
      m[i] = static_cast<float>(mi);
      v[i] = static_cast<float>(vi);
      const double m_hat = mi / bc1;
      const double v_hat = vi / bc2;
      theta[i] = static_cast<float>(
          theta[i] - lr * m_hat / (std::sqrt(v_hat) + config.eps));
    }
  }
}

double lr_at_epoch(const TrainConfig &config, int epoch) {
  if (epoch < 0 || epoch >= config.epochs) {
    throw ConfigError("epoch " + std::to_string(epoch) +
                      " out of range [0, " + std::to_string(config.epochs) +
                      ")");
  }
  if (config.epochs == 1) return config.lr_start;
  const double t =
      static_cast<double>(epoch) / static_cast<double>(config.epochs - 1);
  return config.lr_start * std::pow(config.lr_end / config.lr_start, t);
}

EpochStats train_epoch(Model &model, const PatchSet &patches,
                       AdamState &state, const TrainConfig &config,
                       int epoch) {
  config.validate();
  if (patches.count() == 0) throw ConfigError("train_epoch: empty patch set");

  const double lr = lr_at_epoch(config, epoch);
  auto batches = make_batches(patches, config.batch_size, config.seed, epoch);
  auto params = collect_params(model);

  EpochStats stats;
  double loss_sum = 0.0;
  for (std::size_t bi = 0; bi < batches.size(); ++bi) {
    const Tensor4 &clean = batches[bi].first;
    const Tensor4 &noisy = batches[bi].second;

    auto [pred, caches] = forward(model, noisy, Mode::Train);
    Tensor4 noise_map;
    const Tensor4 *target = &clean;
    if (model.spec.has_skip()) {
      noise_map = tensor_zip(noisy, clean,
                             [](float a, float b) { return a - b; });
      target = &noise_map;
    }
    const double loss = target_loss(pred, *target);
    if (!std::isfinite(loss)) {
      throw DivergedError("training diverged at epoch " +
                          std::to_string(epoch) + ", batch " +
                          std::to_string(bi));
    }
    Tensor4 grad_pred = target_loss_grad(pred, *target);
    ModelGrads grads = backward(model, caches, grad_pred);
    auto grad_refs = collect_grads(grads);
    adam_step(state, params, grad_refs, lr, config);

    loss_sum += loss;
    stats.batches += 1;
  }
  stats.mean_loss = loss_sum / stats.batches;
  return stats;
}

} // namespace ecnd
