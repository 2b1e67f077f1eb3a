#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ecnd/data.hpp"
#include "ecnd/network.hpp"
#include "ecnd/tensor.hpp"

namespace ecnd {

struct TrainConfig {
  float sigma = 25.0f; // noise std dev, 0-255 scale
  int epochs = 180;
  int batch_size = 128;
  double lr_start = 1e-3;
  double lr_end = 1e-8;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  int patch_size = 40;
  int stride = 10;
  std::uint64_t seed = 0;
  bool augment = false;

  void validate() const;
};

// Mutable view of one learnable parameter block. Model parameters are
// flattened in a fixed order (per layer: conv weights, bias?, gamma?,
// beta?) so optimizer moments and checkpoints line up.
struct ParamRef {
  float *data = nullptr;
  std::size_t len = 0;

  std::span<float> span() { return {data, len}; }
};

std::vector<ParamRef> collect_params(Model &model);
std::vector<ParamRef> collect_grads(ModelGrads &grads);

struct AdamState {
  std::int64_t step = 0;
  std::vector<std::vector<float>> m; // first moments, per parameter block
  std::vector<std::vector<float>> v; // second moments, >= 0

  static AdamState for_model(Model &model);
};

// Squared-error objective with the conventional 1/2 factor:
// (1 / 2N) * sum_j || residual_pred_j - (noisy_j - clean_j) ||^2,
// summed over each patch's pixels, averaged over the batch.
double residual_loss(const Tensor4 &residual_pred, const Tensor4 &noisy,
                     const Tensor4 &clean);

// (1/N) * (residual_pred - (noisy - clean)); feeding this into
// network backward yields dLoss/dParam.
Tensor4 residual_loss_grad(const Tensor4 &residual_pred, const Tensor4 &noisy,
                           const Tensor4 &clean);

// Same objective against an explicit target (clean image for CRNet,
// noise map for the skip variants).
double target_loss(const Tensor4 &pred, const Tensor4 &target);
Tensor4 target_loss_grad(const Tensor4 &pred, const Tensor4 &target);

// One bias-corrected Adam update over all parameter blocks. Throws
// DivergedError on a non-finite gradient.
void adam_step(AdamState &state, std::vector<ParamRef> &params,
               const std::vector<ParamRef> &grads, double lr,
               const TrainConfig &config);

// Geometric interpolation lr_start * (lr_end/lr_start)^(epoch/(epochs-1));
// a single-epoch schedule stays at lr_start.
double lr_at_epoch(const TrainConfig &config, int epoch);

struct EpochStats {
  double mean_loss = 0.0;
  int batches = 0;
};

// One full shuffled pass over the patch set, one adam_step per batch at
// lr_at_epoch(config, epoch). Deterministic given (seed, epoch).
EpochStats train_epoch(Model &model, const PatchSet &patches,
                       AdamState &state, const TrainConfig &config,
                       int epoch);

// Versioned little-endian checkpoint (see checkpoint.cpp for the byte
// layout). Round-trips the model, config and optimizer state bit-exactly.
void save_checkpoint(const Model &model, const AdamState *state,
                     const TrainConfig &config, const std::string &path);

struct Checkpoint {
  Model model;
  TrainConfig config;
  bool has_adam = false;
  AdamState adam;
};

Checkpoint load_checkpoint(const std::string &path);

} // namespace ecnd
