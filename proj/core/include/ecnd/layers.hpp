#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "ecnd/tensor.hpp"

namespace ecnd {

// 3x3 convolution parameters. padding == dilation, which keeps spatial
// size for a 3x3 kernel; the effective filter extent is 2*dilation + 1
// per axis. A bias is present iff the layer is not followed by batch
// normalization.
struct Conv2dParams {
  int in_channels = 0;
  int out_channels = 0;
  int dilation = 1;
  Tensor4 weights;                        // out x in x 3 x 3
  std::optional<std::vector<float>> bias; // out_channels

  int padding() const { return dilation; }
};

struct BatchNormParams {
  int channels = 0;
  std::vector<float> gamma;        // scale, learnable
  std::vector<float> beta;         // shift, learnable
  std::vector<float> running_mean; // updated only in train mode
  std::vector<float> running_var;  // biased convention, >= 0
  float momentum = 0.9f;
  float eps = 1e-5f;
};

enum class Mode { Train, Infer };

// Per-invocation state the backward passes need.
struct ConvCache {
  Tensor4 input;
};

struct BatchNormCache {
  Tensor4 normalized;          // x-hat
  std::vector<double> inv_std; // 1/sqrt(var + eps), per channel
  bool train_mode = false;
};

struct ReluCache {
  std::vector<std::uint8_t> positive; // mask: input > 0
};

// Dilated cross-correlation, zero padding = dilation, same spatial size.
// For each output element the inner product accumulates in double,
// left to right over (input channel, kernel row, kernel column); the
// serialized order matters because tests compare against a reference
// summed the same way.
std::pair<Tensor4, ConvCache> conv2d_forward(const Tensor4 &input,
                                             const Conv2dParams &params);

struct ConvGrads {
  Tensor4 input;
  Tensor4 weights;
  std::vector<float> bias; // empty when the layer has no bias
};

ConvGrads conv2d_backward(const Tensor4 &grad_out, const ConvCache &cache,
                          const Conv2dParams &params);

// Train mode normalizes with batch statistics (biased variance over the
// n*h*w elements of each channel) and updates the running stats as
// running <- momentum*running + (1-momentum)*batch. Infer mode applies
// the running-stat affine map and never updates.
std::pair<Tensor4, BatchNormCache> batchnorm_forward(const Tensor4 &input,
                                                     BatchNormParams &params,
                                                     Mode mode);

struct BatchNormGrads {
  Tensor4 input;
  std::vector<float> gamma;
  std::vector<float> beta;
};

BatchNormGrads batchnorm_backward(const Tensor4 &grad_out,
                                  const BatchNormCache &cache,
                                  const BatchNormParams &params);

std::pair<Tensor4, ReluCache> relu_forward(const Tensor4 &input);

// Subgradient at exactly 0 is 0.
Tensor4 relu_backward(const Tensor4 &grad_out, const ReluCache &cache);

// Zero-mean Gaussian weights, std = sqrt(2 / (in_channels * 9)), for an
// out x in x 3 x 3 kernel. Deterministic for a fixed seed.
Tensor4 he_init(int out_channels, int in_channels, std::uint64_t seed);

} // namespace ecnd
