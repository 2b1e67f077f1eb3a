#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ecnd/layers.hpp"
#include "ecnd/tensor.hpp"

namespace ecnd {

enum class Variant : std::uint8_t {
  CRNet = 0,   // Conv+ReLU only, no skip: predicts the clean image
  CRRNet = 1,  // adds the global residual skip
  CRRBNet = 2, // adds batch normalization
  ECNDNet = 3, // adds dilated convolutions at the canonical positions
};

enum class LayerKind : std::uint8_t {
  ConvRelu = 0,
  ConvBnRelu = 1,
  DilatedConvBnRelu = 2,
  Conv = 3,
};

struct LayerDesc {
  LayerKind kind = LayerKind::ConvRelu;
  int dilation = 1;

  bool has_bn() const {
    return kind == LayerKind::ConvBnRelu || kind == LayerKind::DilatedConvBnRelu;
  }
  bool has_relu() const { return kind != LayerKind::Conv; }
  // Bias is carried only where no BN follows the convolution.
  bool has_bias() const { return !has_bn(); }
};

// Declarative layer schedule. The canonical ECNDNet at depth 17 places
// dilation-2 layers at positions 2, 5, 9 and 12; other depths use the
// same relative positions rounded to the nearest interior layer.
struct ArchitectureSpec {
  Variant variant = Variant::ECNDNet;
  int depth = 17;
  int width = 64;
  std::vector<LayerDesc> layers; // one per layer, 1-based positions at [i-1]

  // CRNet has no skip and regresses the clean image directly; the other
  // variants predict the noise map.
  bool has_skip() const { return variant != Variant::CRNet; }
};

ArchitectureSpec make_spec(Variant variant, int depth, int width);

struct Layer {
  LayerDesc desc;
  Conv2dParams conv;
  std::optional<BatchNormParams> bn;
};

struct Model {
  ArchitectureSpec spec;
  float sigma = 0.0f; // noise level the model was trained for, 0-255 scale
  std::vector<Layer> layers;
};

// He-initialized conv weights, zero biases, identity BN affine, fresh
// running stats. Conv weights for a given (seed, layer position) are the
// same across variants, so ablations start from identical filters.
Model build_variant(Variant variant, int depth, int width, std::uint64_t seed);

struct LayerCaches {
  std::optional<ConvCache> conv;
  std::optional<BatchNormCache> bn;
  std::optional<ReluCache> relu;
};

struct ForwardCaches {
  std::vector<LayerCaches> layers;
  bool train_mode = false;
};

// Runs the layer schedule on a 1-channel batch. The returned tensor is
// the raw network output (noise prediction for skip variants, clean
// prediction for CRNet). Caches are populated only in train mode.
std::pair<Tensor4, ForwardCaches> forward(Model &model,
                                          const Tensor4 &noisy_batch,
                                          Mode mode);

struct LayerGrads {
  ConvGrads conv;
  std::optional<BatchNormGrads> bn;
};

struct ModelGrads {
  std::vector<LayerGrads> layers;
};

ModelGrads backward(const Model &model, const ForwardCaches &caches,
                    const Tensor4 &grad_output);

// Clean estimate, clipped to [0,1]. Skip variants compute
// clip(noisy - f(noisy)); CRNet computes clip(f(noisy)).
Tensor4 denoise(Model &model, const Tensor4 &noisy);

// Per-layer receptive field: rf_1 = 2*d_1 + 1, rf_k = rf_{k-1} + 2*d_k.
std::vector<int> receptive_fields(const ArchitectureSpec &spec);

// Learnable parameter count: conv weights, biases where present, and the
// BN affine pair (running stats excluded).
std::int64_t param_count(const ArchitectureSpec &spec);

std::string variant_name(Variant v);
std::optional<Variant> variant_from_name(const std::string &name);
std::string layer_kind_name(LayerKind k);

} // namespace ecnd
