#include "ecnd/network.hpp"

#include <algorithm>
#include <cmath>

#include "ecnd/rng.hpp"

namespace ecnd {

namespace {

// Canonical dilated positions at depth 17; other depths reuse the same
// relative positions rounded to the nearest interior layer.
std::vector<int> dilated_positions(int depth) {
  static const int canonical[] = {2, 5, 9, 12};
  std::vector<int> pos;
  for (int p : canonical) {
    int scaled = static_cast<int>(std::lround(p * depth / 17.0));
    scaled = std::clamp(scaled, 2, depth - 2);
    if (pos.empty() || pos.back() != scaled) pos.push_back(scaled);
  }
  return pos;
}

} // namespace

ArchitectureSpec make_spec(Variant variant, int depth, int width) {
  if (depth < 3) {
    throw ConfigError("depth must be >= 3, got " + std::to_string(depth));
  }
  if (width < 1) {
    throw ConfigError("width must be >= 1, got " + std::to_string(width));
  }
  ArchitectureSpec spec;
  spec.variant = variant;
  spec.depth = depth;
  spec.width = width;
  spec.layers.resize(depth);

  const bool bn = variant == Variant::CRRBNet || variant == Variant::ECNDNet;
  for (int pos = 1; pos <= depth; ++pos) {
    LayerDesc &d = spec.layers[pos - 1];
    if (pos == depth) {
      d.kind = LayerKind::Conv;
    } else if (pos == 1 || pos == depth - 1) {
      d.kind = LayerKind::ConvRelu;
    } else {
      d.kind = bn ? LayerKind::ConvBnRelu : LayerKind::ConvRelu;
    }
    d.dilation = 1;
  }
  if (variant == Variant::ECNDNet) {
    for (int pos : dilated_positions(depth)) {
      spec.layers[pos - 1].kind = LayerKind::DilatedConvBnRelu;
      spec.layers[pos - 1].dilation = 2;
    }
  }
  return spec;
}

Model build_variant(Variant variant, int depth, int width,
                    std::uint64_t seed) {
  Model model;
  model.spec = make_spec(variant, depth, width);

  for (int pos = 1; pos <= depth; ++pos) {
    const LayerDesc &desc = model.spec.layers[pos - 1];
    Layer layer;
    layer.desc = desc;
    layer.conv.in_channels = pos == 1 ? 1 : width;
    layer.conv.out_channels = pos == depth ? 1 : width;
    layer.conv.dilation = desc.dilation;
    // Conv filters depend only on (seed, position), never on the variant,
    // so ablation runs start from identical filters.
    layer.conv.weights = he_init(layer.conv.out_channels,
                                 layer.conv.in_channels,
                                 mix_seed(seed, static_cast<std::uint64_t>(pos)));
    if (desc.has_bias()) {
      layer.conv.bias.emplace(layer.conv.out_channels, 0.0f);
    }
    if (desc.has_bn()) {
      BatchNormParams bn;
      bn.channels = layer.conv.out_channels;
      bn.gamma.assign(bn.channels, 1.0f);
      bn.beta.assign(bn.channels, 0.0f);
      bn.running_mean.assign(bn.channels, 0.0f);
      bn.running_var.assign(bn.channels, 1.0f);
      layer.bn = std::move(bn);
    }
    model.layers.push_back(std::move(layer));
  }
  return model;
}

std::pair<Tensor4, ForwardCaches> forward(Model &model,
                                          const Tensor4 &noisy_batch,
                                          Mode mode) {
  if (noisy_batch.c != 1) {
    throw ShapeError("forward: input must have exactly 1 channel, got " +
                     std::to_string(noisy_batch.c));
  }
  ForwardCaches caches;
  caches.train_mode = mode == Mode::Train;
  if (caches.train_mode) caches.layers.resize(model.layers.size());

  Tensor4 x = noisy_batch;
  for (std::size_t li = 0; li < model.layers.size(); ++li) {
    Layer &layer = model.layers[li];
    auto [conv_out, conv_cache] = conv2d_forward(x, layer.conv);
    x = std::move(conv_out);
    if (caches.train_mode) caches.layers[li].conv = std::move(conv_cache);

    if (layer.bn) {
      auto [bn_out, bn_cache] = batchnorm_forward(x, *layer.bn, mode);
      x = std::move(bn_out);
      if (caches.train_mode) caches.layers[li].bn = std::move(bn_cache);
    }
    if (layer.desc.has_relu()) {
      auto [relu_out, relu_cache] = relu_forward(x);
      x = std::move(relu_out);
      if (caches.train_mode) caches.layers[li].relu = std::move(relu_cache);
    }
  }
  return {std::move(x), std::move(caches)};
}

ModelGrads backward(const Model &model, const ForwardCaches &caches,
                    const Tensor4 &grad_output) {
  if (!caches.train_mode || caches.layers.size() != model.layers.size()) {
    throw StateError("backward: caches must come from a train-mode forward "
                     "on this model");
  }
  ModelGrads grads;
  grads.layers.resize(model.layers.size());

  Tensor4 grad = grad_output;
  for (std::size_t i = model.layers.size(); i-- > 0;) {
    const Layer &layer = model.layers[i];
    const LayerCaches &lc = caches.layers[i];
    if (layer.desc.has_relu()) {
      if (!lc.relu) throw StateError("backward: missing ReLU cache");
      grad = relu_backward(grad, *lc.relu);
    }
    if (layer.bn) {
      if (!lc.bn) throw StateError("backward: missing BN cache");
      auto bn_grads = batchnorm_backward(grad, *lc.bn, *layer.bn);
      grad = std::move(bn_grads.input);
      bn_grads.input = Tensor4();
      grads.layers[i].bn = std::move(bn_grads);
    }
    if (!lc.conv) throw StateError("backward: missing conv cache");
    auto conv_grads = conv2d_backward(grad, *lc.conv, layer.conv);
    grad = std::move(conv_grads.input);
    conv_grads.input = Tensor4();
    grads.layers[i].conv = std::move(conv_grads);
  }
  return grads;
}

Tensor4 denoise(Model &model, const Tensor4 &noisy) {
  auto [pred, caches] = forward(model, noisy, Mode::Infer);
  Tensor4 out(noisy.n, noisy.c, noisy.h, noisy.w);
  if (model.spec.has_skip()) {
    for (std::size_t i = 0; i < out.data.size(); ++i) {
      out.data[i] = std::clamp(noisy.data[i] - pred.data[i], 0.0f, 1.0f);
    }
  } else {
    for (std::size_t i = 0; i < out.data.size(); ++i) {
      out.data[i] = std::clamp(pred.data[i], 0.0f, 1.0f);
    }
  }
  return out;
}

std::vector<int> receptive_fields(const ArchitectureSpec &spec) {
  std::vector<int> rf;
  rf.reserve(spec.layers.size());
  int acc = 1;
  for (const LayerDesc &d : spec.layers) {
    acc += 2 * d.dilation;
    rf.push_back(acc);
  }
  return rf;
}

std::int64_t param_count(const ArchitectureSpec &spec) {
  std::int64_t total = 0;
  const int depth = spec.depth;
  for (int pos = 1; pos <= depth; ++pos) {
    const LayerDesc &d = spec.layers[pos - 1];
    const std::int64_t in = pos == 1 ? 1 : spec.width;
    const std::int64_t out = pos == depth ? 1 : spec.width;
    total += out * in * 9;
    if (d.has_bias()) total += out;
    if (d.has_bn()) total += 2 * out; // gamma + beta
  }
  return total;
}

std::string variant_name(Variant v) {
  switch (v) {
    case Variant::CRNet: return "crnet";
    case Variant::CRRNet: return "crrnet";
    case Variant::CRRBNet: return "crrbnet";
    case Variant::ECNDNet: return "ecndnet";
  }
  return "unknown";
}

std::optional<Variant> variant_from_name(const std::string &name) {
  if (name == "crnet") return Variant::CRNet;
  if (name == "crrnet") return Variant::CRRNet;
  if (name == "crrbnet") return Variant::CRRBNet;
  if (name == "ecndnet") return Variant::ECNDNet;
  return std::nullopt;
}

std::string layer_kind_name(LayerKind k) {
  switch (k) {
    case LayerKind::ConvRelu: return "Conv+ReLU";
    case LayerKind::ConvBnRelu: return "Conv+BN+ReLU";
    case LayerKind::DilatedConvBnRelu: return "DilatedConv+BN+ReLU";
    case LayerKind::Conv: return "Conv";
  }
  return "unknown";
}

} // namespace ecnd
