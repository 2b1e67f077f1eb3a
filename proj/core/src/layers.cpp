#include "ecnd/layers.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ecnd/parallel.hpp"
#include "ecnd/rng.hpp"

namespace ecnd {

namespace {

void check_conv_input(const Tensor4 &input, const Conv2dParams &params) {
  if (input.c != params.in_channels) {
    throw ShapeError("conv2d: input has " + std::to_string(input.c) +
                     " channels, layer expects " +
                     std::to_string(params.in_channels));
  }
  if (params.weights.n != params.out_channels ||
      params.weights.c != params.in_channels || params.weights.h != 3 ||
      params.weights.w != 3) {
    throw ShapeError("conv2d: weight tensor shape inconsistent with params");
  }
}

} // namespace

std::pair<Tensor4, ConvCache> conv2d_forward(const Tensor4 &input,
                                             const Conv2dParams &params) {
  check_conv_input(input, params);
  const int d = params.dilation;
  const int H = input.h, W = input.w;
  Tensor4 out(input.n, params.out_channels, H, W);

  // One task per (batch element, output channel). Each output element is
  // written by exactly one task, so the result is thread-count invariant.
  parallel_for(0, static_cast<std::size_t>(input.n) * params.out_channels,
               [&](std::size_t task) {
    const int b = static_cast<int>(task) / params.out_channels;
    const int oc = static_cast<int>(task) % params.out_channels;
    const double bias =
        params.bias ? static_cast<double>((*params.bias)[oc]) : 0.0;
    std::vector<double> acc(W);
    for (int oy = 0; oy < H; ++oy) {
      std::fill(acc.begin(), acc.end(), 0.0);
      for (int ic = 0; ic < params.in_channels; ++ic) {
        for (int u = 0; u < 3; ++u) {
          const int iy = oy + (u - 1) * d;
          if (iy < 0 || iy >= H) continue;
          const float *in_row = &input.data[input.index(b, ic, iy, 0)];
          for (int v = 0; v < 3; ++v) {
            const int off = (v - 1) * d;
            const double wt = params.weights.at(oc, ic, u, v);
            const int lo = std::max(0, -off);
            const int hi = std::min(W, W - off);
            for (int ox = lo; ox < hi; ++ox) {
              acc[ox] += wt * in_row[ox + off];
            }
          }
        }
      }
      float *out_row = &out.data[out.index(b, oc, oy, 0)];
      for (int ox = 0; ox < W; ++ox) {
        out_row[ox] = static_cast<float>(acc[ox] + bias);
      }
    }
  });

  return {std::move(out), ConvCache{input}};
}

ConvGrads conv2d_backward(const Tensor4 &grad_out, const ConvCache &cache,
                          const Conv2dParams &params) {
  const Tensor4 &input = cache.input;
  if (input.c != params.in_channels) {
    throw StateError("conv2d_backward: cache does not match params");
  }
  if (grad_out.n != input.n || grad_out.c != params.out_channels ||
      grad_out.h != input.h || grad_out.w != input.w) {
    throw ShapeError("conv2d_backward: grad_out shape mismatch");
  }
  const int d = params.dilation;
  const int H = input.h, W = input.w;

  ConvGrads grads;
  grads.input = Tensor4(input.n, input.c, H, W);
  grads.weights = Tensor4(params.out_channels, params.in_channels, 3, 3);
  if (params.bias) grads.bias.assign(params.out_channels, 0.0f);

  // Weight and bias gradients: one task per output channel, summed over
  // the batch in fixed order.
  parallel_for(0, params.out_channels, [&](std::size_t task) {
    const int oc = static_cast<int>(task);
    for (int ic = 0; ic < params.in_channels; ++ic) {
      for (int u = 0; u < 3; ++u) {
        for (int v = 0; v < 3; ++v) {
          const int row_off = (u - 1) * d;
          const int col_off = (v - 1) * d;
          double acc = 0.0;
          for (int b = 0; b < input.n; ++b) {
            for (int oy = 0; oy < H; ++oy) {
              const int iy = oy + row_off;
              if (iy < 0 || iy >= H) continue;
              const float *g_row = &grad_out.data[grad_out.index(b, oc, oy, 0)];
              const float *in_row = &input.data[input.index(b, ic, iy, 0)];
              const int lo = std::max(0, -col_off);
              const int hi = std::min(W, W - col_off);
              for (int ox = lo; ox < hi; ++ox) {
                acc += static_cast<double>(g_row[ox]) * in_row[ox + col_off];
              }
            }
          }
          grads.weights.at(oc, ic, u, v) = static_cast<float>(acc);
        }
      }
    }
    if (params.bias) {
      double acc = 0.0;
      for (int b = 0; b < input.n; ++b) {
        const float *g = &grad_out.data[grad_out.index(b, oc, 0, 0)];
        for (int i = 0; i < H * W; ++i) acc += g[i];
      }
      grads.bias[oc] = static_cast<float>(acc);
    }
  });

  // Input gradient: full correlation of grad_out with the flipped kernel.
  parallel_for(0, static_cast<std::size_t>(input.n) * params.in_channels,
               [&](std::size_t task) {
    const int b = static_cast<int>(task) / params.in_channels;
    const int ic = static_cast<int>(task) % params.in_channels;
    std::vector<double> acc(W);
    for (int iy = 0; iy < H; ++iy) {
      std::fill(acc.begin(), acc.end(), 0.0);
      for (int oc = 0; oc < params.out_channels; ++oc) {
        for (int u = 0; u < 3; ++u) {
          const int oy = iy - (u - 1) * d;
          if (oy < 0 || oy >= H) continue;
          const float *g_row = &grad_out.data[grad_out.index(b, oc, oy, 0)];
          for (int v = 0; v < 3; ++v) {
            const int off = (v - 1) * d;
            const double wt = params.weights.at(oc, ic, u, v);
            const int lo = std::max(0, off);
            const int hi = std::min(W, W + off);
            for (int ix = lo; ix < hi; ++ix) {
              acc[ix] += wt * g_row[ix - off];
            }
          }
        }
      }
      float *out_row = &grads.input.data[grads.input.index(b, ic, iy, 0)];
      for (int ix = 0; ix < W; ++ix) out_row[ix] = static_cast<float>(acc[ix]);
    }
  });

  return grads;
}

std::pair<Tensor4, BatchNormCache> batchnorm_forward(const Tensor4 &input,
                                                     BatchNormParams &params,
                                                     Mode mode) {
  if (input.c != params.channels) {
    throw ShapeError("batchnorm: input has " + std::to_string(input.c) +
                     " channels, layer expects " +
                     std::to_string(params.channels));
  }
  const std::size_t per_channel =
      static_cast<std::size_t>(input.n) * input.h * input.w;
  const int plane = input.h * input.w;
  Tensor4 out(input.n, input.c, input.h, input.w);
  BatchNormCache cache;

  if (mode == Mode::Train) {
    if (per_channel < 2) {
      throw ConfigError("batchnorm: degenerate batch, need >= 2 elements "
                        "per channel in train mode");
    }
    cache.train_mode = true;
    cache.normalized = Tensor4(input.n, input.c, input.h, input.w);
    cache.inv_std.resize(params.channels);
    for (int ch = 0; ch < params.channels; ++ch) {
      // two-pass moments in double
      double sum = 0.0;
      for (int b = 0; b < input.n; ++b) {
        const float *p = &input.data[input.index(b, ch, 0, 0)];
        for (int i = 0; i < plane; ++i) sum += p[i];
      }
      const double mean = sum / static_cast<double>(per_channel);
      double ss = 0.0;
      for (int b = 0; b < input.n; ++b) {
        const float *p = &input.data[input.index(b, ch, 0, 0)];
        for (int i = 0; i < plane; ++i) {
          const double dv = p[i] - mean;
          ss += dv * dv;
        }
      }
      const double var = ss / static_cast<double>(per_channel); // biased
      const double inv_std = 1.0 / std::sqrt(var + params.eps);
      cache.inv_std[ch] = inv_std;
      const double g = params.gamma[ch];
      const double bt = params.beta[ch];
      for (int b = 0; b < input.n; ++b) {
        const float *p = &input.data[input.index(b, ch, 0, 0)];
        float *xh = &cache.normalized.data[cache.normalized.index(b, ch, 0, 0)];
        float *o = &out.data[out.index(b, ch, 0, 0)];
        for (int i = 0; i < plane; ++i) {
          const double n = (p[i] - mean) * inv_std;
          xh[i] = static_cast<float>(n);
          o[i] = static_cast<float>(g * n + bt);
        }
      }
      const double m = params.momentum;
      params.running_mean[ch] =
          static_cast<float>(m * params.running_mean[ch] + (1.0 - m) * mean);
      params.running_var[ch] =
          static_cast<float>(m * params.running_var[ch] + (1.0 - m) * var);
    }
  } else {
    cache.train_mode = false;
    for (int ch = 0; ch < params.channels; ++ch) {
      const double inv_std =
          1.0 / std::sqrt(static_cast<double>(params.running_var[ch]) +
                          params.eps);
      const double mean = params.running_mean[ch];
      const double g = params.gamma[ch];
      const double bt = params.beta[ch];
      for (int b = 0; b < input.n; ++b) {
        const float *p = &input.data[input.index(b, ch, 0, 0)];
        float *o = &out.data[out.index(b, ch, 0, 0)];
        for (int i = 0; i < plane; ++i) {
          o[i] = static_cast<float>(g * ((p[i] - mean) * inv_std) + bt);
        }
      }
    }
  }
  return {std::move(out), std::move(cache)};
}

BatchNormGrads batchnorm_backward(const Tensor4 &grad_out,
                                  const BatchNormCache &cache,
                                  const BatchNormParams &params) {
  if (!cache.train_mode) {
    throw StateError("batchnorm_backward: cache is from an infer-mode "
                     "forward; backward needs a train-mode cache");
  }
  const Tensor4 &xhat = cache.normalized;
  if (!grad_out.same_shape(xhat)) {
    throw ShapeError("batchnorm_backward: grad_out shape mismatch");
  }
  const std::size_t per_channel =
      static_cast<std::size_t>(grad_out.n) * grad_out.h * grad_out.w;
  const int plane = grad_out.h * grad_out.w;

  BatchNormGrads grads;
  grads.input = Tensor4(grad_out.n, grad_out.c, grad_out.h, grad_out.w);
  grads.gamma.assign(params.channels, 0.0f);
  grads.beta.assign(params.channels, 0.0f);

  for (int ch = 0; ch < params.channels; ++ch) {
    double sum_dy = 0.0, sum_dy_xhat = 0.0;
    for (int b = 0; b < grad_out.n; ++b) {
      const float *dy = &grad_out.data[grad_out.index(b, ch, 0, 0)];
      const float *xh = &xhat.data[xhat.index(b, ch, 0, 0)];
      for (int i = 0; i < plane; ++i) {
        sum_dy += dy[i];
        sum_dy_xhat += static_cast<double>(dy[i]) * xh[i];
      }
    }
    grads.gamma[ch] = static_cast<float>(sum_dy_xhat);
    grads.beta[ch] = static_cast<float>(sum_dy);

    const double scale =
        static_cast<double>(params.gamma[ch]) * cache.inv_std[ch];
    const double mean_dy = sum_dy / static_cast<double>(per_channel);
    const double mean_dy_xhat = sum_dy_xhat / static_cast<double>(per_channel);
    for (int b = 0; b < grad_out.n; ++b) {
      const float *dy = &grad_out.data[grad_out.index(b, ch, 0, 0)];
      const float *xh = &xhat.data[xhat.index(b, ch, 0, 0)];
      float *dx = &grads.input.data[grads.input.index(b, ch, 0, 0)];
      for (int i = 0; i < plane; ++i) {
        dx[i] = static_cast<float>(
            scale * (dy[i] - mean_dy - xh[i] * mean_dy_xhat));
      }
    }
  }
  return grads;
}

std::pair<Tensor4, ReluCache> relu_forward(const Tensor4 &input) {
  Tensor4 out(input.n, input.c, input.h, input.w);
  ReluCache cache;
  cache.positive.resize(input.size());
  for (std::size_t i = 0; i < input.data.size(); ++i) {
    const bool pos = input.data[i] > 0.0f;
    cache.positive[i] = pos ? 1 : 0;
    out.data[i] = pos ? input.data[i] : 0.0f;
  }
  return {std::move(out), std::move(cache)};
}

Tensor4 relu_backward(const Tensor4 &grad_out, const ReluCache &cache) {
  if (grad_out.size() != cache.positive.size()) {
    throw StateError("relu_backward: cache does not match grad_out");
  }
  Tensor4 grad_in(grad_out.n, grad_out.c, grad_out.h, grad_out.w);
  for (std::size_t i = 0; i < grad_out.data.size(); ++i) {
    grad_in.data[i] = cache.positive[i] ? grad_out.data[i] : 0.0f;
  }
  return grad_in;
}

Tensor4 he_init(int out_channels, int in_channels, std::uint64_t seed) {
  Tensor4 weights(out_channels, in_channels, 3, 3);
  const double stddev = std::sqrt(2.0 / (static_cast<double>(in_channels) * 9));
  GaussianStream gs(seed);
  for (float &w : weights.data) {
    w = static_cast<float>(gs.next() * stddev);
  }
  return weights;
}

} // namespace ecnd
