#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "ecnd/layers.hpp"
#include "oracles.hpp"

using namespace ecnd;

namespace {

Conv2dParams make_conv(int in_ch, int out_ch, int dilation, bool with_bias,
                       std::uint64_t seed) {
  Conv2dParams p;
  p.in_channels = in_ch;
  p.out_channels = out_ch;
  p.dilation = dilation;
  p.weights = Tensor4(out_ch, in_ch, 3, 3);
  oracle::fill_random(p.weights, seed);
  if (with_bias) {
    p.bias.emplace(out_ch);
    std::mt19937_64 gen(seed ^ 0xb1a5);
    std::uniform_real_distribution<float> dist(-0.5f, 0.5f);
    for (float &b : *p.bias) b = dist(gen);
  }
  return p;
}

Conv2dParams delta_kernel(int dilation) {
  Conv2dParams p;
  p.in_channels = 1;
  p.out_channels = 1;
  p.dilation = dilation;
  p.weights = Tensor4(1, 1, 3, 3, 0.0f);
  p.weights.at(0, 0, 1, 1) = 1.0f;
  return p;
}

} // namespace

TEST_CASE("conv2d identity kernel reproduces the input") {
  Tensor4 input(1, 1, 5, 6);
  oracle::fill_random(input, 3);
  auto [out, cache] = conv2d_forward(input, delta_kernel(1));
  CHECK(out.data == input.data);
}

TEST_CASE("center tap is unaffected by dilation") {
  Tensor4 input(1, 1, 7, 7);
  oracle::fill_random(input, 5);
  auto [out1, c1] = conv2d_forward(input, delta_kernel(1));
  auto [out2, c2] = conv2d_forward(input, delta_kernel(2));
  CHECK(out1.data == out2.data);
}

TEST_CASE("conv2d matches brute-force reference bit-exactly") {
  for (int dilation : {1, 2, 3}) {
    for (int trial = 0; trial < 5; ++trial) {
      const std::uint64_t seed = dilation * 100 + trial;
      Tensor4 input(2, 3, 7, 7);
      oracle::fill_random(input, seed);
      Conv2dParams p = make_conv(3, 2, dilation, trial % 2 == 0, seed + 1);
      auto [out, cache] = conv2d_forward(input, p);
      Tensor4 ref = oracle::conv2d_reference(
          input, p.weights, p.bias ? &*p.bias : nullptr, dilation);
      REQUIRE(out.data.size() == ref.data.size());
      for (std::size_t i = 0; i < out.data.size(); ++i) {
        CHECK(out.data[i] == ref.data[i]);
      }
    }
  }
}

TEST_CASE("conv2d rejects channel mismatch") {
  Tensor4 input(1, 2, 4, 4);
  CHECK_THROWS_AS(conv2d_forward(input, delta_kernel(1)), ShapeError);
}

TEST_CASE("conv2d is linear without bias") {
  Tensor4 x(1, 2, 5, 5), y(1, 2, 5, 5);
  oracle::fill_random(x, 21);
  oracle::fill_random(y, 22);
  Conv2dParams p = make_conv(2, 3, 1, false, 23);

  const float a = 1.7f, b = -0.6f;
  Tensor4 mix(1, 2, 5, 5);
  for (std::size_t i = 0; i < mix.data.size(); ++i) {
    mix.data[i] = a * x.data[i] + b * y.data[i];
  }
  auto [out_mix, c0] = conv2d_forward(mix, p);
  auto [out_x, c1] = conv2d_forward(x, p);
  auto [out_y, c2] = conv2d_forward(y, p);
  for (std::size_t i = 0; i < out_mix.data.size(); ++i) {
    CHECK(out_mix.data[i] ==
          doctest::Approx(a * out_x.data[i] + b * out_y.data[i])
              .epsilon(1e-4));
  }
}

TEST_CASE("conv2d_backward zero upstream gives zero gradients") {
  Tensor4 input(1, 2, 4, 4);
  oracle::fill_random(input, 31);
  Conv2dParams p = make_conv(2, 2, 1, true, 32);
  auto [out, cache] = conv2d_forward(input, p);
  Tensor4 zeros(out.n, out.c, out.h, out.w, 0.0f);
  ConvGrads g = conv2d_backward(zeros, cache, p);
  for (float v : g.input.data) CHECK(v == 0.0f);
  for (float v : g.weights.data) CHECK(v == 0.0f);
  for (float v : g.bias) CHECK(v == 0.0f);
}

TEST_CASE("1x1 spatial input puts weight gradient on the center tap only") {
  Tensor4 input(1, 1, 1, 1);
  input.at(0, 0, 0, 0) = 2.5f;
  Conv2dParams p = make_conv(1, 1, 1, false, 41);
  auto [out, cache] = conv2d_forward(input, p);
  Tensor4 grad_out(1, 1, 1, 1);
  grad_out.at(0, 0, 0, 0) = 1.0f;
  ConvGrads g = conv2d_backward(grad_out, cache, p);
  for (int u = 0; u < 3; ++u) {
    for (int v = 0; v < 3; ++v) {
      if (u == 1 && v == 1) {
        CHECK(g.weights.at(0, 0, u, v) == 2.5f);
      } else {
        CHECK(g.weights.at(0, 0, u, v) == 0.0f);
      }
    }
  }
}

TEST_CASE("conv2d gradients match finite differences") {
  for (int trial = 0; trial < 20; ++trial) {
    const std::uint64_t seed = 1000 + trial;
    const int dilation = 1 + trial % 2;
    Tensor4 input(2, 3, 6, 6);
    oracle::fill_random(input, seed);
    Conv2dParams p = make_conv(3, 2, dilation, true, seed + 50);

    Tensor4 upstream(2, 2, 6, 6);
    oracle::fill_random(upstream, seed + 99);

    // scalarize: loss = sum(upstream * conv(input))
    auto loss = [&]() {
      auto [out, c] = conv2d_forward(input, p);
      double acc = 0.0;
      for (std::size_t i = 0; i < out.data.size(); ++i) {
        acc += static_cast<double>(upstream.data[i]) * out.data[i];
      }
      return acc;
    };

    auto [out, cache] = conv2d_forward(input, p);
    ConvGrads g = conv2d_backward(upstream, cache, p);

    std::mt19937_64 pick(seed + 7);
    const double step = 1e-3;
    const double in_rms = oracle::rms(g.input);
    const double w_rms = oracle::rms(g.weights);
    const double b_rms = oracle::rms(g.bias);
    for (int probe = 0; probe < 6; ++probe) {
      {
        std::size_t i = pick() % input.data.size();
        const double fd = oracle::central_difference(input.data[i], loss, step);
        CHECK(oracle::rel_error(fd, g.input.data[i], in_rms) < 1e-3);
      }
      {
        std::size_t i = pick() % p.weights.data.size();
        const double fd =
            oracle::central_difference(p.weights.data[i], loss, step);
        CHECK(oracle::rel_error(fd, g.weights.data[i], w_rms) < 1e-3);
      }
      {
        std::size_t i = pick() % p.bias->size();
        const double fd =
            oracle::central_difference((*p.bias)[i], loss, step);
        CHECK(oracle::rel_error(fd, g.bias[i], b_rms) < 1e-3);
      }
    }
  }
}

namespace {

BatchNormParams make_bn(int channels) {
  BatchNormParams bn;
  bn.channels = channels;
  bn.gamma.assign(channels, 1.0f);
  bn.beta.assign(channels, 0.0f);
  bn.running_mean.assign(channels, 0.0f);
  bn.running_var.assign(channels, 1.0f);
  return bn;
}

} // namespace

TEST_CASE("batchnorm constant channel gives beta") {
  Tensor4 input(2, 2, 3, 3);
  for (int b = 0; b < 2; ++b)
    for (int ch = 0; ch < 2; ++ch)
      for (int i = 0; i < 9; ++i)
        input.data[input.index(b, ch, i / 3, i % 3)] = 4.0f + ch;

  BatchNormParams bn = make_bn(2);
  auto [out0, c0] = batchnorm_forward(input, bn, Mode::Train);
  for (float v : out0.data) CHECK(v == doctest::Approx(0.0).epsilon(1e-6));

  BatchNormParams bn5 = make_bn(2);
  bn5.beta.assign(2, 5.0f);
  auto [out5, c5] = batchnorm_forward(input, bn5, Mode::Train);
  for (float v : out5.data) CHECK(v == doctest::Approx(5.0).epsilon(1e-6));
}

TEST_CASE("batchnorm train output has zero mean unit variance") {
  Tensor4 input(4, 3, 5, 5);
  oracle::fill_random(input, 61, -3.0f, 3.0f);
  BatchNormParams bn = make_bn(3);
  auto [out, cache] = batchnorm_forward(input, bn, Mode::Train);

  const int plane = 25;
  const double m = 4.0 * plane;
  for (int ch = 0; ch < 3; ++ch) {
    double sum = 0.0, sumsq = 0.0;
    for (int b = 0; b < 4; ++b) {
      for (int i = 0; i < plane; ++i) {
        const double v = out.data[out.index(b, ch, i / 5, i % 5)];
        sum += v;
        sumsq += v * v;
      }
    }
    const double mean = sum / m;
    const double var = sumsq / m - mean * mean;
    CHECK(std::abs(mean) < 1e-5);
    CHECK(std::abs(var - 1.0) < 1e-3);
  }
}

TEST_CASE("batchnorm degenerate batch raises") {
  Tensor4 input(1, 2, 1, 1);
  BatchNormParams bn = make_bn(2);
  CHECK_THROWS_AS(batchnorm_forward(input, bn, Mode::Train), ConfigError);
  // infer mode is fine on the same shape
  CHECK_NOTHROW(batchnorm_forward(input, bn, Mode::Infer));
}

TEST_CASE("batchnorm infer is a deterministic affine map") {
  Tensor4 input(2, 2, 4, 4);
  oracle::fill_random(input, 71);
  BatchNormParams bn = make_bn(2);
  bn.running_mean = {0.3f, -0.1f};
  bn.running_var = {0.8f, 1.4f};
  auto [out1, c1] = batchnorm_forward(input, bn, Mode::Infer);
  auto [out2, c2] = batchnorm_forward(input, bn, Mode::Infer);
  CHECK(out1.data == out2.data);
  CHECK(bn.running_mean[0] == 0.3f); // no update in infer mode
}

TEST_CASE("batchnorm running stats update toward batch stats") {
  Tensor4 input(2, 1, 4, 4);
  oracle::fill_random(input, 73, 1.0f, 2.0f);
  BatchNormParams bn = make_bn(1);
  auto [out, cache] = batchnorm_forward(input, bn, Mode::Train);
  // momentum 0.9: running = 0.9*old + 0.1*batch
  CHECK(bn.running_mean[0] > 0.0f);
  CHECK(bn.running_var[0] < 1.0f); // batch var of [1,2] uniforms is < 1
}

TEST_CASE("batchnorm backward basics") {
  Tensor4 input(2, 2, 3, 3);
  oracle::fill_random(input, 81);
  BatchNormParams bn = make_bn(2);
  auto [out, cache] = batchnorm_forward(input, bn, Mode::Train);

  Tensor4 zeros(2, 2, 3, 3, 0.0f);
  BatchNormGrads gz = batchnorm_backward(zeros, cache, bn);
  for (float v : gz.input.data) CHECK(v == 0.0f);
  for (float v : gz.gamma) CHECK(v == 0.0f);
  for (float v : gz.beta) CHECK(v == 0.0f);

  Tensor4 upstream(2, 2, 3, 3);
  oracle::fill_random(upstream, 83);
  BatchNormGrads g = batchnorm_backward(upstream, cache, bn);
  for (int ch = 0; ch < 2; ++ch) {
    double sum = 0.0;
    for (int b = 0; b < 2; ++b)
      for (int i = 0; i < 9; ++i)
        sum += upstream.data[upstream.index(b, ch, i / 3, i % 3)];
    CHECK(g.beta[ch] == doctest::Approx(sum).epsilon(1e-5));
  }

  // infer-mode cache is rejected
  auto [iout, icache] = batchnorm_forward(input, bn, Mode::Infer);
  CHECK_THROWS_AS(batchnorm_backward(upstream, icache, bn), StateError);
}

TEST_CASE("batchnorm gradients match finite differences") {
  for (int trial = 0; trial < 20; ++trial) {
    const std::uint64_t seed = 2000 + trial;
    Tensor4 input(2, 3, 6, 6);
    oracle::fill_random(input, seed);
    BatchNormParams bn = make_bn(3);
    std::mt19937_64 gen(seed + 1);
    std::uniform_real_distribution<float> dist(0.5f, 1.5f);
    for (float &g : bn.gamma) g = dist(gen);
    for (float &b : bn.beta) b = dist(gen) - 1.0f;

    Tensor4 upstream(2, 3, 6, 6);
    oracle::fill_random(upstream, seed + 2);

    auto loss = [&]() {
      BatchNormParams bn_copy = bn; // forward mutates running stats
      auto [out, c] = batchnorm_forward(input, bn_copy, Mode::Train);
      double acc = 0.0;
      for (std::size_t i = 0; i < out.data.size(); ++i) {
        acc += static_cast<double>(upstream.data[i]) * out.data[i];
      }
      return acc;
    };

    BatchNormParams bn_fwd = bn;
    auto [out, cache] = batchnorm_forward(input, bn_fwd, Mode::Train);
    BatchNormGrads g = batchnorm_backward(upstream, cache, bn);

    std::mt19937_64 pick(seed + 7);
    const double step = 1e-3;
    const double in_rms = oracle::rms(g.input);
    const double g_rms = oracle::rms(g.gamma);
    const double b_rms = oracle::rms(g.beta);
    for (int probe = 0; probe < 4; ++probe) {
      {
        std::size_t i = pick() % input.data.size();
        const double fd = oracle::central_difference(input.data[i], loss, step);
        CHECK(oracle::rel_error(fd, g.input.data[i], in_rms) < 1e-3);
      }
      {
        std::size_t i = pick() % bn.gamma.size();
        const double fd = oracle::central_difference(bn.gamma[i], loss, step);
        CHECK(oracle::rel_error(fd, g.gamma[i], g_rms) < 1e-3);
      }
      {
        std::size_t i = pick() % bn.beta.size();
        const double fd = oracle::central_difference(bn.beta[i], loss, step);
        CHECK(oracle::rel_error(fd, g.beta[i], b_rms) < 1e-3);
      }
    }
  }
}

TEST_CASE("relu forward") {
  Tensor4 input(1, 1, 1, 3);
  input.data = {-1.0f, 0.0f, 2.0f};
  auto [out, cache] = relu_forward(input);
  CHECK(out.data == std::vector<float>{0.0f, 0.0f, 2.0f});

  Tensor4 pos(1, 1, 2, 2, 0.5f);
  auto [pout, pcache] = relu_forward(pos);
  CHECK(pout.data == pos.data);

  Tensor4 r(2, 2, 3, 3);
  oracle::fill_random(r, 91);
  auto [once, c1] = relu_forward(r);
  auto [twice, c2] = relu_forward(once);
  CHECK(once.data == twice.data);
}

TEST_CASE("relu backward") {
  Tensor4 neg(1, 1, 2, 2, -1.0f);
  auto [nout, ncache] = relu_forward(neg);
  Tensor4 up(1, 1, 2, 2, 3.0f);
  Tensor4 g = relu_backward(up, ncache);
  for (float v : g.data) CHECK(v == 0.0f);

  Tensor4 pos(1, 1, 2, 2, 1.0f);
  auto [pout, pcache] = relu_forward(pos);
  Tensor4 gp = relu_backward(up, pcache);
  CHECK(gp.data == up.data);
}

TEST_CASE("relu gradient matches finite differences away from the kink") {
  Tensor4 input(2, 2, 4, 4);
  oracle::fill_random(input, 95);
  Tensor4 upstream(2, 2, 4, 4);
  oracle::fill_random(upstream, 96);

  auto loss = [&]() {
    auto [out, c] = relu_forward(input);
    double acc = 0.0;
    for (std::size_t i = 0; i < out.data.size(); ++i) {
      acc += static_cast<double>(upstream.data[i]) * out.data[i];
    }
    return acc;
  };

  auto [out, cache] = relu_forward(input);
  Tensor4 g = relu_backward(upstream, cache);
  const double step = 1e-3;
  for (std::size_t i = 0; i < input.data.size(); ++i) {
    if (std::abs(input.data[i]) < 1e-4 + step) continue; // kink exclusion
    const double fd = oracle::central_difference(input.data[i], loss, step);
    CHECK(oracle::rel_error(fd, g.data[i]) < 1e-3);
  }
}

TEST_CASE("he_init determinism and moments") {
  Tensor4 a = he_init(64, 1, 1234);
  Tensor4 b = he_init(64, 1, 1234);
  CHECK(a.data == b.data);

  // 64*1*9 = 576 samples, expected std sqrt(2/9)
  double sum = 0.0, sumsq = 0.0;
  for (float v : a.data) {
    sum += v;
    sumsq += static_cast<double>(v) * v;
  }
  const double n = static_cast<double>(a.data.size());
  const double mean = sum / n;
  const double stddev = std::sqrt(sumsq / n - mean * mean);
  const double expected = std::sqrt(2.0 / 9.0);
  CHECK(std::abs(stddev - expected) < 0.1 * expected);

  Tensor4 big = he_init(64, 64, 99);
  double bsum = 0.0;
  for (float v : big.data) bsum += v;
  const double bn_ = static_cast<double>(big.data.size());
  const double sigma = std::sqrt(2.0 / (64.0 * 9.0));
  CHECK(std::abs(bsum / bn_) < 3.0 * sigma / std::sqrt(bn_));
}
