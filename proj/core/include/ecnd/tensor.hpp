#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include "ecnd/errors.hpp"

namespace ecnd {

// Dense 4-D tensor in row-major NCHW order (batch-major, then channel,
// row, column). Storage is 32-bit float; reductions accumulate in double.
// The layout is fixed so serialized payloads are bit-exact across runs.
struct Tensor4 {
  int n = 0, c = 0, h = 0, w = 0;
  std::vector<float> data;

  Tensor4() = default;
  Tensor4(int n_, int c_, int h_, int w_, float fill = 0.0f);

  std::size_t size() const { return data.size(); }

  std::size_t index(int i, int j, int k, int l) const {
    return ((static_cast<std::size_t>(i) * c + j) * h + k) * w + l;
  }
  float &at(int i, int j, int k, int l) { return data[index(i, j, k, l)]; }
  float at(int i, int j, int k, int l) const { return data[index(i, j, k, l)]; }

  bool same_shape(const Tensor4 &o) const {
    return n == o.n && c == o.c && h == o.h && w == o.w;
  }
};

// Factory with validation; every dimension must be >= 1.
Tensor4 tensor_create(int n, int c, int h, int w, float fill);

// Elementwise combination of two same-shaped tensors.
Tensor4 tensor_zip(const Tensor4 &a, const Tensor4 &b,
                   const std::function<float(float, float)> &op);

// Mean of squared elements, accumulated in double: (1/len) * sum(a_i^2).
double tensor_reduce_mean_sq(const Tensor4 &a);

// True iff every element is finite (no NaN/Inf).
bool tensor_all_finite(const Tensor4 &a);

} // namespace ecnd
