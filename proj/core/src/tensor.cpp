#include "ecnd/tensor.hpp"

#include <cmath>
#include <string>

namespace ecnd {

Tensor4::Tensor4(int n_, int c_, int h_, int w_, float fill)
    : n(n_), c(c_), h(h_), w(w_) {
  if (n < 1 || c < 1 || h < 1 || w < 1) {
    throw ShapeError("tensor dimensions must all be >= 1, got " +
                     std::to_string(n_) + "x" + std::to_string(c_) + "x" +
                     std::to_string(h_) + "x" + std::to_string(w_));
  }
  data.assign(static_cast<std::size_t>(n) * c * h * w, fill);
}

Tensor4 tensor_create(int n, int c, int h, int w, float fill) {
  return Tensor4(n, c, h, w, fill);
}

Tensor4 tensor_zip(const Tensor4 &a, const Tensor4 &b,
                   const std::function<float(float, float)> &op) {
  if (!a.same_shape(b)) {
    throw ShapeError("tensor_zip: shape mismatch");
  }
  Tensor4 out(a.n, a.c, a.h, a.w);
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    out.data[i] = op(a.data[i], b.data[i]);
  }
  return out;
}

double tensor_reduce_mean_sq(const Tensor4 &a) {
  double acc = 0.0;
  for (float v : a.data) {
    acc += static_cast<double>(v) * static_cast<double>(v);
  }
  return acc / static_cast<double>(a.data.size());
}

bool tensor_all_finite(const Tensor4 &a) {
  for (float v : a.data) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

} // namespace ecnd
