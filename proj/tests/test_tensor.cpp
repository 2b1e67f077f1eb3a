#include <doctest.h>

#include <random>

#include "ecnd/tensor.hpp"

using namespace ecnd;

TEST_CASE("tensor_create fills and validates") {
  Tensor4 z = tensor_create(1, 1, 2, 2, 0.0f);
  REQUIRE(z.size() == 4);
  for (float v : z.data) CHECK(v == 0.0f);

  Tensor4 c = tensor_create(2, 3, 4, 5, 1.5f);
  REQUIRE(c.size() == 120);
  for (float v : c.data) CHECK(v == 1.5f);

  Tensor4 batch = tensor_create(128, 1, 40, 40, 0.0f);
  CHECK(batch.size() == 128u * 40 * 40);

  CHECK_THROWS_AS(tensor_create(0, 1, 1, 1, 0.0f), ShapeError);
  CHECK_THROWS_AS(tensor_create(1, 1, 0, 1, 0.0f), ShapeError);
}

TEST_CASE("tensor_zip elementwise") {
  Tensor4 a(1, 1, 1, 2);
  a.data = {1.0f, 2.0f};
  Tensor4 b(1, 1, 1, 2);
  b.data = {3.0f, 4.0f};

  auto add = [](float x, float y) { return x + y; };
  auto sub = [](float x, float y) { return x - y; };

  Tensor4 sum = tensor_zip(a, b, add);
  CHECK(sum.data[0] == 4.0f);
  CHECK(sum.data[1] == 6.0f);

  Tensor4 self = tensor_zip(a, a, sub);
  for (float v : self.data) CHECK(v == 0.0f);

  Tensor4 zeros(1, 1, 1, 2, 0.0f);
  Tensor4 identity = tensor_zip(a, zeros, add);
  CHECK(identity.data == a.data);

  Tensor4 wrong(1, 1, 2, 2);
  CHECK_THROWS_AS(tensor_zip(a, wrong, add), ShapeError);
}

TEST_CASE("tensor_zip add commutes") {
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<float> dist(-5.0f, 5.0f);
  Tensor4 a(2, 3, 4, 5), b(2, 3, 4, 5);
  for (float &v : a.data) v = dist(gen);
  for (float &v : b.data) v = dist(gen);
  auto add = [](float x, float y) { return x + y; };
  CHECK(tensor_zip(a, b, add).data == tensor_zip(b, a, add).data);
}

TEST_CASE("tensor_reduce_mean_sq") {
  Tensor4 zeros(3, 2, 4, 4, 0.0f);
  CHECK(tensor_reduce_mean_sq(zeros) == 0.0);

  Tensor4 v(1, 1, 1, 2);
  v.data = {3.0f, 4.0f};
  CHECK(tensor_reduce_mean_sq(v) == doctest::Approx(12.5).epsilon(1e-12));

  Tensor4 c(2, 2, 3, 3, -1.75f);
  CHECK(tensor_reduce_mean_sq(c) ==
        doctest::Approx(1.75 * 1.75).epsilon(1e-12));
}

TEST_CASE("mean_sq is permutation invariant") {
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<float> dist(-2.0f, 2.0f);
  Tensor4 a(1, 2, 3, 4);
  for (float &v : a.data) v = dist(gen);
  Tensor4 b = a;
  std::shuffle(b.data.begin(), b.data.end(), gen);
  CHECK(tensor_reduce_mean_sq(a) ==
        doctest::Approx(tensor_reduce_mean_sq(b)).epsilon(1e-12));
}

TEST_CASE("indexing round-trips on random probes") {
  Tensor4 t(3, 5, 7, 11);
  std::mt19937_64 gen(42);
  for (int probe = 0; probe < 1000; ++probe) {
    const int i = static_cast<int>(gen() % 3);
    const int j = static_cast<int>(gen() % 5);
    const int k = static_cast<int>(gen() % 7);
    const int l = static_cast<int>(gen() % 11);
    const float v = static_cast<float>(gen() % 1000) / 7.0f;
    t.at(i, j, k, l) = v;
    CHECK(t.at(i, j, k, l) == v);
  }
}
