// Copyright 2026 the revgraph authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "revgraph/numerics.hpp"

#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "revgraph/rng.hpp"

using namespace revgraph;

TEST_CASE("relu clamps negatives and zero stays zero") {
  Vec x = {-1.0, 0.0, 2.0};
  Vec y = relu(x);
  REQUIRE(y == Vec{0.0, 0.0, 2.0});
}

TEST_CASE("logistic fixed points") {
  REQUIRE(logistic(0.0) == 0.5);
  REQUIRE(logistic(std::log(3.0)) == Catch::Approx(0.75).epsilon(1e-12));
  // extreme tails stay finite and saturate
  REQUIRE(logistic(1000.0) == 1.0);
  REQUIRE(logistic(-1000.0) == 0.0);
}

TEST_CASE("logistic symmetry within 1e-12") {
  Rng g(12345);
  for (int i = 0; i < 200; ++i) {
    double s = rng_range(g, -40.0, 40.0);
    REQUIRE(std::abs(logistic(s) + logistic(-s) - 1.0) <= 1e-12);
  }
}

TEST_CASE("dot of short vectors") {
  Vec a = {1.0, 2.0}, b = {3.0, 4.0};
  REQUIRE(dot(a, b) == 11.0);
  Vec c = {1.0};
  REQUIRE_THROWS_AS(dot(a, c), DimensionMismatch);
}

TEST_CASE("matvec against a hand example") {
  Matrix w(2, 3);
  // [[1,2,3],[4,5,6]] * [1,1,2] = [9, 21]
  w.a = {1, 2, 3, 4, 5, 6};
  Vec x = {1, 1, 2};
  REQUIRE(matvec(w, x) == Vec{9.0, 21.0});
  Vec bad = {1, 2};
  REQUIRE_THROWS_AS(matvec(w, bad), DimensionMismatch);
}

TEST_CASE("axpy scales and accumulates") {
  Vec x = {1.0, -2.0}, y = {10.0, 10.0};
  REQUIRE(axpy(0.5, x, y) == Vec{10.5, 9.0});
  Vec bad = {1.0};
  REQUIRE_THROWS_AS(axpy(1.0, x, bad), DimensionMismatch);
}

TEST_CASE("tape forward values match the plain kernels") {
  Rng g(7);
  Matrix w(3, 4);
  for (double& v : w.a) v = rng_normal(g);
  Vec x(4), y(3);
  for (double& v : x) v = rng_normal(g);
  for (double& v : y) v = rng_normal(g);

  Tape t;
  auto vw = t.input_matrix(w);
  auto vx = t.input(x);
  auto vy = t.input(y);
  auto mv = t.matvec(vw, vx);
  auto r = t.relu(mv);
  auto d = t.dot(r, vy);

  Vec mv_plain = matvec(w, x);
  Vec r_plain = relu(mv_plain);
  REQUIRE(std::equal(r_plain.begin(), r_plain.end(), t.value(r).begin()));
  REQUIRE(t.scalar(d) == dot(r_plain, y));
}

TEST_CASE("gradient check: quadratic dot(theta, theta)") {
  GradFn f = [](std::span<const double> theta, Vec* grad_out) {
    Tape t;
    auto v = t.input(theta);
    auto q = t.dot(v, v);
    if (grad_out) {
      t.backward(q);
      auto a = t.adjoint(v);
      grad_out->assign(a.begin(), a.end());
    }
    return t.scalar(q);
  };
  // analytic gradient at [1,2] is [2,4]
  Vec grad;
  f(Vec{1.0, 2.0}, &grad);
  REQUIRE(grad[0] == Catch::Approx(2.0).margin(1e-12));
  REQUIRE(grad[1] == Catch::Approx(4.0).margin(1e-12));
  REQUIRE(grad_check(f, {1.0, 2.0}) < 1e-7);
}

TEST_CASE("gradient check: logistic of a projection") {
  const Vec c = {0.3, -1.2, 2.0};
  GradFn f = [&c](std::span<const double> theta, Vec* grad_out) {
    Tape t;
    auto v = t.input(theta);
    auto vc = t.input(c);
    auto s = t.dot(v, vc);
    auto p = t.logistic(s);
    if (grad_out) {
      t.backward(p);
      auto a = t.adjoint(v);
      grad_out->assign(a.begin(), a.end());
    }
    return t.scalar(p);
  };
  REQUIRE(grad_check(f, {0.1, 0.5, -0.4}) < 1e-6);
}

TEST_CASE("gradient check: composite with matvec, weighted_sum, relu, bce") {
  Rng g(99);
  const std::size_t rows = 3, cols = 4;
  Vec x1(cols), x2(cols), zv(rows);
  for (double& v : x1) v = rng_normal(g);
  for (double& v : x2) v = rng_normal(g);
  for (double& v : zv) v = rng_normal(g);

  GradFn f = [&](std::span<const double> theta, Vec* grad_out) {
    Tape t;
    auto w = t.input_matrix(MatRef(theta.data(), rows, cols));
    auto v1 = t.input(x1);
    auto v2 = t.input(x2);
    const Tape::Var xs[2] = {v1, v2};
    const double cs[2] = {0.5, -1.5};
    auto mix = t.weighted_sum(xs, cs);
    auto h = t.relu(t.matvec(w, mix));
    auto z = t.input(zv);
    auto s = t.dot(h, z);
    auto loss = t.bce_with_logit(s, 1.0);
    if (grad_out) {
      t.backward(loss);
      auto a = t.adjoint(w);
      grad_out->assign(a.begin(), a.end());
    }
    return t.scalar(loss);
  };

  Vec theta(rows * cols);
  for (double& v : theta) v = rng_normal(g, 0.0, 0.7);
  REQUIRE(grad_check(f, theta) < 1e-6);
}

TEST_CASE("stable bce agrees with the clamped-probability form at moderate logits") {
  auto clamped_ref = [](double s, double y) {
    const double p = std::clamp(logistic(s), 1e-12, 1.0 - 1e-12);
    return -(y * std::log(p) + (1.0 - y) * std::log(1.0 - p));
  };
  auto stable = [](double s, double y) {
    Tape t;
    auto vs = t.input(Vec{s});
    return t.scalar(t.bce_with_logit(vs, y));
  };
  Rng g(3);
  for (int i = 0; i < 100; ++i) {
    const double s = rng_range(g, -10.0, 10.0);
    const double y = (i % 2 == 0) ? 1.0 : 0.0;
    const double ref = clamped_ref(s, y);
    REQUIRE(std::abs(stable(s, y) - ref) <= 1e-12 * std::max(1.0, std::abs(ref)));
  }
  // wider band: the clamped form cancels in 1-p with error growing like
  // e^|s| * ulp, so only expect loose agreement; the stable form is the
  // accurate one
  for (int i = 0; i < 100; ++i) {
    const double s = rng_range(g, -16.0, 16.0);
    const double y = (i % 2 == 0) ? 1.0 : 0.0;
    const double ref = clamped_ref(s, y);
    REQUIRE(std::abs(stable(s, y) - ref) <= 1e-8 * std::max(1.0, std::abs(ref)));
  }
}

TEST_CASE("bce at p=0.5 equals ln 2") {
  Tape t;
  auto s = t.input(Vec{0.0});
  REQUIRE(t.scalar(t.bce_with_logit(s, 1.0)) == Catch::Approx(std::log(2.0)).epsilon(1e-15));
  auto s2 = t.input(Vec{0.0});
  REQUIRE(t.scalar(t.bce_with_logit(s2, 0.0)) == Catch::Approx(std::log(2.0)).epsilon(1e-15));
}

TEST_CASE("adjoints accumulate additively when a variable is reused") {
  // f = dot(v, v) + dot(v, c); df/dv = 2v + c
  Vec c = {1.0, -1.0};
  Tape t;
  auto v = t.input(Vec{2.0, 3.0});
  auto vc = t.input(c);
  auto a = t.dot(v, v);
  auto b = t.dot(v, vc);
  auto s = t.add(a, b);
  t.backward(s);
  auto g = t.adjoint(v);
  REQUIRE(g[0] == Catch::Approx(5.0).margin(1e-12));
  REQUIRE(g[1] == Catch::Approx(5.0).margin(1e-12));
}

TEST_CASE("tape reset allows reuse") {
  Tape t;
  auto v = t.input(Vec{1.0});
  auto q = t.dot(v, v);
  t.backward(q);
  t.reset();
  auto v2 = t.input(Vec{5.0});
  auto q2 = t.dot(v2, v2);
  REQUIRE(t.scalar(q2) == 25.0);
  REQUIRE(t.op_count() == 2);
}

TEST_CASE("rng draws are reproducible and in range") {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) {
    REQUIRE(rng_unit(a) == rng_unit(b));
  }
  Rng g(1);
  for (int i = 0; i < 1000; ++i) {
    double u = rng_unit(g);
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    std::size_t idx = rng_index(g, 7);
    REQUIRE(idx < 7);
  }
  // shuffle determinism
  std::vector<int> v1 = {1, 2, 3, 4, 5, 6}, v2 = v1;
  Rng s1(9), s2(9);
  rng_shuffle(v1, s1);
  rng_shuffle(v2, s2);
  REQUIRE(v1 == v2);
  REQUIRE(derive_seed(7, "init") != derive_seed(7, "shuffle"));
  REQUIRE(derive_seed(7, "init") == derive_seed(7, "init"));
}
