/*
 * Copyright 2026 the dumbench authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 */

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "dumbench/common.hpp"
#include "dumbench/optim.hpp"

using namespace dumbench;

TEST_CASE("sgd applies p -= lr * g exactly") {
  Tensor p({3}, (Array(3) << 1.0, -2.0, 0.5).finished());
  Array g(3);
  g << 0.1, 0.2, -0.4;
  OptimizerState opt = make_optimizer(OptimizerKind::Sgd, 0.5);
  std::vector<Tensor*> params{&p};
  optimizer_step(opt, params, {g});
  CHECK(p.data(0) == doctest::Approx(1.0 - 0.5 * 0.1).epsilon(1e-15));
  CHECK(p.data(1) == doctest::Approx(-2.0 - 0.5 * 0.2).epsilon(1e-15));
  CHECK(p.data(2) == doctest::Approx(0.5 + 0.5 * 0.4).epsilon(1e-15));
}

TEST_CASE("sgd with zero gradient leaves parameters unchanged") {
  Tensor p({2}, (Array(2) << 3.0, -7.0).finished());
  OptimizerState opt = make_optimizer(OptimizerKind::Sgd, 1.0);
  std::vector<Tensor*> params{&p};
  optimizer_step(opt, params, {Array::Zero(2)});
  CHECK(p.data(0) == 3.0);
  CHECK(p.data(1) == -7.0);
}

TEST_CASE("adam matches two hand-computed steps on a scalar quadratic") {
  // f(x) = x^2 at x0 = 1, so g = 2x. Oracle below was stepped by hand with
  // lr=0.1, beta1=0.9, beta2=0.999, eps=1e-8.
  const double lr = 0.1, b1 = 0.9, b2 = 0.999, eps = 1e-8;
  double x = 1.0, m = 0.0, v = 0.0;
  double expect[2];
  for (int t = 1; t <= 2; ++t) {
    double g = 2.0 * x;
    m = b1 * m + (1 - b1) * g;
    v = b2 * v + (1 - b2) * g * g;
    double mh = m / (1 - std::pow(b1, t));
    double vh = v / (1 - std::pow(b2, t));
    x -= lr * mh / (std::sqrt(vh) + eps);
    expect[t - 1] = x;
  }
  // step 1 reduces to x - lr * sign(g) regardless of the gradient magnitude
  CHECK(expect[0] == doctest::Approx(1.0 - lr * 2.0 / (std::sqrt(4.0) + eps)).epsilon(1e-12));

  Tensor p({1}, Array::Constant(1, 1.0));
  OptimizerState opt = make_optimizer(OptimizerKind::Adam, lr);
  std::vector<Tensor*> params{&p};
  for (int t = 0; t < 2; ++t) {
    Array g = Array::Constant(1, 2.0 * p.data(0));
    optimizer_step(opt, params, {g});
    CHECK(p.data(0) == doctest::Approx(expect[t]).epsilon(1e-12));
  }
  CHECK(opt.step_count == 2);
}

TEST_CASE("adam handles multiple parameter tensors independently") {
  Tensor a({2}, (Array(2) << 1.0, 1.0).finished());
  Tensor b({1}, Array::Constant(1, -1.0));
  OptimizerState opt = make_optimizer(OptimizerKind::Adam, 0.01);
  std::vector<Tensor*> params{&a, &b};
  Array ga(2);
  ga << 1.0, -1.0;
  optimizer_step(opt, params, {ga, Array::Constant(1, 0.5)});
  // first Adam step moves each coordinate by ~lr in the -sign(g) direction
  CHECK(a.data(0) == doctest::Approx(1.0 - 0.01).epsilon(1e-6));
  CHECK(a.data(1) == doctest::Approx(1.0 + 0.01).epsilon(1e-6));
  CHECK(b.data(0) == doctest::Approx(-1.0 - 0.01).epsilon(1e-6));
}

TEST_CASE("adam converges on a 2-d quadratic bowl") {
  Tensor p({2}, (Array(2) << 2.0, -3.0).finished());
  OptimizerState opt = make_optimizer(OptimizerKind::Adam, 0.05);
  std::vector<Tensor*> params{&p};
  for (int t = 0; t < 400; ++t) {
    Array g = 2.0 * p.data;
    optimizer_step(opt, params, {g});
  }
  CHECK(p.data.abs().maxCoeff() < 1e-2);
}

TEST_CASE("non-positive learning rates are rejected") {
  CHECK_THROWS_AS(make_optimizer(OptimizerKind::Sgd, 0.0), ConfigError);
  CHECK_THROWS_AS(make_optimizer(OptimizerKind::Adam, -0.1), ConfigError);
}

TEST_CASE("gradient shape mismatch is rejected") {
  Tensor p({3}, Array::Zero(3));
  OptimizerState opt = make_optimizer(OptimizerKind::Sgd, 0.1);
  std::vector<Tensor*> params{&p};
  std::vector<Array> bad{Array::Zero(2)};
  CHECK_THROWS_AS(optimizer_step(opt, params, bad), ConfigError);
}
