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
#include <random>

#include "dumbench/common.hpp"
#include "dumbench/transforms.hpp"

using namespace dumbench;

namespace {
Eigen::MatrixXd random_matrix(int r, int c, uint64_t seed) {
  auto rng = make_rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::MatrixXd m(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) m(i, j) = u(rng);
  return m;
}
}  // namespace

TEST_CASE("constant image concentrates DCT energy in the DC coefficient") {
  Eigen::MatrixXd x = Eigen::MatrixXd::Constant(16, 16, 0.7);
  Eigen::MatrixXd d = dct2d(x);
  CHECK(d(0, 0) == doctest::Approx(0.7 * 16).epsilon(1e-12));
  d(0, 0) = 0.0;
  CHECK(d.cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("dct/idct roundtrip on random 32x32 input") {
  Eigen::MatrixXd x = random_matrix(32, 32, 42);
  Eigen::MatrixXd back = idct2d(dct2d(x));
  CHECK((back - x).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("roundtrip holds for non-square and non-power-of-two sizes") {
  Eigen::MatrixXd x = random_matrix(17, 23, 7);
  CHECK((idct2d(dct2d(x)) - x).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("Parseval: orthonormal scaling preserves energy") {
  Eigen::MatrixXd x = random_matrix(32, 32, 3);
  Eigen::MatrixXd d = dct2d(x);
  CHECK(d.squaredNorm() == doctest::Approx(x.squaredNorm()).epsilon(1e-9));
}

TEST_CASE("single cosine at frequency (0,1) lands on exactly one coefficient") {
  const int n = 16;
  const double pi = std::acos(-1.0);
  Eigen::MatrixXd x(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) x(i, j) = std::cos(pi * (2 * j + 1) * 1 / (2.0 * n));
  Eigen::MatrixXd d = dct2d(x);
  int nonzero = 0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (std::abs(d(i, j)) > 1e-9) ++nonzero;
  CHECK(nonzero == 1);
  CHECK(std::abs(d(0, 1)) > 1e-6);
}

TEST_CASE("fft_phase returns angles in (-pi, pi]") {
  const double pi = std::acos(-1.0);
  Eigen::MatrixXd x = random_matrix(16, 16, 11);
  Eigen::MatrixXd p = fft_phase(x);
  CHECK(p.maxCoeff() <= pi + 1e-12);
  CHECK(p.minCoeff() > -pi - 1e-12);
}

TEST_CASE("zero-size input is rejected") {
  Eigen::MatrixXd empty(0, 0);
  CHECK_THROWS_AS(dct2d(empty), ConfigError);
  CHECK_THROWS_AS(idct2d(empty), ConfigError);
  CHECK_THROWS_AS(fft_phase(empty), ConfigError);
}
