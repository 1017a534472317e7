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
#include <functional>

#include "dumbench/graph.hpp"
#include "testutil.hpp"

using namespace dumbench;
using dumbench::test::random_tensor;

namespace {

using Builder = std::function<int(Tape&, int)>;

// Central finite-difference oracle for d(root)/d(x), every coordinate.
double max_fd_error(const Builder& build, const Tensor& x0, double h = 1e-5) {
  Tape tape;
  int x = tape.input(x0);
  int root = build(tape, x);
  tape.backward(root);
  Array analytic = tape.grad(x);

  double worst = 0.0;
  Tensor probe = x0;
  for (Eigen::Index i = 0; i < probe.size(); ++i) {
    double orig = probe.data(i);
    auto eval = [&](double v) {
      probe.data(i) = v;
      Tape t;
      int xx = t.input(probe);
      return t.val(build(t, xx))(0);
    };
    double fd = (eval(orig + h) - eval(orig - h)) / (2 * h);
    probe.data(i) = orig;
    double err = std::abs(analytic(i) - fd) /
                 std::max({1e-4, std::abs(analytic(i)), std::abs(fd)});
    worst = std::max(worst, err);
  }
  return worst;
}

// Reduce any output to a scalar whose gradient touches every output
// coordinate: squared error against a fixed random target.
int weighted_total(Tape& tape, int y) {
  Eigen::Index n = tape.val(y).size();
  Tensor target = random_tensor({int(n)}, 999, -1.0, 1.0);
  std::vector<char> mask(size_t(tape.shape(y)[0]), 1);
  return tape.recon_l2(y, target.data, mask);
}

}  // namespace

TEST_CASE("zero-weight dense model yields all-zero logits") {
  Tape tape;
  int x = tape.input(random_tensor({4, 6}, 1));
  int w = tape.input(Tensor::zeros({1, 6}));
  int b = tape.input(Tensor::zeros({1}));
  int out = tape.dense(x, w, b);
  CHECK(tape.val(out).abs().maxCoeff() == 0.0);
}

TEST_CASE("identity 1x1 conv reproduces its input") {
  Tensor x = random_tensor({2, 1, 5, 5}, 2);
  Tape tape;
  Tensor w = Tensor::zeros({1, 1, 1, 1});
  w.data(0) = 1.0;
  int out = tape.conv2d(tape.input(x), tape.input(w), tape.input(Tensor::zeros({1})));
  CHECK((tape.val(out) - x.data).abs().maxCoeff() == 0.0);
}

TEST_CASE("two-pixel dense model matches hand arithmetic") {
  // logits = 0.5*x0 - 0.25*x1 + 0.1
  Tensor x({1, 2}, (Array(2) << 0.8, 0.4).finished());
  Tensor w({1, 2}, (Array(2) << 0.5, -0.25).finished());
  Tensor b({1}, Array::Constant(1, 0.1));
  Tape tape;
  int out = tape.dense(tape.input(x), tape.input(w), tape.input(b));
  CHECK(tape.val(out)(0) == doctest::Approx(0.5 * 0.8 - 0.25 * 0.4 + 0.1).epsilon(1e-15));
}

TEST_CASE("forward is pure: repeated evaluation is bit-identical") {
  Tensor x = random_tensor({2, 3, 8, 8}, 3);
  Tensor w = random_tensor({4, 3, 3, 3}, 4, -0.3, 0.3);
  Tensor b = random_tensor({4}, 5, -0.1, 0.1);
  auto run = [&]() {
    Tape tape;
    return Array(tape.val(tape.relu(
        tape.conv2d(tape.input(x), tape.input(w), tape.input(b)))));
  };
  Array a = run(), bb = run();
  CHECK((a == bb).all());
}

TEST_CASE("bce_with_logits analytic values") {
  Tape tape;
  SUBCASE("confident correct predictions give ~0") {
    Tensor z({3}, (Array(3) << 30.0, -30.0, 30.0).finished());
    int l = tape.bce_with_logits(tape.input(z), {1.0, 0.0, 1.0});
    CHECK(tape.val(l)(0) < 1e-12);
  }
  SUBCASE("logit 0 gives ln 2 per sample") {
    Tensor z = Tensor::zeros({4});
    int l = tape.bce_with_logits(tape.input(z), {1.0, 0.0, 1.0, 0.0});
    CHECK(tape.val(l)(0) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  }
  SUBCASE("three-sample hand case") {
    Tensor z({3}, (Array(3) << 1.2, -0.7, 0.3).finished());
    std::vector<double> y{1.0, 0.0, 1.0};
    double expect = 0.0;
    for (int i = 0; i < 3; ++i) {
      double p = 1.0 / (1.0 + std::exp(-z.data(i)));
      expect += -(y[i] * std::log(p) + (1 - y[i]) * std::log(1 - p));
    }
    int l = tape.bce_with_logits(tape.input(z), y);
    CHECK(tape.val(l)(0) == doctest::Approx(expect / 3.0).epsilon(1e-12));
  }
}

TEST_CASE("finite differences agree for every layer kind") {
  const double tol = 1e-4;

  SUBCASE("conv2d stride 1") {
    Tensor x = random_tensor({2, 2, 6, 6}, 10);
    Tensor w = random_tensor({3, 2, 3, 3}, 11, -0.5, 0.5);
    Tensor b = random_tensor({3}, 12, -0.1, 0.1);
    CHECK(max_fd_error([&](Tape& t, int xx) {
            return weighted_total(t, t.conv2d(xx, t.input(w), t.input(b)));
          }, x) < tol);
  }
  SUBCASE("conv2d stride 2") {
    Tensor x = random_tensor({1, 2, 8, 8}, 13);
    Tensor w = random_tensor({2, 2, 3, 3}, 14, -0.5, 0.5);
    Tensor b = random_tensor({2}, 15, -0.1, 0.1);
    CHECK(max_fd_error([&](Tape& t, int xx) {
            return weighted_total(t, t.conv2d(xx, t.input(w), t.input(b), 2));
          }, x) < tol);
  }
  SUBCASE("depthwise conv") {
    Tensor x = random_tensor({2, 3, 6, 6}, 16);
    Tensor w = random_tensor({3, 3, 3}, 17, -0.5, 0.5);
    Tensor b = random_tensor({3}, 18, -0.1, 0.1);
    CHECK(max_fd_error([&](Tape& t, int xx) {
            return weighted_total(t, t.depthwise_conv2d(xx, t.input(w), t.input(b)));
          }, x) < tol);
  }
  SUBCASE("dense + relu") {
    Tensor x = random_tensor({3, 5}, 19, -1.0, 1.0);
    Tensor w = random_tensor({4, 5}, 20, -0.5, 0.5);
    Tensor b = random_tensor({4}, 21, -0.1, 0.1);
    CHECK(max_fd_error([&](Tape& t, int xx) {
            return weighted_total(t, t.relu(t.dense(xx, t.input(w), t.input(b))));
          }, x) < tol);
  }
  SUBCASE("softrelu") {
    Tensor x = random_tensor({3, 6}, 28, -1.0, 1.0);
    CHECK(max_fd_error([&](Tape& t, int xx) {
            return weighted_total(t, t.softrelu(xx));
          }, x) < tol);
  }
  SUBCASE("square") {
    Tensor x = random_tensor({2, 3, 4, 4}, 29, -1.0, 1.0);
    CHECK(max_fd_error([&](Tape& t, int xx) {
            return weighted_total(t, t.square(xx));
          }, x) < tol);
    Tape t;
    Tensor two = Tensor::zeros({2});
    two.data << 3.0, -2.0;
    int xx = t.input(two);
    int sq = t.square(xx);
    CHECK(t.val(sq)(0) == doctest::Approx(9.0));
    CHECK(t.val(sq)(1) == doctest::Approx(4.0));
  }
  SUBCASE("sub") {
    Tensor a = random_tensor({2, 3, 4, 4}, 34, -1.0, 1.0);
    Tensor b = random_tensor({2, 3, 4, 4}, 35, -1.0, 1.0);
    CHECK(max_fd_error([&](Tape& t, int xx) {
            return weighted_total(t, t.sub(xx, t.input(b)));
          }, a) < tol);
    CHECK(max_fd_error([&](Tape& t, int xx) {
            return weighted_total(t, t.sub(t.input(a), xx));
          }, b) < tol);
    Tape t;
    int d = t.sub(t.input(a), t.input(b));
    CHECK((t.val(d) - (a.data - b.data)).abs().maxCoeff() == 0.0);
  }
  SUBCASE("concat_features") {
    Tensor a = random_tensor({3, 4}, 36, -1.0, 1.0);
    Tensor b = random_tensor({3, 2}, 37, -1.0, 1.0);
    CHECK(max_fd_error([&](Tape& t, int xx) {
            return weighted_total(t, t.concat_features(xx, t.input(b)));
          }, a) < tol);
    CHECK(max_fd_error([&](Tape& t, int xx) {
            return weighted_total(t, t.concat_features(t.input(a), xx));
          }, b) < tol);
    Tape t;
    int cat = t.concat_features(t.input(a), t.input(b));
    CHECK(t.shape(cat) == std::vector<int>{3, 6});
    CHECK(t.val(cat)(4) == b.data(0));   // row 0: a features then b features
    CHECK(t.val(cat)(6) == a.data(4));   // row 1 starts with a again
  }
  SUBCASE("global average pool") {
    Tensor x = random_tensor({2, 3, 4, 4}, 22);
    CHECK(max_fd_error([&](Tape& t, int xx) {
            return weighted_total(t, t.global_avg_pool(xx));
          }, x) < tol);
  }
  SUBCASE("upsample + mean_channels + concat") {
    Tensor x = random_tensor({2, 2, 4, 4}, 23);
    CHECK(max_fd_error([&](Tape& t, int xx) {
            int up = t.upsample_nearest2(xx);
            int mc = t.mean_channels(up);
            return weighted_total(t, t.concat_channels(up, mc));
          }, x) < tol);
  }
  SUBCASE("fft phase channel") {
    Tensor x = random_tensor({2, 3, 8, 8}, 24);
    CHECK(max_fd_error([&](Tape& t, int xx) {
            return weighted_total(t, t.fft_phase_channel(xx));
          }, x) < tol);
  }
  SUBCASE("softmax cross entropy") {
    Tensor x = random_tensor({3, 4}, 25, -1.0, 1.0);
    CHECK(max_fd_error([&](Tape& t, int xx) {
            return t.softmax_cross_entropy(xx, {0, 2, 3});
          }, x) < tol);
  }
  SUBCASE("contrastive pull") {
    Tensor x = random_tensor({4, 3}, 26, -1.0, 1.0);
    CHECK(max_fd_error([&](Tape& t, int xx) {
            return t.contrastive_pull(xx, {0, 1, 0, 1});
          }, x) < tol);
  }
  SUBCASE("conv2d weight and bias gradients") {
    Tensor x = random_tensor({2, 2, 5, 5}, 40);
    Tensor w = random_tensor({3, 2, 3, 3}, 41, -0.5, 0.5);
    Tensor b = random_tensor({3}, 42, -0.1, 0.1);
    CHECK(max_fd_error([&](Tape& t, int ww) {
            return weighted_total(t, t.conv2d(t.input(x), ww, t.input(b)));
          }, w) < tol);
    CHECK(max_fd_error([&](Tape& t, int bb) {
            return weighted_total(t, t.conv2d(t.input(x), t.input(w), bb));
          }, b) < tol);
  }
  SUBCASE("depthwise weight and bias gradients") {
    Tensor x = random_tensor({2, 3, 5, 5}, 43);
    Tensor w = random_tensor({3, 3, 3}, 44, -0.5, 0.5);
    Tensor b = random_tensor({3}, 45, -0.1, 0.1);
    CHECK(max_fd_error([&](Tape& t, int ww) {
            return weighted_total(t, t.depthwise_conv2d(t.input(x), ww, t.input(b)));
          }, w) < tol);
    CHECK(max_fd_error([&](Tape& t, int bb) {
            return weighted_total(t, t.depthwise_conv2d(t.input(x), t.input(w), bb));
          }, b) < tol);
  }
  SUBCASE("dense weight and bias gradients") {
    Tensor x = random_tensor({3, 5}, 46, -1.0, 1.0);
    Tensor w = random_tensor({4, 5}, 47, -0.5, 0.5);
    Tensor b = random_tensor({4}, 48, -0.1, 0.1);
    CHECK(max_fd_error([&](Tape& t, int ww) {
            return weighted_total(t, t.dense(t.input(x), ww, t.input(b)));
          }, w) < tol);
    CHECK(max_fd_error([&](Tape& t, int bb) {
            return weighted_total(t, t.dense(t.input(x), t.input(w), bb));
          }, b) < tol);
  }
  SUBCASE("recon_l2 with a node target moves gradient into both sides") {
    Tensor xhat = random_tensor({2, 6}, 49, -1.0, 1.0);
    Tensor tgt = random_tensor({2, 6}, 50, -1.0, 1.0);
    std::vector<char> mask{1, 0};
    CHECK(max_fd_error([&](Tape& t, int xx) {
            return t.recon_l2(xx, t.input(tgt), mask);
          }, xhat) < tol);
    CHECK(max_fd_error([&](Tape& t, int tt) {
            return t.recon_l2(t.input(xhat), tt, mask);
          }, tgt) < tol);
  }
  SUBCASE("bce with logits") {
    Tensor x = random_tensor({5}, 27, -2.0, 2.0);
    CHECK(max_fd_error([&](Tape& t, int xx) {
            return t.bce_with_logits(xx, {1, 0, 1, 1, 0});
          }, x) < tol);
  }
}

TEST_CASE("shape mismatches are rejected with descriptive errors") {
  Tape tape;
  int x = tape.input(random_tensor({1, 3, 4, 4}, 30));
  int w = tape.input(random_tensor({2, 4, 3, 3}, 31));
  int b = tape.input(Tensor::zeros({2}));
  CHECK_THROWS_WITH_AS(tape.conv2d(x, w, b),
                       doctest::Contains("channels"), ConfigError);
  int x2 = tape.input(random_tensor({2, 5}, 32));
  int w2 = tape.input(random_tensor({3, 4}, 33));
  CHECK_THROWS_AS(tape.dense(x2, w2, b), ConfigError);
}
