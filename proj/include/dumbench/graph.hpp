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

#pragma once

#include <functional>
#include <vector>

#include "dumbench/tensor.hpp"

namespace dumbench {

/// Reverse-mode tape. One tape per forward/backward evaluation; nodes are
/// created in topological order, so backward() is a reverse sweep over the
/// creation order. A tape is single-use and not thread-safe; distinct
/// evaluations each build their own tape and may run concurrently.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Registers a leaf holding a copy of `t` (parameter or input).
  int input(const Tensor& t);

  const std::vector<int>& shape(int id) const { return nodes_[id].shape; }
  const Array& val(int id) const { return nodes_[id].val; }
  const Array& grad(int id) const { return nodes_[id].grad; }

  /// Seeds d(root)/d(root) = 1 and propagates to every node. `root` must be
  /// a scalar node.
  void backward(int root);

  // Layer ops. Image nodes are NCHW; conv weights are [outC,inC,k,k] with
  // odd k and "same" zero padding.
  int conv2d(int x, int w, int b, int stride = 1);
  int depthwise_conv2d(int x, int w, int b);  // w: [C,k,k]
  int dense(int x, int w, int b);             // x: [N,F], w: [O,F]
  int relu(int x);
  /// Smooth rectifier (softplus, sharpness 10); preferred inside detectors
  /// so gradient checks are exact everywhere.
  int softrelu(int x);
  /// Elementwise x^2; lets heads pool feature energy, which carries the
  /// texture statistics a plain channel mean discards.
  int square(int x);
  /// Elementwise a - b; shapes must match.
  int sub(int a, int b);
  int concat_channels(int a, int b);
  /// Concatenates two [N,F] feature matrices along the feature dim.
  int concat_features(int a, int b);
  int global_avg_pool(int x);   // [N,C,H,W] -> [N,C]
  int upsample_nearest2(int x); // [N,C,H,W] -> [N,C,2H,2W]
  int mean_channels(int x);     // [N,C,H,W] -> [N,1,H,W]
  /// Phase-angle channel of the channel-mean image's 2-D DFT.
  int fft_phase_channel(int x); // [N,C,H,W] -> [N,1,H,W]

  // Loss ops; each returns a scalar node (mean over the batch).
  int bce_with_logits(int logits, const std::vector<double>& labels);
  int softmax_cross_entropy(int logits, const std::vector<int>& labels);
  /// Mean per-pixel squared error against `target`, averaged over the
  /// samples selected by `mask`; zero when the mask is empty.
  int recon_l2(int xhat, const Array& target, const std::vector<char>& mask);
  /// As above but with the target as a graph node, so gradients flow into
  /// both arguments (used when the target is the model input itself).
  int recon_l2(int xhat, int target, const std::vector<char>& mask);
  /// Mean squared distance between same-label embedding pairs.
  int contrastive_pull(int emb, const std::vector<int>& labels);
  int weighted_sum(const std::vector<int>& terms, const std::vector<double>& coeffs);

 private:
  struct Node {
    std::vector<int> shape;
    Array val;
    Array grad;
    std::function<void()> back;
  };
  std::vector<Node> nodes_;

  int add(std::vector<int> shape, Array val);
  Array& grad_mut(int id) { return nodes_[id].grad; }
  void check_image(int x, const char* op) const;
};

}  // namespace dumbench
