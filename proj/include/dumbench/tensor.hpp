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

#include <Eigen/Dense>
#include <numeric>
#include <optional>
#include <vector>

#include "dumbench/common.hpp"

namespace dumbench {

using Array = Eigen::ArrayXd;

/// Dense n-dimensional array with an optional gradient slot. Image batches
/// use NCHW layout; the flat index of (n,c,i,j) is ((n*C+c)*H+i)*W+j.
struct Tensor {
  std::vector<int> shape;
  Array data;
  std::optional<Array> grad;

  Tensor() = default;
  Tensor(std::vector<int> s, Array d) : shape(std::move(s)), data(std::move(d)) {
    if (data.size() != numel(shape))
      throw ConfigError(concat("tensor data length ", data.size(),
                               " does not match shape product ", numel(shape)));
  }

  static Eigen::Index numel(const std::vector<int>& s) {
    Eigen::Index n = 1;
    for (int d : s) {
      if (d <= 0) throw ConfigError("tensor dimensions must be positive");
      n *= d;
    }
    return n;
  }

  static Tensor zeros(std::vector<int> s) {
    Eigen::Index n = numel(s);
    return Tensor(std::move(s), Array::Zero(n));
  }

  Eigen::Index size() const { return data.size(); }
  int dim(size_t i) const { return shape.at(i); }

  void set_grad(Array g) {
    if (g.size() != data.size())
      throw ConfigError("gradient shape does not match tensor shape");
    grad = std::move(g);
  }
};

inline bool same_shape(const std::vector<int>& a, const std::vector<int>& b) {
  return a == b;
}

}  // namespace dumbench
