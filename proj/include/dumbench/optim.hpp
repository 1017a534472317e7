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

#include <vector>

#include "dumbench/tensor.hpp"

namespace dumbench {

enum class OptimizerKind { Sgd, Adam };

/// Per-parameter optimizer state. Moment buffers are allocated lazily on the
/// first step and must keep matching the parameter shapes afterwards.
struct OptimizerState {
  OptimizerKind kind = OptimizerKind::Adam;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  long step_count = 0;
  std::vector<Array> m;
  std::vector<Array> v;
};

OptimizerState make_optimizer(OptimizerKind kind, double lr);

/// One update over a parameter set. SGD: p -= lr*g. Adam: bias-corrected
/// first/second moment rule.
void optimizer_step(OptimizerState& state, std::vector<Tensor*>& params,
                    const std::vector<Array>& grads);

}  // namespace dumbench
