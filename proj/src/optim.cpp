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

#include "dumbench/optim.hpp"

#include <cmath>

namespace dumbench {

OptimizerState make_optimizer(OptimizerKind kind, double lr) {
  if (lr <= 0.0) throw ConfigError("optimizer: learning rate must be > 0");
  OptimizerState s;
  s.kind = kind;
  s.lr = lr;
  return s;
}

void optimizer_step(OptimizerState& state, std::vector<Tensor*>& params,
                    const std::vector<Array>& grads) {
  if (state.lr <= 0.0) throw ConfigError("optimizer: learning rate must be > 0");
  if (params.size() != grads.size())
    throw ConfigError("optimizer_step: parameter/gradient count mismatch");
  if (state.kind == OptimizerKind::Adam && state.m.empty()) {
    state.m.resize(params.size());
    state.v.resize(params.size());
    for (size_t i = 0; i < params.size(); ++i) {
      state.m[i] = Array::Zero(params[i]->size());
      state.v[i] = Array::Zero(params[i]->size());
    }
  }
  ++state.step_count;
  for (size_t i = 0; i < params.size(); ++i) {
    if (grads[i].size() != params[i]->size())
      throw ConfigError("optimizer_step: gradient shape mismatch");
    if (state.kind == OptimizerKind::Sgd) {
      params[i]->data -= state.lr * grads[i];
      continue;
    }
    if (state.m[i].size() != params[i]->size())
      throw ConfigError("optimizer_step: moment accumulator shape mismatch");
    state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * grads[i];
    state.v[i] =
        state.beta2 * state.v[i] + (1.0 - state.beta2) * grads[i].square();
    double c1 = 1.0 - std::pow(state.beta1, double(state.step_count));
    double c2 = 1.0 - std::pow(state.beta2, double(state.step_count));
    params[i]->data -= state.lr * (state.m[i] / c1) /
                       ((state.v[i] / c2).sqrt() + state.eps);
  }
}

}  // namespace dumbench
