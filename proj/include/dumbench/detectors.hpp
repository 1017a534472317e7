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

#include <string>
#include <vector>

#include "dumbench/graph.hpp"
#include "dumbench/io.hpp"
#include "dumbench/synthdata.hpp"

namespace dumbench {

/// The five micro-detector families: spatial (xcept), frequency/phase (spsl),
/// high-pass residual (srm), reconstruction-regularized (recce) and
/// disentangling multi-task (ucf).
enum class Arch { Xcept, Spsl, Srm, Recce, Ucf };

constexpr std::array<Arch, 5> kAllArchs = {Arch::Xcept, Arch::Spsl, Arch::Srm,
                                           Arch::Recce, Arch::Ucf};

std::string arch_name(Arch a);
Arch parse_arch(const std::string& name);

struct Provenance {
  std::string dataset = "-";
  std::string strategy = "-";
  uint64_t seed = 0;
};

struct NamedParam {
  std::string name;
  Tensor value;
};

/// Auxiliary loss coefficients; zeroing them reduces every architecture's
/// loss to plain BCE.
struct LossCoeffs {
  double rec = 0.1;
  // The method head regularizes; a larger weight lets the 6-way CE
  // gradient dominate the shared trunk and stall the binary task.
  double mt = 0.002;
  double con = 0.01;
};

struct DetectorModel {
  Arch arch = Arch::Xcept;
  std::vector<NamedParam> params;
  Provenance provenance;
  LossCoeffs coeffs;
};

/// Fresh model with fan-in-scaled uniform initialization; identical seeds
/// give identical parameters.
DetectorModel build(Arch arch, uint64_t seed);

/// Graph handles for one forward evaluation.
struct GraphOutputs {
  int logits = -1;
  int recon = -1;
  int method_logits = -1;
  int embedding = -1;
  std::vector<int> param_ids;
};

/// Builds the architecture's graph on `tape` starting from input node `x`.
GraphOutputs build_graph(Tape& tape, const DetectorModel& model, int x);

/// The fixed zero-sum high-pass kernels of the SRM residual stream,
/// shaped [3,1,3,3] for a conv over the channel-mean image.
Tensor srm_filter_bank();

struct ForwardResult {
  Array logits;          // [N]
  Array recon;           // recce only
  Array method_logits;   // ucf only, [N*6]
};

ForwardResult forward(const DetectorModel& model, const Tensor& images);

struct LossBreakdown {
  double total = 0, bce = 0, rec = 0, mt = 0, con = 0;
};

LossBreakdown detector_loss(const DetectorModel& model, const LabeledBatch& batch);

/// d(loss)/d(images), same shape as batch.images.
Tensor input_gradient(const DetectorModel& model, const LabeledBatch& batch);

/// Gradients aligned with model.params.
std::vector<Array> parameter_gradient(const DetectorModel& model,
                                      const LabeledBatch& batch);

/// One combined pass for training: loss breakdown plus parameter gradients.
LossBreakdown loss_and_param_grads(const DetectorModel& model,
                                   const LabeledBatch& batch,
                                   std::vector<Array>& grads);

/// Sigmoid fake-probabilities in (0,1).
std::vector<double> predict_scores(const DetectorModel& model,
                                   const Tensor& images);

void save_checkpoint(const fs::path& path, const DetectorModel& model);
DetectorModel load_checkpoint(const fs::path& path);

/// Central finite-difference check (step h) of input and parameter
/// gradients over every coordinate. Returns the max relative error, with
/// denominator floor 1e-4.
struct GradCheckResult {
  double input_err = 0;
  double param_err = 0;
};
GradCheckResult gradient_check(const DetectorModel& model,
                               const LabeledBatch& batch, double h = 1e-4);

}  // namespace dumbench
