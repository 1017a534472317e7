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

#include <map>
#include <random>

#include "dumbench/detectors.hpp"

namespace dumbench {

enum class AttackKind { Fgsm, Pgd, Fpba };

std::string attack_name(AttackKind k);
AttackKind parse_attack(const std::string& name);

struct AttackSpec {
  AttackKind kind = AttackKind::Pgd;
  double epsilon = 9.0 / 255.0;
  double alpha = 2.0 / 255.0;  // PGD step size; fine steps settle interior
                               // optima that coarse sign steps oscillate past
  int steps = 10;              // PGD/FPBA iterations
  bool random_start = true;    // PGD only
  int K = 3;                   // FPBA appended models
  int N = 5;                   // FPBA spectrum transforms per step
  double posterior_lr = 0.001;
  double sigma_xi = 0.01;      // spectrum-transform pixel noise
  double rho = 0.25;           // spectrum-transform mask half-width
  double sigma_theta = 0.005;  // appended-model parameter noise
  uint64_t seed = 0;

  void validate() const;
};

/// Perturbed images paired with their originals plus everything needed to
/// evaluate and audit them later.
struct AdversarialSet {
  Tensor images;
  Tensor originals;
  std::vector<double> labels;
  std::vector<int> methods;
  std::vector<int> identities;
  std::string dataset;
  std::string surrogate_arch = "-";
  Provenance surrogate_provenance;
  AttackSpec spec;
  int warnings = 0;  // samples passed through on non-finite gradients

  int size() const { return int(labels.size()); }
};

AdversarialSet fgsm(const DetectorModel& surrogate, const LabeledBatch& batch,
                    const AttackSpec& spec);
AdversarialSet pgd(const DetectorModel& surrogate, const LabeledBatch& batch,
                   const AttackSpec& spec);

/// Randomized frequency-domain rescaling applied channelwise:
/// idct2d( dct2d(x + xi) .* M ), xi ~ N(0, sigma_xi), M ~ U[1-rho, 1+rho].
/// Not budget-clipped; it feeds gradient estimation only.
Tensor spectrum_transform(const Tensor& images, double sigma_xi, double rho,
                          std::mt19937_64& rng);

/// K parameter-space variants of the surrogate: one SGD step (posterior_lr)
/// on a seeded mini-batch of `trainset`, plus Gaussian noise sigma_theta.
/// The surrogate itself is never mutated.
std::vector<DetectorModel> sample_appended_models(const DetectorModel& surrogate,
                                                  const LabeledBatch& trainset,
                                                  const AttackSpec& spec);

AdversarialSet fpba(const DetectorModel& surrogate, const LabeledBatch& trainset,
                    const LabeledBatch& batch, const AttackSpec& spec);

AdversarialSet craft(const DetectorModel& surrogate, const LabeledBatch& trainset,
                     const LabeledBatch& batch, const AttackSpec& spec);

/// One evaluation suite: a clean test partition or one adversarial set.
struct TestSuite {
  std::string id;         // e.g. "D1/PGD/xcept-mu" or "D1/clean"
  std::string dataset;
  std::string attack;     // "clean" or an attack name
  std::string surrogate;  // "-" for clean suites
  AdversarialSet set;     // clean suites keep images == originals
};

/// Per dataset: 1 clean suite + |attacks| x |surrogates| adversarial suites.
/// Surrogates must be nominal (strategy "Base") models.
std::vector<TestSuite> craft_test_suites(
    const std::vector<DetectorModel>& nominal_models,
    const std::vector<AttackSpec>& attacks,
    const std::map<std::string, LabeledBatch>& test_batches,
    const std::map<std::string, LabeledBatch>& train_batches, uint64_t seed);

/// Validates the linf budget and [0,1] range over every pair; throws
/// CheckError naming the first offending sample. Returns the max deviation.
double budget_check(const AdversarialSet& set);

void save_adversarial_set(const fs::path& dir, const AdversarialSet& set);
AdversarialSet load_adversarial_set(const fs::path& dir);

}  // namespace dumbench
