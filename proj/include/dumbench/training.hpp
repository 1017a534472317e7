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

#include "dumbench/attacks.hpp"

namespace dumbench {

/// One of the twelve canonical training regimes: nominal (Base) plus eleven
/// adversarial-training strategies differing in attack set and surrogate
/// scope. Dual strategies feed the leave-one-out table only.
struct ATStrategy {
  std::string id;
  std::vector<AttackKind> attacks;  // empty for Base
  bool all_surrogates = false;      // false: self-architecture surrogate only
  bool is_dual = false;
  double mix = 0.20;                // adversarial share of the training set
};

const std::vector<ATStrategy>& all_strategies();
const ATStrategy& strategy_by_id(const std::string& id);

/// The attack a dual strategy holds out (the one it was not trained on).
AttackKind held_out_attack(const ATStrategy& dual);

struct TrainConfig {
  int epochs = 30;
  int batch_size = 32;
  double lr = 1e-3;      // Adam
  int patience = 5;      // early stop on validation AUC
  uint64_t seed = 1;
  bool augment_flip = true;
  // Caps the optimal logit near log((1-s)/s) so confidently classified
  // samples keep usable input gradients instead of saturating.
  double label_smoothing = 0.02;
  double min_val_auc = 0.55;  // below this the detector "failed to learn"
};

struct TrainLogEntry {
  int epoch = 0;
  double loss = 0;
  double val_auc = 0;
};

struct TrainResult {
  DetectorModel model;
  std::vector<TrainLogEntry> log;
  double best_val_auc = 0;
};

/// From-scratch training on clean data; keeps the best-validation-AUC
/// parameters. Throws CheckError if the final model failed to learn.
TrainResult train_nominal(Arch arch, const LabeledBatch& train,
                          const LabeledBatch& val, const TrainConfig& cfg);

/// Splits `total` samples across `ncells` source cells as evenly as possible:
/// floor(total/ncells) each, the trailing remainder cells getting one extra.
std::vector<int> divide_cells(int total, int ncells);

/// 80% clean / 20% adversarial mix, the adversarial share divided equally
/// (max spread 1 sample) across the strategy's attack x surrogate cells.
/// Every adversarial sample's clean original stays in the clean portion.
LabeledBatch build_at_trainset(const ATStrategy& strategy, Arch trainee,
                               const LabeledBatch& clean_train,
                               const std::vector<DetectorModel>& nominal_surrogates,
                               const std::map<AttackKind, AttackSpec>& attack_specs,
                               uint64_t seed);

/// Fresh model (independent seed stream) trained on the mixed set. Base
/// reduces to train_nominal.
TrainResult adversarial_train(const ATStrategy& strategy, Arch arch,
                              const LabeledBatch& clean_train,
                              const LabeledBatch& val,
                              const std::vector<DetectorModel>& nominal_surrogates,
                              const std::map<AttackKind, AttackSpec>& attack_specs,
                              const TrainConfig& cfg);

}  // namespace dumbench
