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

#include "dumbench/eval.hpp"

namespace dumbench {

/// Self-contained description of one benchmark run. Every knob any stage
/// consumes lives here; a stored manifest re-runs identically.
struct ExperimentManifest {
  std::string preset = "desk";  // desk | paper-shape | custom
  uint64_t seed = 1;
  std::string out_dir = "runs/desk";
  int workers = 1;

  DatasetSpec d1;
  DatasetSpec d2;
  std::array<double, 3> split_ratios = {0.7, 0.1, 0.2};

  std::vector<std::string> archs;
  std::vector<AttackSpec> attacks;
  std::vector<std::string> strategies;
  TrainConfig train;

  EvalFlags eval_flags;
  /// AMR denominator rule: "matched" pairs single-attack strategies with the
  /// same attack's nominal ASR; "base-mean" always uses the all-attack mean.
  std::string amr_rule = "matched";
  bool emit_plots = true;

  void validate() const;
};

/// Built-in scale presets. "desk" is the small grid sized for a laptop run;
/// "paper-shape" enumerates the full 5-architecture protocol grid.
ExperimentManifest make_preset(const std::string& name);

/// Sets the global seed and re-derives the dataset and training seeds.
void apply_seed_override(ExperimentManifest& m, uint64_t seed);

std::string manifest_to_json(const ExperimentManifest& m);
ExperimentManifest manifest_from_json(const std::string& text);
void save_manifest(const fs::path& path, const ExperimentManifest& m);
ExperimentManifest load_manifest(const fs::path& path);

/// Stable content hash of the canonical JSON form.
uint64_t manifest_hash(const ExperimentManifest& m);

/// Protocol sizes: per dataset 1 clean suite + |attacks| x |archs|
/// adversarial suites; one model per (arch, strategy); cells = models x suites.
int count_suites(const ExperimentManifest& m);
int count_models(const ExperimentManifest& m);
int count_cells(const ExperimentManifest& m);

}  // namespace dumbench
