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

#include <optional>

#include "dumbench/training.hpp"

namespace dumbench {

/// Attacker/defender mismatch cases: C1 same dataset & model, C3 cross-model,
/// C5 cross-dataset, C7 cross-dataset & cross-model.
enum class DumbCase { C1, C3, C5, C7 };

constexpr std::array<DumbCase, 4> kAllCases = {DumbCase::C1, DumbCase::C3,
                                               DumbCase::C5, DumbCase::C7};

std::string case_name(DumbCase c);
/// "D1" for C1/C3, "D2" for C5/C7.
std::string case_dataset(DumbCase c);
/// Whether the case pairs each target with its own architecture as surrogate.
bool case_same_arch(DumbCase c);

struct EvalRecord {
  std::string target_arch;
  std::string target_strategy;
  std::string surrogate_arch;  // "-" for clean suites
  std::string attack;          // "clean" or attack name
  std::string dataset;
  int n_success = 0;  // misclassified after attack; correct count for clean
  int n_total = 0;
};

struct EvalFlags {
  /// When set, only samples the target classifies correctly pre-attack count
  /// toward n_total (and n_success).
  bool only_originally_correct = false;
};

/// Threshold 0.5 on sigmoid scores; adversarial suites count misclassified
/// samples, clean suites count correct ones.
EvalRecord count_successes(const DetectorModel& target, const TestSuite& suite,
                           const EvalFlags& flags = {});

/// The architecture/attack grid a case is expected to cover.
struct CaseGrid {
  std::vector<std::string> archs;
  std::vector<std::string> attacks;
};

/// Unweighted mean of per-cell success fractions over the case's
/// (model, attack[, surrogate]) cells, as a percentage. Records must cover
/// the grid exactly once per cell; a missing cell raises ConfigError naming
/// it. Pass a single-attack grid for per-attack slices.
double asr_case(const std::vector<EvalRecord>& records, DumbCase c,
                const CaseGrid& grid);

/// Mitigation rate in percent: (asr_orig - asr_at)/asr_orig * 100.
/// asr_orig = 0 is undefined and yields nullopt (never silently 0).
std::optional<double> amr(double asr_orig, double asr_at);

/// Nominal reference ASRs used as the AMR denominator.
struct BaselineTable {
  /// per attack name, per case
  std::map<std::string, std::map<DumbCase, double>> per_attack;
  /// all-attack mean per case (the Base row)
  std::map<DumbCase, double> base_mean;
};

/// Attack-matched baseline for single-attack strategies (including _surr),
/// all-attack Base mean for multi-attack strategies and aggregates.
double baseline_for(const std::string& strategy, DumbCase c,
                    const BaselineTable& table);

/// Mann-Whitney rank AUC with ties counted half. Requires both classes.
double auc(const std::vector<double>& scores, const std::vector<double>& labels);

struct AsrAmr {
  double asr = 0;
  std::optional<double> amr;
};

struct DumbReport {
  /// nominal per-attack ASR: attack -> case
  std::map<std::string, std::map<DumbCase, double>> nominal_asr;
  /// clean AUC and accuracy: strategy -> dataset
  std::map<std::string, std::map<std::string, double>> clean_auc;
  std::map<std::string, std::map<std::string, double>> clean_acc;
  /// strategy rows (non-dual, plus the Surr aggregate): strategy -> case
  std::map<std::string, std::map<DumbCase, AsrAmr>> strategy_table;
  /// leave-one-out: dual strategy -> case, ASR against the held-out attack
  std::map<std::string, std::map<DumbCase, double>> leave_one_out;
  /// per-cell C1 grids: strategy -> attack -> target arch
  std::map<std::string, std::map<std::string, std::map<std::string, double>>>
      percell_c1;
  std::vector<EvalRecord> records;
};

/// Evaluates every (target, suite) pair once and aggregates all table shapes.
/// `targets` hold their strategy in provenance; all are D1-trained.
DumbReport run_matrix(const std::vector<DetectorModel>& targets,
                      const std::vector<TestSuite>& suites,
                      const std::vector<std::string>& strategies,
                      const CaseGrid& grid, const EvalFlags& flags = {});

}  // namespace dumbench
