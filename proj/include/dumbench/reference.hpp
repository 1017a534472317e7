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

#include <array>

namespace dumbench::ref {

/// Frozen reference aggregates for the metric-layer consistency gate
/// (`dumbench verify` and the acceptance suite). Values are percentages,
/// ordered C1, C3, C5, C7 unless noted otherwise.

struct AttackRow {
  const char* attack;
  std::array<double, 4> asr;
};

/// Nominal (no adversarial training) ASR per attack per case.
inline constexpr std::array<AttackRow, 3> kRefNominalAsr = {{
    {"PGD", {99.6, 89.8, 65.1, 66.7}},
    {"FGSM", {71.7, 56.5, 48.4, 49.2}},
    {"FPBA", {85.8, 59.9, 45.5, 51.5}},
}};

struct StrategyRow {
  const char* strategy;
  std::array<double, 4> asr;
  std::array<double, 4> amr;  // ignored when has_amr is false
  bool has_amr;
};

/// Strategy-level ASR/AMR aggregates. The Base row carries no AMR.
inline constexpr std::array<StrategyRow, 10> kRefStrategyRows = {{
    {"Base", {85.7, 68.7, 53.0, 55.8}, {0, 0, 0, 0}, false},
    {"PGD", {20.2, 34.2, 58.4, 59.9}, {79.7, 61.9, 10.3, 10.2}, true},
    {"PGD_surr", {16.1, 14.4, 55.7, 54.1}, {83.8, 83.9, 14.4, 18.9}, true},
    {"FGSM", {31.5, 37.1, 66.1, 66.0}, {56.1, 34.3, -36.6, -34.1}, true},
    {"FGSM_surr", {31.0, 25.1, 58.8, 55.7}, {56.8, 55.6, -21.5, -13.2}, true},
    {"FPBA", {28.6, 44.3, 47.5, 51.7}, {66.6, 26.0, -4.4, -0.4}, true},
    {"FPBA_surr", {32.2, 25.9, 49.5, 48.9}, {62.5, 56.8, -8.8, 5.1}, true},
    {"Ens", {1.1, 20.1, 59.1, 60.8}, {98.7, 71.7, -11.5, -0.04}, true},
    {"Surr", {26.4, 21.8, 54.7, 52.9}, {69.1, 69.3, -3.1, 8.9}, true},
    {"Ens_Surr", {5.2, 6.2, 57.3, 57.0}, {93.9, 90.2, -8.2, 2.0}, true},
}};

struct LeaveOneOutRow {
  const char* strategy;
  const char* held_out;
  std::array<double, 4> asr;
};

/// Dual-attack strategies evaluated against the attack they did not train on.
inline constexpr std::array<LeaveOneOutRow, 3> kRefLeaveOneOut = {{
    {"PGD+FGSM", "FPBA", {35.7, 39.9, 64.1, 66.2}},
    {"PGD+FPBA", "FGSM", {29.7, 38.9, 55.5, 56.5}},
    {"FGSM+FPBA", "PGD", {29.7, 39.5, 68.1, 72.9}},
}};

/// Per-detector C1 ASR grid for PGD-trained models, one row per test attack.
/// Column order matches kRefPercellArchs.
inline constexpr std::array<const char*, 5> kRefPercellArchs = {
    "xcept-mu", "ucf-mu", "spsl-mu", "srm-mu", "recce-mu"};

struct PercellRow {
  const char* attack;
  std::array<double, 5> asr;
};

inline constexpr std::array<PercellRow, 3> kRefPgdAtPercellC1 = {{
    {"PGD", {0.3, 0.01, 0.14, 0.03, 0.01}},
    {"FGSM", {6.96, 24.1, 42.7, 40.2, 41.4}},
    {"FPBA", {10.9, 37.9, 35.7, 28.7, 34.4}},
}};

/// Clean AUC per strategy column (Base, PGD, FGSM, FPBA, Ens, Surr, Ens_Surr)
/// for the in-distribution (D1) and shifted (D2) test sets.
struct AucRow {
  const char* dataset;
  std::array<double, 7> auc;
};

inline constexpr std::array<const char*, 7> kRefAucStrategies = {
    "Base", "PGD", "FGSM", "FPBA", "Ens", "Surr", "Ens_Surr"};

inline constexpr std::array<AucRow, 2> kRefCleanAuc = {{
    {"D1", {95.4, 95.5, 94.9, 94.9, 95.1, 95.1, 94.3}},
    {"D2", {79.8, 81.7, 82.5, 81.9, 82.1, 82.3, 82.9}},
}};

}  // namespace dumbench::ref
