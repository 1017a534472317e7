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

#include "dumbench/report.hpp"

namespace dumbench {

/// Runs fn(0..n-1) across up to `workers` threads; deterministic because
/// units write only their own slot. The first exception is rethrown.
void parallel_for(int n, int workers, const std::function<void(int)>& fn);

/// One completed stage: the hash of everything it consumed and the hash of
/// every artifact it wrote. A stage reruns iff either side changed.
struct StageEntry {
  uint64_t input_hash = 0;
  std::map<std::string, uint64_t> outputs;  // path relative to out_dir
  std::string finished_at;                  // informational only
};

struct RunLedger {
  std::map<std::string, StageEntry> stages;
};

RunLedger load_ledger(const fs::path& out_dir);
void save_ledger(const fs::path& out_dir, const RunLedger& ledger);

/// Canonical stage names, in pipeline order.
extern const std::array<const char*, 6> kStages;

struct StageResult {
  std::string stage;
  bool skipped = false;
};

/// Stage drivers. Each validates that its upstream stages are fresh (throws
/// ConfigError naming the stage to rerun otherwise), skips itself when its
/// own ledger entry is current, and records outputs atomically.
StageResult cmd_generate(const ExperimentManifest& m);
StageResult cmd_train_nominal(const ExperimentManifest& m);
StageResult cmd_craft(const ExperimentManifest& m);
StageResult cmd_train_at(const ExperimentManifest& m);
StageResult cmd_evaluate(const ExperimentManifest& m);
StageResult cmd_report(const ExperimentManifest& m);

/// All six stages in order; returns the per-stage skip/run summary.
std::vector<StageResult> cmd_full_run(const ExperimentManifest& m);

/// Static self-checks: engine gradients, DCT roundtrip, metric oracles,
/// reference-table consistency, and budget checks over any cached suites.
/// Prints one "PASS ..."/"FAIL ..." line per check to `out` and returns the
/// number of failures.
int cmd_verify(const ExperimentManifest& m, std::ostream& out);

}  // namespace dumbench
