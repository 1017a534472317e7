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

#include "dumbench/manifest.hpp"

namespace dumbench {

/// Canonical CSV for the evaluation records, sorted by
/// (target_arch, target_strategy, surrogate_arch, attack, dataset).
std::string records_to_csv(std::vector<EvalRecord> records);
std::vector<EvalRecord> records_from_csv(const std::string& text);

/// Aggregate tables of a DumbReport as JSON (records travel in the CSV).
std::string aggregates_to_json(const DumbReport& rep);
DumbReport aggregates_from_json(const std::string& text);

/// Rendered report artifacts, all deterministic for a given input.
struct ReportBundle {
  std::string report_md;
  std::string summary_json;
  /// filename -> SVG body (empty when plots are disabled)
  std::map<std::string, std::string> svgs;
};

/// Renders the Markdown tables, the (table,row,column)-keyed summary and the
/// bar charts. The manifest's amr_rule selects the AMR denominator; under
/// "base-mean" the strategy AMRs are recomputed from the Base-row means.
ReportBundle render_report(const DumbReport& rep, const ExperimentManifest& m);

}  // namespace dumbench
