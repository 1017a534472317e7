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

#include "dumbench/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace dumbench {

std::string case_name(DumbCase c) {
  switch (c) {
    case DumbCase::C1: return "C1";
    case DumbCase::C3: return "C3";
    case DumbCase::C5: return "C5";
    default: return "C7";
  }
}

std::string case_dataset(DumbCase c) {
  return (c == DumbCase::C1 || c == DumbCase::C3) ? "D1" : "D2";
}

bool case_same_arch(DumbCase c) {
  return c == DumbCase::C1 || c == DumbCase::C5;
}

EvalRecord count_successes(const DetectorModel& target, const TestSuite& suite,
                           const EvalFlags& flags) {
  EvalRecord r;
  r.target_arch = arch_name(target.arch);
  r.target_strategy = target.provenance.strategy;
  r.surrogate_arch = suite.surrogate.empty() ? "-" : suite.surrogate;
  r.attack = suite.attack;
  r.dataset = suite.dataset;

  std::vector<double> scores = predict_scores(target, suite.set.images);
  const int n = suite.set.size();
  if (int(scores.size()) != n)
    throw ConfigError("count_successes: score/label count mismatch");

  std::vector<char> in_population(n, 1);
  if (flags.only_originally_correct && suite.attack != "clean") {
    std::vector<double> orig = predict_scores(target, suite.set.originals);
    for (int i = 0; i < n; ++i) {
      int pred = orig[i] >= 0.5 ? 1 : 0;
      in_population[i] = pred == int(suite.set.labels[i]) ? 1 : 0;
    }
  }
  for (int i = 0; i < n; ++i) {
    if (!in_population[i]) continue;
    ++r.n_total;
    int pred = scores[i] >= 0.5 ? 1 : 0;
    bool correct = pred == int(suite.set.labels[i]);
    if (suite.attack == "clean" ? correct : !correct) ++r.n_success;
  }
  if (r.n_total == 0)
    throw ConfigError(concat("count_successes: empty population for suite ",
                             suite.id));
  return r;
}

double asr_case(const std::vector<EvalRecord>& records, DumbCase c,
                const CaseGrid& grid) {
  if (grid.archs.empty() || grid.attacks.empty())
    throw ConfigError("asr_case: empty grid");
  const std::string dataset = case_dataset(c);
  const bool same = case_same_arch(c);

  std::map<std::string, double> cells;
  for (const EvalRecord& r : records) {
    if (r.dataset != dataset || r.attack == "clean") continue;
    bool pair_ok = same ? r.surrogate_arch == r.target_arch
                        : r.surrogate_arch != r.target_arch;
    if (!pair_ok) continue;
    std::string key = concat(r.target_arch, "|", r.surrogate_arch, "|", r.attack);
    if (cells.count(key))
      throw ConfigError(concat("asr_case: duplicate cell ", key));
    cells[key] = double(r.n_success) / double(r.n_total);
  }

  double sum = 0;
  int n = 0;
  for (const std::string& t : grid.archs)
    for (const std::string& s : grid.archs) {
      if (same ? s != t : s == t) continue;
      for (const std::string& a : grid.attacks) {
        auto it = cells.find(concat(t, "|", s, "|", a));
        if (it == cells.end())
          throw ConfigError(concat("asr_case ", case_name(c),
                                   ": missing cell (target=", t, ", surrogate=",
                                   s, ", attack=", a, ")"));
        sum += it->second;
        ++n;
      }
    }
  if (n == 0)
    throw ConfigError(concat("asr_case ", case_name(c),
                             ": grid has no cells (cross-model cases need at "
                             "least two architectures)"));
  return 100.0 * sum / n;
}

std::optional<double> amr(double asr_orig, double asr_at) {
  if (asr_orig < 0) throw ConfigError("amr: negative baseline ASR");
  if (asr_orig == 0) return std::nullopt;
  return (asr_orig - asr_at) / asr_orig * 100.0;
}

double baseline_for(const std::string& strategy, DumbCase c,
                    const BaselineTable& table) {
  for (const std::string& a : {std::string("FGSM"), std::string("PGD"),
                               std::string("FPBA")})
    if (strategy == a || strategy == a + "_surr")
      return table.per_attack.at(a).at(c);
  return table.base_mean.at(c);
}

double auc(const std::vector<double>& scores, const std::vector<double>& labels) {
  if (scores.size() != labels.size() || scores.empty())
    throw ConfigError("auc: scores and labels must pair up");
  const int n = int(scores.size());
  int npos = 0;
  for (double y : labels) npos += int(y);
  const int nneg = n - npos;
  if (npos == 0 || nneg == 0)
    throw ConfigError("auc: both classes must be present");

  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(),
            [&](int a, int b) { return scores[a] < scores[b]; });

  // midranks over tie groups
  std::vector<double> rank(n);
  int i = 0;
  while (i < n) {
    int j = i;
    while (j + 1 < n && scores[idx[j + 1]] == scores[idx[i]]) ++j;
    double mid = (double(i) + double(j)) / 2.0 + 1.0;
    for (int k = i; k <= j; ++k) rank[idx[k]] = mid;
    i = j + 1;
  }
  double rpos = 0;
  for (int k = 0; k < n; ++k)
    if (labels[k] == 1.0) rpos += rank[k];
  return (rpos - double(npos) * (npos + 1) / 2.0) / (double(npos) * nneg);
}

namespace {

std::vector<EvalRecord> by_strategy(const std::vector<EvalRecord>& records,
                                    const std::string& strategy) {
  std::vector<EvalRecord> out;
  for (const EvalRecord& r : records)
    if (r.target_strategy == strategy && r.attack != "clean") out.push_back(r);
  return out;
}

}  // namespace

DumbReport run_matrix(const std::vector<DetectorModel>& targets,
                      const std::vector<TestSuite>& suites,
                      const std::vector<std::string>& strategies,
                      const CaseGrid& grid, const EvalFlags& flags) {
  DumbReport rep;

  // strategy -> dataset -> per-arch values
  std::map<std::string, std::map<std::string, std::vector<double>>> aucs, accs;
  for (const DetectorModel& m : targets) {
    const std::string st = m.provenance.strategy;
    for (const TestSuite& s : suites) {
      if (s.attack == "clean") {
        std::vector<double> scores = predict_scores(m, s.set.images);
        aucs[st][s.dataset].push_back(auc(scores, s.set.labels));
        EvalRecord r = count_successes(m, s, flags);
        accs[st][s.dataset].push_back(double(r.n_success) / r.n_total);
        rep.records.push_back(std::move(r));
      } else {
        rep.records.push_back(count_successes(m, s, flags));
      }
    }
  }
  for (const auto& [st, per_ds] : aucs)
    for (const auto& [ds, vals] : per_ds) {
      rep.clean_auc[st][ds] =
          std::accumulate(vals.begin(), vals.end(), 0.0) / vals.size();
      const auto& av = accs[st][ds];
      rep.clean_acc[st][ds] =
          std::accumulate(av.begin(), av.end(), 0.0) / av.size();
    }

  auto agg = [&](const std::string& st, DumbCase c, const CaseGrid& g) {
    try {
      return asr_case(by_strategy(rep.records, st), c, g);
    } catch (const ConfigError& e) {
      throw ConfigError(concat(e.what(), " [strategy ", st, ", ",
                               rep.records.size(), " records collected]"));
    }
  };

  // nominal per-attack table and the AMR baseline
  BaselineTable baseline;
  for (DumbCase c : kAllCases) {
    for (const std::string& a : grid.attacks) {
      double v = agg("Base", c, {grid.archs, {a}});
      rep.nominal_asr[a][c] = v;
      baseline.per_attack[a][c] = v;
    }
    baseline.base_mean[c] = agg("Base", c, grid);
  }

  // strategy rows; dual strategies go to the leave-one-out table instead
  std::vector<std::string> surr_rows;
  for (const std::string& st : strategies) {
    const ATStrategy& meta = strategy_by_id(st);
    if (meta.is_dual) {
      std::string held = attack_name(held_out_attack(meta));
      for (DumbCase c : kAllCases)
        rep.leave_one_out[st][c] = agg(st, c, {grid.archs, {held}});
      continue;
    }
    if (!meta.all_surrogates && meta.attacks.size() == 1) surr_rows.push_back(st);
    for (DumbCase c : kAllCases) {
      AsrAmr cell;
      cell.asr = agg(st, c, grid);
      if (st != "Base")
        cell.amr = amr(baseline_for(st, c, baseline), cell.asr);
      rep.strategy_table[st][c] = cell;
    }
  }

  // _surr rows aggregate into the Surr row
  std::vector<std::string> surr_ids;
  for (const std::string& st : strategies)
    if (st.size() > 5 && st.substr(st.size() - 5) == "_surr") surr_ids.push_back(st);
  if (surr_ids.size() == 3) {
    for (DumbCase c : kAllCases) {
      double sum = 0;
      for (const std::string& st : surr_ids)
        sum += rep.strategy_table.at(st).at(c).asr;
      AsrAmr cell;
      cell.asr = sum / 3.0;
      cell.amr = amr(baseline.base_mean.at(c), cell.asr);
      rep.strategy_table["Surr"][c] = cell;
    }
  }

  // per-cell C1 grids
  for (const EvalRecord& r : rep.records) {
    if (r.dataset != "D1" || r.attack == "clean") continue;
    if (r.surrogate_arch != r.target_arch) continue;
    rep.percell_c1[r.target_strategy][r.attack][r.target_arch] =
        100.0 * r.n_success / r.n_total;
  }
  return rep;
}

}  // namespace dumbench
