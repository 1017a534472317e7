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

#include "dumbench/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include <json.hpp>

namespace dumbench {

using nlohmann::json;

namespace {

DumbCase parse_case(const std::string& name) {
  for (DumbCase c : kAllCases)
    if (case_name(c) == name) return c;
  throw ConfigError(concat("unknown case: ", name));
}

std::string fmt1(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", v);
  return buf;
}

std::string fmt_opt(const std::optional<double>& v) {
  return v ? fmt1(*v) : std::string("n/a");
}

/// Markdown table writer: header row then aligned cells.
std::string md_table(const std::vector<std::string>& header,
                     const std::vector<std::vector<std::string>>& rows) {
  std::string out = "|";
  for (const std::string& h : header) out += " " + h + " |";
  out += "\n|";
  for (size_t i = 0; i < header.size(); ++i) out += "---|";
  out += "\n";
  for (const auto& r : rows) {
    out += "|";
    for (const std::string& c : r) out += " " + c + " |";
    out += "\n";
  }
  return out;
}

/// Grouped vertical bar chart as a standalone SVG. One group per label,
/// one bar per series; negative values hang below the zero line.
std::string svg_bar_chart(const std::string& title,
                          const std::vector<std::string>& groups,
                          const std::vector<std::string>& series,
                          const std::vector<std::vector<double>>& values) {
  const char* palette[] = {"#4878d0", "#ee854a", "#6acc64", "#d65f5f",
                           "#956cb4", "#8c613c"};
  double vmax = 1.0, vmin = 0.0;
  for (const auto& g : values)
    for (double v : g) {
      vmax = std::max(vmax, v);
      vmin = std::min(vmin, v);
    }
  vmax = std::ceil(vmax / 10.0) * 10.0;
  vmin = std::floor(vmin / 10.0) * 10.0;

  const double bw = 14, gap = 18, left = 56, top = 48, plot_h = 240;
  const double gw = bw * double(series.size());
  const double width = left + 16 + double(groups.size()) * (gw + gap);
  const double height = top + plot_h + 72;
  auto y_of = [&](double v) {
    return top + plot_h * (vmax - v) / (vmax - vmin);
  };

  std::string s = concat(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"", int(width),
      "\" height=\"", int(height), "\" font-family=\"sans-serif\">\n",
      "<text x=\"", int(width / 2), "\" y=\"20\" text-anchor=\"middle\" ",
      "font-size=\"14\">", title, "</text>\n");
  // horizontal grid lines every 20 points
  for (double v = vmin; v <= vmax + 1e-9; v += 20.0) {
    s += concat("<line x1=\"", left, "\" y1=\"", y_of(v), "\" x2=\"",
                width - 8, "\" y2=\"", y_of(v),
                "\" stroke=\"#ddd\" stroke-width=\"1\"/>\n");
    s += concat("<text x=\"", left - 6, "\" y=\"", y_of(v) + 4,
                "\" text-anchor=\"end\" font-size=\"10\">", int(v),
                "</text>\n");
  }
  for (size_t g = 0; g < groups.size(); ++g) {
    const double x0 = left + 16 + double(g) * (gw + gap);
    for (size_t k = 0; k < series.size(); ++k) {
      const double v = values[g][k];
      const double y = y_of(std::max(v, 0.0));
      const double h = std::abs(y_of(0.0) - y_of(v));
      s += concat("<rect x=\"", x0 + double(k) * bw, "\" y=\"", y,
                  "\" width=\"", bw - 2, "\" height=\"", std::max(h, 0.5),
                  "\" fill=\"", palette[k % 6], "\"/>\n");
    }
    s += concat("<text x=\"", x0 + gw / 2, "\" y=\"", top + plot_h + 14,
                "\" text-anchor=\"middle\" font-size=\"10\" transform=\"rotate(30 ",
                x0 + gw / 2, " ", top + plot_h + 14, ")\">", groups[g],
                "</text>\n");
  }
  // legend
  for (size_t k = 0; k < series.size(); ++k) {
    const double x = left + 16 + double(k) * 70;
    s += concat("<rect x=\"", x, "\" y=\"", height - 20, "\" width=\"10\" ",
                "height=\"10\" fill=\"", palette[k % 6], "\"/>\n<text x=\"",
                x + 14, "\" y=\"", height - 11, "\" font-size=\"10\">",
                series[k], "</text>\n");
  }
  s += "</svg>\n";
  return s;
}

/// Strategy row order for tables: manifest order with the Surr aggregate
/// appended after the last _surr row when present.
std::vector<std::string> row_order(const DumbReport& rep,
                                   const ExperimentManifest& m) {
  std::vector<std::string> order;
  for (const std::string& s : m.strategies)
    if (rep.strategy_table.count(s)) order.push_back(s);
  if (rep.strategy_table.count("Surr")) order.push_back("Surr");
  return order;
}

}  // namespace

std::string records_to_csv(std::vector<EvalRecord> records) {
  std::sort(records.begin(), records.end(),
            [](const EvalRecord& a, const EvalRecord& b) {
              return std::tie(a.target_arch, a.target_strategy, a.surrogate_arch,
                              a.attack, a.dataset) <
                     std::tie(b.target_arch, b.target_strategy, b.surrogate_arch,
                              b.attack, b.dataset);
            });
  std::string out =
      "target_arch,target_strategy,surrogate_arch,attack,dataset,n_success,"
      "n_total\n";
  for (const EvalRecord& r : records)
    out += concat(r.target_arch, ",", r.target_strategy, ",", r.surrogate_arch,
                  ",", r.attack, ",", r.dataset, ",", r.n_success, ",",
                  r.n_total, "\n");
  return out;
}

std::vector<EvalRecord> records_from_csv(const std::string& text) {
  std::vector<EvalRecord> out;
  std::istringstream is(text);
  std::string line;
  if (!std::getline(is, line) ||
      line != "target_arch,target_strategy,surrogate_arch,attack,dataset,"
              "n_success,n_total")
    throw ConfigError("records.csv: unexpected header");
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    EvalRecord r;
    std::string ns, nt;
    if (!std::getline(ls, r.target_arch, ',') ||
        !std::getline(ls, r.target_strategy, ',') ||
        !std::getline(ls, r.surrogate_arch, ',') ||
        !std::getline(ls, r.attack, ',') || !std::getline(ls, r.dataset, ',') ||
        !std::getline(ls, ns, ',') || !std::getline(ls, nt))
      throw ConfigError(concat("records.csv: malformed line: ", line));
    r.n_success = std::stoi(ns);
    r.n_total = std::stoi(nt);
    out.push_back(std::move(r));
  }
  return out;
}

std::string aggregates_to_json(const DumbReport& rep) {
  json j;
  for (const auto& [atk, per_case] : rep.nominal_asr)
    for (const auto& [c, v] : per_case) j["nominal_asr"][atk][case_name(c)] = v;
  for (const auto& [st, per_ds] : rep.clean_auc)
    for (const auto& [ds, v] : per_ds) j["clean_auc"][st][ds] = v;
  for (const auto& [st, per_ds] : rep.clean_acc)
    for (const auto& [ds, v] : per_ds) j["clean_acc"][st][ds] = v;
  for (const auto& [st, per_case] : rep.strategy_table)
    for (const auto& [c, cell] : per_case) {
      json& e = j["strategy_table"][st][case_name(c)];
      e["asr"] = cell.asr;
      if (cell.amr)
        e["amr"] = *cell.amr;
      else
        e["amr"] = nullptr;
    }
  for (const auto& [st, per_case] : rep.leave_one_out)
    for (const auto& [c, v] : per_case) j["leave_one_out"][st][case_name(c)] = v;
  for (const auto& [st, per_attack] : rep.percell_c1)
    for (const auto& [atk, per_arch] : per_attack)
      for (const auto& [arch, v] : per_arch)
        j["percell_c1"][st][atk][arch] = v;
  return j.dump(2) + "\n";
}

DumbReport aggregates_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(concat("aggregates: invalid JSON: ", e.what()));
  }
  DumbReport rep;
  try {
    for (auto& [atk, per_case] : j.at("nominal_asr").items())
      for (auto& [c, v] : per_case.items())
        rep.nominal_asr[atk][parse_case(c)] = v.get<double>();
    for (auto& [st, per_ds] : j.at("clean_auc").items())
      for (auto& [ds, v] : per_ds.items())
        rep.clean_auc[st][ds] = v.get<double>();
    for (auto& [st, per_ds] : j.at("clean_acc").items())
      for (auto& [ds, v] : per_ds.items())
        rep.clean_acc[st][ds] = v.get<double>();
    for (auto& [st, per_case] : j.at("strategy_table").items())
      for (auto& [c, e] : per_case.items()) {
        AsrAmr cell;
        cell.asr = e.at("asr").get<double>();
        if (!e.at("amr").is_null()) cell.amr = e.at("amr").get<double>();
        rep.strategy_table[st][parse_case(c)] = cell;
      }
    if (j.count("leave_one_out"))
      for (auto& [st, per_case] : j.at("leave_one_out").items())
        for (auto& [c, v] : per_case.items())
          rep.leave_one_out[st][parse_case(c)] = v.get<double>();
    if (j.count("percell_c1"))
      for (auto& [st, per_attack] : j.at("percell_c1").items())
        for (auto& [atk, per_arch] : per_attack.items())
          for (auto& [arch, v] : per_arch.items())
            rep.percell_c1[st][atk][arch] = v.get<double>();
  } catch (const json::exception& e) {
    throw ConfigError(concat("aggregates: missing field: ", e.what()));
  }
  return rep;
}

ReportBundle render_report(const DumbReport& rep, const ExperimentManifest& m) {
  ReportBundle out;
  json summary;
  auto put = [&](const std::string& table, const std::string& row,
                 const std::string& col, double v) {
    summary[concat(table, "/", row, "/", col)] = v;
  };

  // AMR under the configured denominator rule
  BaselineTable baseline;
  for (const auto& [atk, per_case] : rep.nominal_asr)
    for (const auto& [c, v] : per_case) baseline.per_attack[atk][c] = v;
  for (const auto& [c, cell] : rep.strategy_table.at("Base"))
    baseline.base_mean[c] = cell.asr;
  auto amr_of = [&](const std::string& st, DumbCase c,
                    const AsrAmr& cell) -> std::optional<double> {
    if (st == "Base") return std::nullopt;
    if (m.amr_rule == "base-mean") return amr(baseline.base_mean.at(c), cell.asr);
    return amr(baseline_for(st, c, baseline), cell.asr);
  };

  std::string md = concat("# dumbench report\n\n", "Preset: ", m.preset,
                          ", seed: ", m.seed, ", architectures: ");
  for (size_t i = 0; i < m.archs.size(); ++i)
    md += (i ? ", " : "") + m.archs[i];
  md += concat("\nGrid: ", count_models(m), " models x ", count_suites(m),
               " suites = ", count_cells(m), " evaluation cells\n\n");

  // nominal per-attack ASR
  md += "## Nominal attack success rate (%)\n\n";
  {
    std::vector<std::vector<std::string>> rows;
    for (const auto& [atk, per_case] : rep.nominal_asr) {
      std::vector<std::string> r = {atk};
      for (DumbCase c : kAllCases) {
        r.push_back(fmt1(per_case.at(c)));
        put("nominal_asr", atk, case_name(c), per_case.at(c));
      }
      rows.push_back(std::move(r));
    }
    md += md_table({"Attack", "C1", "C3", "C5", "C7"}, rows) + "\n";
  }

  // clean performance, canonical 7 columns when available plus full breakdown
  md += "## Clean performance\n\n";
  const std::vector<std::string> canonical = {"Base", "PGD",  "FGSM",    "FPBA",
                                              "Ens",  "Surr", "Ens_Surr"};
  bool have_canonical = true;
  for (const std::string& s : canonical)
    if (!rep.clean_auc.count(s) && s != "Surr") have_canonical = false;
  if (have_canonical) {
    std::vector<std::string> header = {"Dataset"};
    std::vector<std::vector<std::string>> rows;
    for (const std::string& ds : {"D1", "D2"}) {
      std::vector<std::string> r = {ds};
      for (const std::string& s : canonical) {
        // the Surr aggregate has no model of its own: mean of the _surr runs
        double v;
        if (s == "Surr") {
          v = (rep.clean_auc.at("PGD_surr").at(ds) +
               rep.clean_auc.at("FGSM_surr").at(ds) +
               rep.clean_auc.at("FPBA_surr").at(ds)) /
              3.0;
        } else {
          v = rep.clean_auc.at(s).at(ds);
        }
        r.push_back(fmt1(100.0 * v));
        put("clean_auc_canonical", ds, s, 100.0 * v);
        if (rows.empty()) header.push_back(s);
      }
      rows.push_back(std::move(r));
    }
    md += "AUC (%), canonical strategy columns:\n\n";
    md += md_table(header, rows) + "\n";
  }
  {
    std::vector<std::vector<std::string>> rows;
    for (const auto& [st, per_ds] : rep.clean_auc) {
      std::vector<std::string> r = {st};
      for (const std::string& ds : {"D1", "D2"}) {
        double a = per_ds.count(ds) ? per_ds.at(ds) : 0.0;
        double acc = rep.clean_acc.at(st).count(ds)
                         ? rep.clean_acc.at(st).at(ds)
                         : 0.0;
        r.push_back(fmt1(100.0 * a));
        r.push_back(fmt1(100.0 * acc));
        put("clean_auc", st, ds, 100.0 * a);
        put("clean_acc", st, ds, 100.0 * acc);
      }
      rows.push_back(std::move(r));
    }
    md += "All trained strategies:\n\n";
    md += md_table({"Strategy", "D1 AUC", "D1 acc", "D2 AUC", "D2 acc"}, rows) +
          "\n";
  }

  // strategy ASR/AMR table
  md += "## Adversarial training: ASR and AMR by case (%)\n\n";
  const std::vector<std::string> order = row_order(rep, m);
  {
    std::vector<std::vector<std::string>> rows;
    for (const std::string& st : order) {
      std::vector<std::string> r = {st};
      for (DumbCase c : kAllCases) {
        const AsrAmr& cell = rep.strategy_table.at(st).at(c);
        std::optional<double> a = amr_of(st, c, cell);
        r.push_back(fmt1(cell.asr));
        r.push_back(fmt_opt(a));
        put("strategy_asr", st, case_name(c), cell.asr);
        if (a) put("strategy_amr", st, case_name(c), *a);
      }
      rows.push_back(std::move(r));
    }
    md += md_table({"Strategy", "C1 ASR", "C1 AMR", "C3 ASR", "C3 AMR",
                    "C5 ASR", "C5 AMR", "C7 ASR", "C7 AMR"},
                   rows);
  }
  md += concat(
      "\nAMR denominator rule: ", m.amr_rule,
      m.amr_rule == "matched"
          ? " (single-attack strategies divide by the same attack's nominal "
            "ASR; multi-attack strategies and the Surr aggregate divide by "
            "the all-attack Base mean).\n\n"
          : " (every strategy divides by the all-attack Base mean).\n\n");

  // leave-one-out
  if (!rep.leave_one_out.empty()) {
    md += "## Leave-one-out: dual-strategy ASR against the held-out attack "
          "(%)\n\n";
    std::vector<std::vector<std::string>> rows;
    for (const auto& [st, per_case] : rep.leave_one_out) {
      std::vector<std::string> r = {
          st, attack_name(held_out_attack(strategy_by_id(st)))};
      for (DumbCase c : kAllCases) {
        r.push_back(fmt1(per_case.at(c)));
        put("leave_one_out", st, case_name(c), per_case.at(c));
      }
      rows.push_back(std::move(r));
    }
    md += md_table({"Strategy", "Held-out", "C1", "C3", "C5", "C7"}, rows) +
          "\n";
  }

  // per-detector C1 grids
  if (!rep.percell_c1.empty()) {
    md += "## Per-detector C1 ASR by training strategy (%)\n\n";
    for (const std::string& st : order) {
      auto it = rep.percell_c1.find(st);
      if (it == rep.percell_c1.end()) continue;
      std::vector<std::string> header = {"Attack"};
      for (const std::string& a : m.archs) header.push_back(a);
      std::vector<std::vector<std::string>> rows;
      for (const auto& [atk, per_arch] : it->second) {
        std::vector<std::string> r = {atk};
        for (const std::string& a : m.archs) {
          double v = per_arch.count(a) ? per_arch.at(a) : 0.0;
          r.push_back(fmt1(v));
          put(concat("percell_c1/", st), atk, a, v);
        }
        rows.push_back(std::move(r));
      }
      md += concat("Strategy ", st, ":\n\n") + md_table(header, rows) + "\n";
    }
  }

  if (m.emit_plots) {
    md += "## Plots\n\n![ASR by case](asr_by_case.svg)\n\n"
          "![Nominal ASR](nominal_asr.svg)\n";
    std::vector<std::string> cases = {"C1", "C3", "C5", "C7"};
    std::vector<std::vector<double>> vals;
    for (const std::string& st : order) {
      std::vector<double> v;
      for (DumbCase c : kAllCases) v.push_back(rep.strategy_table.at(st).at(c).asr);
      vals.push_back(std::move(v));
    }
    out.svgs["asr_by_case.svg"] =
        svg_bar_chart("ASR by case and training strategy (%)", order, cases,
                      vals);
    std::vector<std::string> attacks;
    std::vector<std::vector<double>> nvals;
    for (const auto& [atk, per_case] : rep.nominal_asr) {
      attacks.push_back(atk);
      std::vector<double> v;
      for (DumbCase c : kAllCases) v.push_back(per_case.at(c));
      nvals.push_back(std::move(v));
    }
    out.svgs["nominal_asr.svg"] =
        svg_bar_chart("Nominal ASR by attack (%)", attacks, cases, nvals);
  }

  out.report_md = md;
  out.summary_json = summary.dump(2) + "\n";
  return out;
}

}  // namespace dumbench
