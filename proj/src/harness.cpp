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

#include "dumbench/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <ctime>
#include <mutex>
#include <ostream>
#include <thread>

#include <json.hpp>

#include "dumbench/reference.hpp"
#include "dumbench/transforms.hpp"

namespace dumbench {

using nlohmann::json;

const std::array<const char*, 6> kStages = {"generate", "train-nominal",
                                            "craft",    "train-at",
                                            "evaluate", "report"};

void parallel_for(int n, int workers, const std::function<void(int)>& fn) {
  if (n <= 0) return;
  workers = std::max(1, std::min(workers, n));
  if (workers == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr first_error;
  std::mutex err_mu;
  auto worker = [&] {
    for (;;) {
      int i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mu);
        if (!first_error) first_error = std::current_exception();
      }
    }
  };
  std::vector<std::thread> threads;
  for (int w = 0; w < workers; ++w) threads.emplace_back(worker);
  for (auto& t : threads) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

namespace {

std::string now_utc() {
  std::time_t t = std::time(nullptr);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

/// Order-independent content hash of a file tree (or a single file).
uint64_t hash_path(const fs::path& root) {
  if (fs::is_regular_file(root)) return hash_file(root);
  if (!fs::is_directory(root)) return 0;
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file()) files.push_back(e.path());
  std::sort(files.begin(), files.end());
  uint64_t h = fnv1a64("tree");
  for (const fs::path& f : files) {
    h = splitmix64(h ^ fnv1a64(fs::relative(f, root).generic_string()));
    h = splitmix64(h ^ hash_file(f));
  }
  return h;
}

constexpr const char* kLedgerFile = "ledger.json";

json entry_to_json(const StageEntry& e) {
  json j;
  j["input_hash"] = e.input_hash;
  j["outputs"] = e.outputs;
  j["finished_at"] = e.finished_at;
  return j;
}

StageEntry entry_from_json(const json& j) {
  StageEntry e;
  e.input_hash = j.at("input_hash").get<uint64_t>();
  e.outputs = j.at("outputs").get<std::map<std::string, uint64_t>>();
  e.finished_at = j.at("finished_at").get<std::string>();
  return e;
}

uint64_t hash_of(const json& j) { return fnv1a64(j.dump()); }

/// The per-stage input signatures. Downstream signatures fold in the
/// upstream output hashes, so any content change propagates.
uint64_t outputs_hash(const StageEntry& e) {
  json j = e.outputs;
  return hash_of(j);
}

struct StageContext {
  const ExperimentManifest& m;
  fs::path out;
  RunLedger ledger;

  explicit StageContext(const ExperimentManifest& m_) : m(m_), out(m_.out_dir) {
    m.validate();
    fs::create_directories(out);
    ledger = load_ledger(out);
    // stored manifest copy for provenance
    const std::string body = manifest_to_json(m);
    const fs::path copy = out / "manifest.json";
    if (!fs::exists(copy) || read_file(copy) != body)
      atomic_write_file(copy, body);
  }

  json manifest_json() const { return json::parse(manifest_to_json(m)); }

  uint64_t sig(const std::string& stage) {
    const json mj = manifest_json();
    json j;
    if (stage == "generate") {
      j = {{"datasets", mj.at("datasets")},
           {"split_ratios", mj.at("split_ratios")},
           {"seed", m.seed}};
    } else if (stage == "train-nominal") {
      j = {{"upstream", fresh_outputs("generate")},
           {"archs", mj.at("archs")},
           {"train", mj.at("train")}};
    } else if (stage == "craft") {
      j = {{"upstream", fresh_outputs("train-nominal")},
           {"attacks", mj.at("attacks")},
           {"seed", m.seed}};
    } else if (stage == "train-at") {
      j = {{"data", fresh_outputs("generate")},
           {"nominal", fresh_outputs("train-nominal")},
           {"attacks", mj.at("attacks")},
           {"strategies", mj.at("strategies")},
           {"train", mj.at("train")}};
    } else if (stage == "evaluate") {
      j = {{"nominal", fresh_outputs("train-nominal")},
           {"suites", fresh_outputs("craft")},
           {"at", fresh_outputs("train-at")},
           {"data", fresh_outputs("generate")},
           {"only_originally_correct", m.eval_flags.only_originally_correct}};
    } else if (stage == "report") {
      j = {{"upstream", fresh_outputs("evaluate")},
           {"amr_rule", m.amr_rule},
           {"emit_plots", m.emit_plots},
           {"preset", m.preset},
           {"seed", m.seed},
           {"archs", mj.at("archs")}};
    } else {
      throw ConfigError(concat("unknown stage: ", stage));
    }
    return hash_of(j);
  }

  bool entry_fresh(const std::string& stage, uint64_t input_hash) {
    auto it = ledger.stages.find(stage);
    if (it == ledger.stages.end()) return false;
    if (it->second.input_hash != input_hash) return false;
    for (const auto& [rel, h] : it->second.outputs)
      if (hash_path(out / rel) != h) return false;
    return true;
  }

  /// Outputs of an upstream stage, after verifying it is current; throws an
  /// actionable error otherwise.
  uint64_t fresh_outputs(const std::string& stage) {
    const uint64_t want = sig(stage);
    if (!entry_fresh(stage, want))
      throw ConfigError(concat("stage '", stage,
                               "' is missing or stale; run `dumbench ", stage,
                               "` (or `dumbench full-run`) first"));
    return outputs_hash(ledger.stages.at(stage));
  }

  /// Returns true when the stage can be skipped; otherwise the caller runs
  /// `body`, which returns the artifact paths (relative) to record.
  StageResult run(const std::string& stage,
                  const std::function<std::vector<std::string>()>& body) {
    const uint64_t input_hash = sig(stage);
    if (entry_fresh(stage, input_hash)) return {stage, true};
    std::vector<std::string> artifacts = body();
    StageEntry e;
    e.input_hash = input_hash;
    for (const std::string& rel : artifacts) e.outputs[rel] = hash_path(out / rel);
    e.finished_at = now_utc();
    ledger.stages[stage] = std::move(e);
    save_ledger(out, ledger);
    return {stage, false};
  }
};

struct LoadedData {
  Dataset data;
  SplitAssignment split;
  LabeledBatch train, val, test;
};

LoadedData load_data(const fs::path& out, const std::string& id) {
  LoadedData d;
  std::tie(d.data, d.split) = load_dataset(out / "data" / id);
  d.train = to_batch(d.data, d.split, Partition::Train);
  d.val = to_batch(d.data, d.split, Partition::Val);
  d.test = to_batch(d.data, d.split, Partition::Test);
  return d;
}

std::string suite_dirname(const std::string& dataset, const std::string& attack,
                          const std::string& surrogate) {
  return concat(dataset, "_", attack, "_", surrogate);
}

std::vector<DetectorModel> load_nominal(const ExperimentManifest& m,
                                        const fs::path& out) {
  std::vector<DetectorModel> models;
  for (const std::string& a : m.archs)
    models.push_back(load_checkpoint(out / "models" / "nominal" / (a + ".json")));
  return models;
}

std::map<AttackKind, AttackSpec> attack_map(const ExperimentManifest& m) {
  std::map<AttackKind, AttackSpec> map;
  for (const AttackSpec& a : m.attacks) map[a.kind] = a;
  return map;
}

}  // namespace

RunLedger load_ledger(const fs::path& out_dir) {
  RunLedger ledger;
  const fs::path p = out_dir / kLedgerFile;
  if (!fs::exists(p)) return ledger;
  json j;
  try {
    j = json::parse(read_file(p));
    for (auto& [stage, e] : j.at("stages").items())
      ledger.stages[stage] = entry_from_json(e);
  } catch (const json::exception& e) {
    throw ConfigError(concat("ledger.json is corrupt: ", e.what()));
  }
  return ledger;
}

void save_ledger(const fs::path& out_dir, const RunLedger& ledger) {
  json j;
  j["stages"] = json::object();
  for (const auto& [stage, e] : ledger.stages)
    j["stages"][stage] = entry_to_json(e);
  atomic_write_file(out_dir / kLedgerFile, j.dump(2) + "\n");
}

StageResult cmd_generate(const ExperimentManifest& m) {
  StageContext ctx(m);
  return ctx.run("generate", [&] {
    std::vector<std::string> artifacts;
    for (const DatasetSpec* spec : {&m.d1, &m.d2}) {
      Dataset data = generate(*spec);
      SplitAssignment sa =
          split(data, m.split_ratios, derive_seed(m.seed, concat("split:", spec->id)));
      save_dataset(ctx.out / "data" / spec->id, data, sa);
      artifacts.push_back(concat("data/", spec->id));
    }
    return artifacts;
  });
}

StageResult cmd_train_nominal(const ExperimentManifest& m) {
  StageContext ctx(m);
  return ctx.run("train-nominal", [&] {
    LoadedData d1 = load_data(ctx.out, "D1");
    fs::create_directories(ctx.out / "models" / "nominal");
    std::vector<std::string> artifacts(m.archs.size());
    parallel_for(int(m.archs.size()), m.workers, [&](int i) {
      Arch arch = parse_arch(m.archs[i]);
      TrainResult r = train_nominal(arch, d1.train, d1.val, m.train);
      const std::string rel = concat("models/nominal/", m.archs[i], ".json");
      save_checkpoint(ctx.out / rel, r.model);
      artifacts[i] = rel;
    });
    return artifacts;
  });
}

StageResult cmd_craft(const ExperimentManifest& m) {
  StageContext ctx(m);
  return ctx.run("craft", [&] {
    std::vector<DetectorModel> nominal = load_nominal(m, ctx.out);
    std::map<std::string, LoadedData> data;
    data.emplace("D1", load_data(ctx.out, "D1"));
    data.emplace("D2", load_data(ctx.out, "D2"));

    struct Unit {
      std::string dataset, attack, surrogate;
      AttackSpec spec;
      const DetectorModel* model;
    };
    std::vector<Unit> units;
    for (const std::string& ds : {"D1", "D2"})
      for (const AttackSpec& a : m.attacks)
        for (size_t i = 0; i < nominal.size(); ++i) {
          Unit u;
          u.dataset = ds;
          u.attack = attack_name(a.kind);
          u.surrogate = arch_name(nominal[i].arch);
          u.spec = a;
          // same id scheme as craft_test_suites, so results are identical
          u.spec.seed =
              derive_seed(m.seed, concat(ds, "/", u.attack, "/", u.surrogate));
          u.model = &nominal[i];
          units.push_back(std::move(u));
        }

    std::vector<std::string> artifacts(units.size());
    parallel_for(int(units.size()), m.workers, [&](int i) {
      const Unit& u = units[i];
      const LoadedData& d = data.at(u.dataset);
      AdversarialSet set = craft(*u.model, d.train, d.test, u.spec);
      budget_check(set);
      const std::string rel =
          concat("suites/", suite_dirname(u.dataset, u.attack, u.surrogate));
      save_adversarial_set(ctx.out / rel, set);
      artifacts[i] = rel;
    });
    return artifacts;
  });
}

StageResult cmd_train_at(const ExperimentManifest& m) {
  StageContext ctx(m);
  return ctx.run("train-at", [&] {
    std::vector<DetectorModel> nominal = load_nominal(m, ctx.out);
    LoadedData d1 = load_data(ctx.out, "D1");
    std::map<AttackKind, AttackSpec> specs = attack_map(m);

    struct Unit {
      std::string strategy, arch;
    };
    std::vector<Unit> units;
    for (const std::string& st : m.strategies) {
      if (st == "Base") continue;  // the nominal models are the Base row
      for (const std::string& a : m.archs) units.push_back({st, a});
    }
    std::vector<std::string> artifacts(units.size());
    parallel_for(int(units.size()), m.workers, [&](int i) {
      const Unit& u = units[i];
      TrainResult r =
          adversarial_train(strategy_by_id(u.strategy), parse_arch(u.arch),
                            d1.train, d1.val, nominal, specs, m.train);
      const std::string rel = concat("models/at/", u.strategy, "/", u.arch,
                                     ".json");
      fs::create_directories((ctx.out / rel).parent_path());
      save_checkpoint(ctx.out / rel, r.model);
      artifacts[i] = rel;
    });
    return artifacts;
  });
}

StageResult cmd_evaluate(const ExperimentManifest& m) {
  StageContext ctx(m);
  return ctx.run("evaluate", [&] {
    std::vector<DetectorModel> targets = load_nominal(m, ctx.out);
    for (const std::string& st : m.strategies) {
      if (st == "Base") continue;
      for (const std::string& a : m.archs)
        targets.push_back(
            load_checkpoint(ctx.out / "models" / "at" / st / (a + ".json")));
    }

    std::vector<TestSuite> suites;
    for (const std::string& ds : {"D1", "D2"}) {
      LoadedData d = load_data(ctx.out, ds);
      TestSuite clean;
      clean.id = concat(ds, "/clean");
      clean.dataset = ds;
      clean.attack = "clean";
      clean.set.images = d.test.images;
      clean.set.originals = d.test.images;
      clean.set.labels = d.test.labels;
      clean.set.methods = d.test.methods;
      clean.set.identities = d.test.identities;
      clean.set.dataset = ds;
      suites.push_back(std::move(clean));
      for (const AttackSpec& a : m.attacks)
        for (const std::string& arch : m.archs) {
          TestSuite ts;
          ts.id = concat(ds, "/", attack_name(a.kind), "/", arch);
          ts.dataset = ds;
          ts.attack = attack_name(a.kind);
          ts.surrogate = arch;
          ts.set = load_adversarial_set(
              ctx.out / "suites" / suite_dirname(ds, ts.attack, arch));
          suites.push_back(std::move(ts));
        }
    }

    CaseGrid grid;
    grid.archs = m.archs;
    for (const AttackSpec& a : m.attacks) grid.attacks.push_back(attack_name(a.kind));
    DumbReport rep = run_matrix(targets, suites, m.strategies, grid, m.eval_flags);

    fs::create_directories(ctx.out / "eval");
    atomic_write_file(ctx.out / "eval" / "records.csv",
                      records_to_csv(rep.records));
    atomic_write_file(ctx.out / "eval" / "aggregates.json",
                      aggregates_to_json(rep));
    return std::vector<std::string>{"eval/records.csv", "eval/aggregates.json"};
  });
}

StageResult cmd_report(const ExperimentManifest& m) {
  StageContext ctx(m);
  return ctx.run("report", [&] {
    DumbReport rep =
        aggregates_from_json(read_file(ctx.out / "eval" / "aggregates.json"));
    ReportBundle bundle = render_report(rep, m);
    fs::create_directories(ctx.out / "report");
    atomic_write_file(ctx.out / "report" / "report.md", bundle.report_md);
    atomic_write_file(ctx.out / "report" / "summary.json", bundle.summary_json);
    atomic_write_file(ctx.out / "report" / "records.csv",
                      read_file(ctx.out / "eval" / "records.csv"));
    std::vector<std::string> artifacts = {"report/report.md",
                                          "report/summary.json",
                                          "report/records.csv"};
    for (const auto& [name, body] : bundle.svgs) {
      atomic_write_file(ctx.out / "report" / name, body);
      artifacts.push_back(concat("report/", name));
    }
    return artifacts;
  });
}

std::vector<StageResult> cmd_full_run(const ExperimentManifest& m) {
  return {cmd_generate(m),  cmd_train_nominal(m), cmd_craft(m),
          cmd_train_at(m),  cmd_evaluate(m),      cmd_report(m)};
}

namespace {

struct CheckPrinter {
  std::ostream& out;
  int failures = 0;
  void pass(const std::string& name, const std::string& detail) {
    out << "PASS " << name << " (" << detail << ")\n";
  }
  void fail(const std::string& name, const std::string& detail) {
    out << "FAIL " << name << " (" << detail << ")\n";
    ++failures;
  }
  void check(bool ok, const std::string& name, const std::string& detail) {
    ok ? pass(name, detail) : fail(name, detail);
  }
};

}  // namespace

int cmd_verify(const ExperimentManifest& m, std::ostream& out) {
  m.validate();
  CheckPrinter p{out};

  // engine gradients, every architecture
  for (Arch arch : kAllArchs) {
    double worst = 0;
    for (int trial = 0; trial < 3; ++trial) {
      DetectorModel model = build(arch, derive_seed(101, concat(
          "verify:", arch_name(arch), ":", trial)));
      auto rng = make_rng(derive_seed(102, concat("verify-batch:", trial)));
      std::uniform_real_distribution<double> u(0.0, 1.0);
      LabeledBatch b;
      b.dataset = "D1";
      b.images = Tensor::zeros({2, 3, 8, 8});
      for (Eigen::Index i = 0; i < b.images.size(); ++i)
        b.images.data(i) = u(rng);
      b.labels = {0.0, 1.0};
      b.methods = {0, 1 + trial % 4};
      b.identities = {0, 1};
      GradCheckResult r = gradient_check(model, b);
      worst = std::max({worst, r.input_err, r.param_err});
    }
    p.check(worst <= 1e-4, concat("gradient-check/", arch_name(arch)),
            concat("max relative error ", worst));
  }

  // DCT roundtrip
  {
    auto rng = make_rng(103);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Eigen::MatrixXd x(16, 16);
    for (int r = 0; r < 16; ++r)
      for (int c = 0; c < 16; ++c) x(r, c) = u(rng);
    double err = (idct2d(dct2d(x)) - x).cwiseAbs().maxCoeff();
    p.check(err < 1e-6, "dct-roundtrip", concat("max error ", err));
  }

  // metric oracles
  {
    double a = auc({0.1, 0.4, 0.35, 0.8}, {0, 0, 1, 1});
    p.check(std::abs(a - 0.75) < 1e-12, "auc-oracle", concat("got ", a));
    auto r = amr(99.6, 20.2);
    p.check(r && std::abs(*r - 79.7188755) < 1e-4, "amr-oracle",
            concat("got ", r ? *r : -1.0));
    p.check(!amr(0.0, 5.0).has_value(), "amr-zero-baseline",
            "undefined reported as n/a");
  }
  {
    // asr_case against a direct mean over cells
    std::vector<EvalRecord> recs;
    CaseGrid grid{{"xcept-mu", "srm-mu"}, {"PGD"}};
    double expect = 0;
    int cells = 0;
    for (const std::string& a : grid.archs) {
      EvalRecord r;
      r.target_arch = a;
      r.target_strategy = "Base";
      r.surrogate_arch = a;
      r.attack = "PGD";
      r.dataset = "D1";
      r.n_success = 2 + cells;
      r.n_total = 10;
      expect += 100.0 * r.n_success / r.n_total;
      ++cells;
      recs.push_back(std::move(r));
    }
    expect /= cells;
    double got = asr_case(recs, DumbCase::C1, grid);
    p.check(std::abs(got - expect) < 1e-12, "asr-oracle",
            concat("got ", got, " want ", expect));
  }

  // reference-table consistency: recompute every AMR entry from the
  // frozen nominal/Base aggregates through the denominator rule
  {
    BaselineTable baseline;
    for (const auto& row : ref::kRefNominalAsr)
      for (size_t c = 0; c < 4; ++c)
        baseline.per_attack[row.attack][kAllCases[c]] = row.asr[c];
    for (const auto& row : ref::kRefStrategyRows)
      if (std::string(row.strategy) == "Base")
        for (size_t c = 0; c < 4; ++c)
          baseline.base_mean[kAllCases[c]] = row.asr[c];
    // the Surr aggregate is by definition the mean of the _surr rows; use
    // the unrounded mean rather than the rounded reference entry
    std::array<double, 4> surr_asr = {0, 0, 0, 0};
    for (const auto& row : ref::kRefStrategyRows) {
      const std::string id = row.strategy;
      if (id.size() > 5 && id.substr(id.size() - 5) == "_surr")
        for (size_t c = 0; c < 4; ++c) surr_asr[c] += row.asr[c] / 3.0;
    }
    for (const auto& row : ref::kRefStrategyRows) {
      if (!row.has_amr) continue;
      const bool is_surr_agg = std::string(row.strategy) == "Surr";
      for (size_t c = 0; c < 4; ++c) {
        DumbCase dc = kAllCases[c];
        double base = baseline_for(row.strategy, dc, baseline);
        auto got = amr(base, is_surr_agg ? surr_asr[c] : row.asr[c]);
        const std::string name =
            concat("ref-amr/", row.strategy, "/", case_name(dc));
        if (!got) {
          p.fail(name, "undefined");
          continue;
        }
        p.check(std::abs(*got - row.amr[c]) <= 0.1, name,
                concat("computed ", *got, " vs reference ", row.amr[c]));
      }
    }
  }

  // budget checks over any cached adversarial suites
  const fs::path suites = fs::path(m.out_dir) / "suites";
  if (fs::is_directory(suites)) {
    for (const auto& e : fs::directory_iterator(suites)) {
      if (!e.is_directory()) continue;
      const std::string name = e.path().filename().string();
      try {
        double dev = budget_check(load_adversarial_set(e.path()));
        p.pass(concat("budget/", name), concat("max deviation ", dev));
      } catch (const CheckError& err) {
        p.fail(concat("budget/", name), err.what());
      }
    }
  }

  out << (p.failures == 0 ? "VERIFY PASS" : "VERIFY FAIL") << " ("
      << p.failures << " failed checks)\n";
  return p.failures;
}

}  // namespace dumbench
