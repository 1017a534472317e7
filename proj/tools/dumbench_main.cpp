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

#include <iostream>

#include <CLI11.hpp>

#include "dumbench/harness.hpp"

using namespace dumbench;

namespace {

struct CommonOpts {
  std::string manifest_path;
  std::string preset = "desk";
  std::string out;
  int workers = 0;
  bool seed_given = false;
  uint64_t seed = 0;
};

void add_common(CLI::App* cmd, CommonOpts& o) {
  cmd->add_option("--manifest", o.manifest_path,
                  "Manifest JSON path (overrides --preset)");
  cmd->add_option("--preset", o.preset, "Built-in preset: desk | paper-shape")
      ->check(CLI::IsMember({"desk", "paper-shape"}));
  cmd->add_option("--out", o.out, "Output directory override");
  cmd->add_option("--workers", o.workers, "Worker thread count override");
  auto* s = cmd->add_option("--seed-override", o.seed,
                            "Replace the global seed (re-derives stream seeds)");
  cmd->callback([&o, s] { o.seed_given = s->count() > 0; });
}

ExperimentManifest resolve(const CommonOpts& o) {
  ExperimentManifest m = o.manifest_path.empty()
                             ? make_preset(o.preset)
                             : load_manifest(o.manifest_path);
  if (!o.out.empty()) m.out_dir = o.out;
  if (o.workers > 0) m.workers = o.workers;
  if (o.seed_given) apply_seed_override(m, o.seed);
  m.validate();
  return m;
}

void print_result(const StageResult& r) {
  std::cout << (r.skipped ? "skipped " : "ran     ") << r.stage << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dumbench: adversarial-robustness benchmark for micro "
               "deepfake detectors"};
  app.require_subcommand(1);

  struct Sub {
    const char* name;
    const char* help;
    StageResult (*fn)(const ExperimentManifest&);
  };
  const Sub stage_cmds[] = {
      {"generate", "Generate the procedural datasets", cmd_generate},
      {"train-nominal", "Train the nominal detectors", cmd_train_nominal},
      {"craft", "Craft the adversarial test suites", cmd_craft},
      {"train-at", "Run the adversarial-training strategies", cmd_train_at},
      {"evaluate", "Evaluate every model on every suite", cmd_evaluate},
      {"report", "Render records.csv, report.md, summary and plots",
       cmd_report},
  };

  CommonOpts opts[8];
  StageResult (*runner)(const ExperimentManifest&) = nullptr;
  int selected = -1;
  for (int i = 0; i < 6; ++i) {
    CLI::App* c = app.add_subcommand(stage_cmds[i].name, stage_cmds[i].help);
    add_common(c, opts[i]);
    c->final_callback([&, i] {
      selected = i;
      runner = stage_cmds[i].fn;
    });
  }
  CLI::App* full = app.add_subcommand("full-run", "All stages in order");
  add_common(full, opts[6]);
  full->final_callback([&] { selected = 6; });
  CLI::App* verify =
      app.add_subcommand("verify", "Static self-checks (exit 1 on failure)");
  add_common(verify, opts[7]);
  verify->final_callback([&] { selected = 7; });

  CLI11_PARSE(app, argc, argv);

  try {
    if (selected >= 0 && selected < 6) {
      print_result(runner(resolve(opts[selected])));
    } else if (selected == 6) {
      for (const StageResult& r : cmd_full_run(resolve(opts[6])))
        print_result(r);
    } else if (selected == 7) {
      if (cmd_verify(resolve(opts[7]), std::cout) > 0) return 1;
    }
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const CheckError& e) {
    std::cerr << "check failed: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
