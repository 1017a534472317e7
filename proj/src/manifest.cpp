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

#include "dumbench/manifest.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <json.hpp>

namespace dumbench {

using nlohmann::json;

namespace {

json spec_to_json(const DatasetSpec& s) {
  return {{"id", s.id},           {"side", s.side},
          {"channels", s.channels}, {"identities", s.identities},
          {"per_identity", s.per_identity}, {"seed", s.seed}};
}

DatasetSpec spec_from_json(const json& j) {
  DatasetSpec s;
  s.id = j.at("id").get<std::string>();
  s.side = j.at("side").get<int>();
  s.channels = j.at("channels").get<int>();
  s.identities = j.at("identities").get<int>();
  s.per_identity = j.at("per_identity").get<int>();
  s.seed = j.at("seed").get<uint64_t>();
  return s;
}

json attack_to_json(const AttackSpec& a) {
  return {{"kind", attack_name(a.kind)},
          {"epsilon", a.epsilon},
          {"alpha", a.alpha},
          {"steps", a.steps},
          {"random_start", a.random_start},
          {"K", a.K},
          {"N", a.N},
          {"posterior_lr", a.posterior_lr},
          {"sigma_xi", a.sigma_xi},
          {"rho", a.rho},
          {"sigma_theta", a.sigma_theta}};
}

AttackSpec attack_from_json(const json& j) {
  AttackSpec a;
  a.kind = parse_attack(j.at("kind").get<std::string>());
  a.epsilon = j.at("epsilon").get<double>();
  a.alpha = j.at("alpha").get<double>();
  a.steps = j.at("steps").get<int>();
  a.random_start = j.at("random_start").get<bool>();
  a.K = j.at("K").get<int>();
  a.N = j.at("N").get<int>();
  a.posterior_lr = j.at("posterior_lr").get<double>();
  a.sigma_xi = j.at("sigma_xi").get<double>();
  a.rho = j.at("rho").get<double>();
  a.sigma_theta = j.at("sigma_theta").get<double>();
  return a;
}

json train_to_json(const TrainConfig& t) {
  return {{"epochs", t.epochs},   {"batch_size", t.batch_size},
          {"lr", t.lr},           {"patience", t.patience},
          {"seed", t.seed},       {"augment_flip", t.augment_flip},
          {"label_smoothing", t.label_smoothing},
          {"min_val_auc", t.min_val_auc}};
}

TrainConfig train_from_json(const json& j) {
  TrainConfig t;
  t.epochs = j.at("epochs").get<int>();
  t.batch_size = j.at("batch_size").get<int>();
  t.lr = j.at("lr").get<double>();
  t.patience = j.at("patience").get<int>();
  t.seed = j.at("seed").get<uint64_t>();
  t.augment_flip = j.at("augment_flip").get<bool>();
  t.label_smoothing = j.at("label_smoothing").get<double>();
  t.min_val_auc = j.at("min_val_auc").get<double>();
  return t;
}

std::vector<AttackSpec> default_attacks() {
  AttackSpec pgd, fgsm, fpba;
  pgd.kind = AttackKind::Pgd;
  fgsm.kind = AttackKind::Fgsm;
  fpba.kind = AttackKind::Fpba;
  fpba.steps = 4;  // posterior-averaged gradients need fewer iterations
  return {pgd, fgsm, fpba};
}

std::vector<std::string> all_strategy_ids() {
  std::vector<std::string> out;
  for (const ATStrategy& s : all_strategies()) out.push_back(s.id);
  return out;
}

}  // namespace

void ExperimentManifest::validate() const {
  if (preset != "desk" && preset != "paper-shape" && preset != "custom")
    throw ConfigError(concat("manifest: unknown preset ", preset));
  if (out_dir.empty()) throw ConfigError("manifest: out_dir is empty");
  if (workers < 1) throw ConfigError("manifest: workers must be >= 1");
  d1.validate();
  d2.validate();
  if (d1.id != "D1" || d2.id != "D2")
    throw ConfigError("manifest: dataset specs must be D1 and D2 in order");
  double rsum = split_ratios[0] + split_ratios[1] + split_ratios[2];
  if (std::abs(rsum - 1.0) > 1e-9)
    throw ConfigError(concat("manifest: split ratios sum to ", rsum));
  if (archs.size() < 2)
    throw ConfigError(
        "manifest: at least two architectures are required (cross-model "
        "cases have no cells otherwise)");
  std::set<std::string> seen_arch;
  for (const std::string& a : archs) {
    parse_arch(a);  // throws on unknown
    if (!seen_arch.insert(a).second)
      throw ConfigError(concat("manifest: duplicate architecture ", a));
  }
  if (attacks.empty()) throw ConfigError("manifest: no attacks");
  std::set<std::string> seen_attack;
  for (const AttackSpec& a : attacks) {
    a.validate();
    if (!seen_attack.insert(attack_name(a.kind)).second)
      throw ConfigError(concat("manifest: duplicate attack ",
                               attack_name(a.kind)));
  }
  if (strategies.empty()) throw ConfigError("manifest: no strategies");
  std::set<std::string> seen_strategy;
  for (const std::string& s : strategies) {
    const ATStrategy& meta = strategy_by_id(s);  // throws on unknown
    for (AttackKind k : meta.attacks)
      if (!seen_attack.count(attack_name(k)))
        throw ConfigError(concat("manifest: strategy ", s, " needs attack ",
                                 attack_name(k), " which is not configured"));
    if (!seen_strategy.insert(s).second)
      throw ConfigError(concat("manifest: duplicate strategy ", s));
  }
  if (std::find(strategies.begin(), strategies.end(), "Base") ==
      strategies.end())
    throw ConfigError("manifest: the Base strategy is required");
  if (train.epochs < 1 || train.batch_size < 1 || train.patience < 1 ||
      train.lr <= 0 || train.label_smoothing < 0 ||
      train.label_smoothing >= 0.5)
    throw ConfigError("manifest: invalid training configuration");
  if (amr_rule != "matched" && amr_rule != "base-mean")
    throw ConfigError(concat("manifest: unknown amr_rule ", amr_rule));
}

ExperimentManifest make_preset(const std::string& name) {
  ExperimentManifest m;
  m.preset = name;
  m.attacks = default_attacks();
  m.strategies = all_strategy_ids();
  m.train.batch_size = 32;
  if (name == "desk") {
    m.out_dir = "runs/desk";
    m.d1.id = "D1";
    m.d1.side = 16;
    m.d1.identities = 40;
    m.d1.per_identity = 10;
    m.d2 = m.d1;
    m.d2.id = "D2";
    m.archs = {"xcept-mu", "srm-mu", "recce-mu"};
    m.train.epochs = 120;
    m.train.patience = 25;
    m.train.lr = 3e-3;
    m.train.min_val_auc = 0.90;
  } else if (name == "paper-shape") {
    m.out_dir = "runs/paper-shape";
    m.d1.id = "D1";
    m.d1.side = 32;
    m.d1.identities = 100;
    m.d1.per_identity = 20;
    m.d2 = m.d1;
    m.d2.id = "D2";
    for (Arch a : kAllArchs) m.archs.push_back(arch_name(a));
    m.train.epochs = 120;
    m.train.patience = 25;
    m.train.lr = 3e-3;
    m.train.min_val_auc = 0.90;
  } else {
    throw ConfigError(concat("unknown preset: ", name));
  }
  apply_seed_override(m, 1);
  m.validate();
  return m;
}

void apply_seed_override(ExperimentManifest& m, uint64_t seed) {
  m.seed = seed;
  m.d1.seed = derive_seed(seed, "dataset:D1");
  m.d2.seed = derive_seed(seed, "dataset:D2");
  m.train.seed = derive_seed(seed, "train");
}

std::string manifest_to_json(const ExperimentManifest& m) {
  json j;
  j["preset"] = m.preset;
  j["seed"] = m.seed;
  j["out_dir"] = m.out_dir;
  j["workers"] = m.workers;
  j["datasets"] = {spec_to_json(m.d1), spec_to_json(m.d2)};
  j["split_ratios"] = m.split_ratios;
  j["archs"] = m.archs;
  j["attacks"] = json::array();
  for (const AttackSpec& a : m.attacks) j["attacks"].push_back(attack_to_json(a));
  j["strategies"] = m.strategies;
  j["train"] = train_to_json(m.train);
  j["eval"] = {{"only_originally_correct", m.eval_flags.only_originally_correct},
               {"amr_rule", m.amr_rule}};
  j["emit_plots"] = m.emit_plots;
  return j.dump(2) + "\n";
}

ExperimentManifest manifest_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(concat("manifest: invalid JSON: ", e.what()));
  }
  ExperimentManifest m;
  try {
    m.preset = j.at("preset").get<std::string>();
    m.seed = j.at("seed").get<uint64_t>();
    m.out_dir = j.at("out_dir").get<std::string>();
    m.workers = j.at("workers").get<int>();
    const json& ds = j.at("datasets");
    if (!ds.is_array() || ds.size() != 2)
      throw ConfigError("manifest: expected exactly two dataset specs");
    m.d1 = spec_from_json(ds[0]);
    m.d2 = spec_from_json(ds[1]);
    m.split_ratios = j.at("split_ratios").get<std::array<double, 3>>();
    m.archs = j.at("archs").get<std::vector<std::string>>();
    m.attacks.clear();
    for (const json& a : j.at("attacks")) m.attacks.push_back(attack_from_json(a));
    m.strategies = j.at("strategies").get<std::vector<std::string>>();
    m.train = train_from_json(j.at("train"));
    m.eval_flags.only_originally_correct =
        j.at("eval").at("only_originally_correct").get<bool>();
    m.amr_rule = j.at("eval").at("amr_rule").get<std::string>();
    m.emit_plots = j.at("emit_plots").get<bool>();
  } catch (const json::exception& e) {
    throw ConfigError(concat("manifest: missing or malformed field: ", e.what()));
  }
  m.validate();
  return m;
}

void save_manifest(const fs::path& path, const ExperimentManifest& m) {
  atomic_write_file(path, manifest_to_json(m));
}

ExperimentManifest load_manifest(const fs::path& path) {
  if (!fs::exists(path))
    throw ConfigError(concat("manifest not found: ", path.string()));
  return manifest_from_json(read_file(path));
}

uint64_t manifest_hash(const ExperimentManifest& m) {
  return fnv1a64(manifest_to_json(m));
}

int count_suites(const ExperimentManifest& m) {
  return 2 * (1 + int(m.attacks.size()) * int(m.archs.size()));
}

int count_models(const ExperimentManifest& m) {
  return int(m.archs.size()) * int(m.strategies.size());
}

int count_cells(const ExperimentManifest& m) {
  return count_models(m) * count_suites(m);
}

}  // namespace dumbench
