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

#include "dumbench/training.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

#include "dumbench/eval.hpp"
#include "dumbench/optim.hpp"

namespace dumbench {

const std::vector<ATStrategy>& all_strategies() {
  using K = AttackKind;
  static const std::vector<ATStrategy> s = {
      {"Base", {}, false, false, 0.20},
      {"PGD", {K::Pgd}, false, false, 0.20},
      {"FGSM", {K::Fgsm}, false, false, 0.20},
      {"FPBA", {K::Fpba}, false, false, 0.20},
      {"PGD+FGSM", {K::Pgd, K::Fgsm}, false, true, 0.20},
      {"PGD+FPBA", {K::Pgd, K::Fpba}, false, true, 0.20},
      {"FGSM+FPBA", {K::Fgsm, K::Fpba}, false, true, 0.20},
      {"Ens", {K::Pgd, K::Fgsm, K::Fpba}, false, false, 0.20},
      {"PGD_surr", {K::Pgd}, true, false, 0.20},
      {"FGSM_surr", {K::Fgsm}, true, false, 0.20},
      {"FPBA_surr", {K::Fpba}, true, false, 0.20},
      {"Ens_Surr", {K::Pgd, K::Fgsm, K::Fpba}, true, false, 0.20},
  };
  return s;
}

const ATStrategy& strategy_by_id(const std::string& id) {
  for (const ATStrategy& s : all_strategies())
    if (s.id == id) return s;
  throw ConfigError(concat("unknown strategy: ", id));
}

AttackKind held_out_attack(const ATStrategy& dual) {
  if (!dual.is_dual)
    throw ConfigError(concat("strategy ", dual.id, " is not a dual strategy"));
  for (AttackKind k : {AttackKind::Fgsm, AttackKind::Pgd, AttackKind::Fpba})
    if (std::find(dual.attacks.begin(), dual.attacks.end(), k) ==
        dual.attacks.end())
      return k;
  throw ConfigError("dual strategy covers all attacks");
}

namespace {

LabeledBatch subset(const LabeledBatch& b, const std::vector<int>& ids) {
  LabeledBatch out;
  out.dataset = b.dataset;
  const Eigen::Index per = b.images.size() / b.size();
  out.images = Tensor::zeros({int(ids.size()), b.images.shape[1],
                              b.images.shape[2], b.images.shape[3]});
  for (size_t i = 0; i < ids.size(); ++i) {
    out.images.data.segment(Eigen::Index(i) * per, per) =
        b.images.data.segment(Eigen::Index(ids[i]) * per, per);
    out.labels.push_back(b.labels[ids[i]]);
    if (!b.methods.empty()) out.methods.push_back(b.methods[ids[i]]);
    if (!b.identities.empty()) out.identities.push_back(b.identities[ids[i]]);
  }
  return out;
}

void hflip_sample(LabeledBatch& b, int i) {
  const int C = b.images.shape[1], H = b.images.shape[2], W = b.images.shape[3];
  double* base = b.images.data.data() + Eigen::Index(i) * C * H * W;
  for (int c = 0; c < C; ++c)
    for (int r = 0; r < H; ++r) {
      double* row = base + (Eigen::Index(c) * H + r) * W;
      std::reverse(row, row + W);
    }
}

TrainResult fit(Arch arch, const std::string& tag, const std::string& strategy,
                const LabeledBatch& train, const LabeledBatch& val,
                const TrainConfig& cfg) {
  if (train.size() == 0 || val.size() == 0)
    throw ConfigError("fit: empty train or validation partition");

  TrainResult res;
  res.model = build(arch, derive_seed(cfg.seed, concat("init:", tag)));
  res.model.provenance = {train.dataset, strategy, cfg.seed};
  OptimizerState opt = make_optimizer(OptimizerKind::Adam, cfg.lr);
  auto rng = make_rng(derive_seed(cfg.seed, concat("train:", tag)));
  std::uniform_real_distribution<double> coin(0.0, 1.0);

  std::vector<NamedParam> best_params = res.model.params;
  double best = -1.0;
  double best_loss = std::numeric_limits<double>::infinity();
  int stall = 0;

  std::vector<int> order(train.size());
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0;
    int batches = 0;
    for (int start = 0; start < train.size(); start += cfg.batch_size) {
      int end = std::min(train.size(), start + cfg.batch_size);
      std::vector<int> ids(order.begin() + start, order.begin() + end);
      LabeledBatch mb = subset(train, ids);
      if (cfg.augment_flip)
        for (int i = 0; i < mb.size(); ++i)
          if (coin(rng) < 0.5) hflip_sample(mb, i);
      if (cfg.label_smoothing > 0)
        for (double& y : mb.labels)
          y = y * (1 - 2 * cfg.label_smoothing) + cfg.label_smoothing;
      std::vector<Array> grads;
      LossBreakdown l = loss_and_param_grads(res.model, mb, grads);
      std::vector<Tensor*> params;
      for (auto& p : res.model.params) params.push_back(&p.value);
      optimizer_step(opt, params, grads);
      epoch_loss += l.total;
      ++batches;
    }
    double val_auc = auc(predict_scores(res.model, val.images), val.labels);
    double val_loss = detector_loss(res.model, val).total;
    res.log.push_back({epoch, epoch_loss / std::max(1, batches), val_auc});
    // AUC decides, validation loss breaks near-ties so the retained
    // checkpoint is also calibrated once ranking saturates
    if (val_auc > best + 1e-12 ||
        (val_auc > best - 0.01 && val_loss < best_loss - 1e-12)) {
      best = std::max(best, val_auc);
      best_loss = val_loss;
      best_params = res.model.params;
      stall = 0;
    } else if (++stall >= cfg.patience) {
      break;
    }
  }
  res.model.params = std::move(best_params);
  res.best_val_auc = best;
  if (best <= cfg.min_val_auc)
    throw CheckError(concat("detector failed to learn: ", arch_name(arch), "/",
                            strategy, " best validation AUC ", best,
                            " <= ", cfg.min_val_auc));
  return res;
}

}  // namespace

TrainResult train_nominal(Arch arch, const LabeledBatch& train,
                          const LabeledBatch& val, const TrainConfig& cfg) {
  return fit(arch, concat("nominal:", arch_name(arch)), "Base", train, val, cfg);
}

std::vector<int> divide_cells(int total, int ncells) {
  if (ncells <= 0 || total < ncells)
    throw ConfigError(concat("divide_cells: cannot divide ", total,
                             " samples across ", ncells, " cells"));
  std::vector<int> out(ncells, total / ncells);
  const int rem = total % ncells;
  for (int i = ncells - rem; i < ncells; ++i) ++out[i];
  return out;
}

LabeledBatch build_at_trainset(const ATStrategy& strategy, Arch trainee,
                               const LabeledBatch& clean_train,
                               const std::vector<DetectorModel>& nominal_surrogates,
                               const std::map<AttackKind, AttackSpec>& attack_specs,
                               uint64_t seed) {
  if (strategy.id == "Base")
    throw ConfigError("build_at_trainset: Base strategy has no adversarial mix");
  const int n = clean_train.size();
  const int adv = int(std::lround(strategy.mix * n));
  const int keep = n - adv;

  // resolve surrogate scope
  std::vector<const DetectorModel*> surrogates;
  if (strategy.all_surrogates) {
    for (const DetectorModel& m : nominal_surrogates) surrogates.push_back(&m);
  } else {
    for (const DetectorModel& m : nominal_surrogates)
      if (m.arch == trainee) surrogates.push_back(&m);
    if (surrogates.empty())
      throw ConfigError(concat("build_at_trainset: no nominal surrogate for ",
                               arch_name(trainee)));
  }
  const int ncells = int(strategy.attacks.size() * surrogates.size());
  if (ncells > adv)
    throw ConfigError(concat("build_at_trainset: ", ncells,
                             " source cells exceed the adversarial budget of ",
                             adv, " samples"));

  auto rng = make_rng(derive_seed(seed, concat("atmix:", strategy.id, ":",
                                               arch_name(trainee))));
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<int> kept(order.begin(), order.begin() + keep);

  // sources come from the kept clean samples so pairing is preserved
  LabeledBatch mixed = subset(clean_train, kept);
  const std::vector<int> cell_sizes = divide_cells(adv, ncells);
  int cursor = 0, cell = 0;
  std::vector<LabeledBatch> adv_parts;
  for (AttackKind k : strategy.attacks)
    for (const DetectorModel* s : surrogates) {
      int count = cell_sizes[cell];
      std::vector<int> src(kept.begin() + cursor, kept.begin() + cursor + count);
      cursor += count;
      LabeledBatch src_batch = subset(clean_train, src);
      AttackSpec spec = attack_specs.at(k);
      spec.seed = derive_seed(seed, concat("atcraft:", strategy.id, ":",
                                           arch_name(trainee), ":cell", cell));
      AdversarialSet aset = craft(*s, clean_train, src_batch, spec);
      src_batch.images = aset.images;  // true labels stay
      adv_parts.push_back(std::move(src_batch));
      ++cell;
    }

  // concatenate clean + adversarial
  LabeledBatch out;
  out.dataset = clean_train.dataset;
  int total = mixed.size();
  for (const auto& p : adv_parts) total += p.size();
  out.images = Tensor::zeros({total, clean_train.images.shape[1],
                              clean_train.images.shape[2],
                              clean_train.images.shape[3]});
  const Eigen::Index per = out.images.size() / total;
  Eigen::Index off = 0;
  auto append = [&](const LabeledBatch& p) {
    out.images.data.segment(off, p.images.size()) = p.images.data;
    off += p.images.size();
    out.labels.insert(out.labels.end(), p.labels.begin(), p.labels.end());
    out.methods.insert(out.methods.end(), p.methods.begin(), p.methods.end());
    out.identities.insert(out.identities.end(), p.identities.begin(),
                          p.identities.end());
  };
  (void)per;
  append(mixed);
  for (const auto& p : adv_parts) append(p);
  return out;
}

TrainResult adversarial_train(const ATStrategy& strategy, Arch arch,
                              const LabeledBatch& clean_train,
                              const LabeledBatch& val,
                              const std::vector<DetectorModel>& nominal_surrogates,
                              const std::map<AttackKind, AttackSpec>& attack_specs,
                              const TrainConfig& cfg) {
  if (strategy.id == "Base")
    return train_nominal(arch, clean_train, val, cfg);
  LabeledBatch mixed = build_at_trainset(strategy, arch, clean_train,
                                         nominal_surrogates, attack_specs,
                                         cfg.seed);
  return fit(arch, concat("at:", strategy.id, ":", arch_name(arch)), strategy.id,
             mixed, val, cfg);
}

}  // namespace dumbench
