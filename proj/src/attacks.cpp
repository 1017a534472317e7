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

#include "dumbench/attacks.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "dumbench/optim.hpp"
#include "dumbench/transforms.hpp"

namespace dumbench {

namespace {

double sign0(double v) { return v > 0 ? 1.0 : (v < 0 ? -1.0 : 0.0); }

AdversarialSet init_set(const DetectorModel& surrogate, const LabeledBatch& batch,
                        const AttackSpec& spec) {
  AdversarialSet s;
  s.images = batch.images;
  s.originals = batch.images;
  s.labels = batch.labels;
  s.methods = batch.methods;
  s.identities = batch.identities;
  s.dataset = batch.dataset;
  s.surrogate_arch = arch_name(surrogate.arch);
  s.surrogate_provenance = surrogate.provenance;
  s.spec = spec;
  return s;
}

/// Loss gradient w.r.t. the current images; samples whose gradient slice is
/// non-finite are zeroed and flagged so callers can pass them through.
Tensor batch_gradient(const DetectorModel& model, const LabeledBatch& base,
                      const Tensor& images, std::vector<char>& bad) {
  LabeledBatch b = base;
  b.images = images;
  Tensor g = input_gradient(model, b);
  const int n = base.size();
  const Eigen::Index per = g.size() / n;
  for (int i = 0; i < n; ++i) {
    auto slice = g.data.segment(Eigen::Index(i) * per, per);
    if (!slice.isFinite().all()) {
      slice.setZero();
      bad[i] = 1;
    }
  }
  return g;
}

void project(Array& x, const Array& x0, double eps) {
  x = x.min(x0 + eps).max(x0 - eps).min(1.0).max(0.0);
}

/// Restore flagged samples to their originals and record the warning count.
void apply_passthrough(AdversarialSet& s, const std::vector<char>& bad) {
  const int n = s.size();
  const Eigen::Index per = s.images.size() / n;
  for (int i = 0; i < n; ++i) {
    if (!bad[i]) continue;
    s.images.data.segment(Eigen::Index(i) * per, per) =
        s.originals.data.segment(Eigen::Index(i) * per, per);
    ++s.warnings;
  }
}

}  // namespace

std::string attack_name(AttackKind k) {
  switch (k) {
    case AttackKind::Fgsm: return "FGSM";
    case AttackKind::Pgd: return "PGD";
    default: return "FPBA";
  }
}

AttackKind parse_attack(const std::string& name) {
  for (AttackKind k : {AttackKind::Fgsm, AttackKind::Pgd, AttackKind::Fpba})
    if (attack_name(k) == name) return k;
  throw ConfigError(concat("unknown attack: ", name));
}

void AttackSpec::validate() const {
  if (epsilon <= 0) throw ConfigError("attack spec: epsilon must be positive");
  if (steps < 1) throw ConfigError("attack spec: steps must be >= 1");
  if (K < 1) throw ConfigError("attack spec: K must be >= 1");
  if (N < 1) throw ConfigError("attack spec: N must be >= 1");
  if (kind == AttackKind::Pgd && alpha <= 0)
    throw ConfigError("attack spec: alpha must be positive");
}

AdversarialSet fgsm(const DetectorModel& surrogate, const LabeledBatch& batch,
                    const AttackSpec& spec) {
  if (spec.kind != AttackKind::Fgsm)
    throw ConfigError("fgsm: spec.kind mismatch");
  spec.validate();
  AdversarialSet s = init_set(surrogate, batch, spec);
  std::vector<char> bad(batch.size(), 0);
  Tensor g = batch_gradient(surrogate, batch, s.originals, bad);
  s.images.data =
      (s.originals.data + spec.epsilon * g.data.unaryExpr(&sign0)).min(1.0).max(0.0);
  apply_passthrough(s, bad);
  return s;
}

AdversarialSet pgd(const DetectorModel& surrogate, const LabeledBatch& batch,
                   const AttackSpec& spec) {
  if (spec.kind != AttackKind::Pgd) throw ConfigError("pgd: spec.kind mismatch");
  spec.validate();
  AdversarialSet s = init_set(surrogate, batch, spec);
  std::vector<char> bad(batch.size(), 0);

  if (spec.random_start) {
    auto rng = make_rng(derive_seed(spec.seed, "pgd:start"));
    std::uniform_real_distribution<double> u(-spec.epsilon, spec.epsilon);
    for (Eigen::Index i = 0; i < s.images.size(); ++i) s.images.data(i) += u(rng);
    project(s.images.data, s.originals.data, spec.epsilon);
  }
  for (int t = 0; t < spec.steps; ++t) {
    Tensor g = batch_gradient(surrogate, batch, s.images, bad);
    s.images.data += spec.alpha * g.data.unaryExpr(&sign0);
    project(s.images.data, s.originals.data, spec.epsilon);
  }
  apply_passthrough(s, bad);
  return s;
}

Tensor spectrum_transform(const Tensor& images, double sigma_xi, double rho,
                          std::mt19937_64& rng) {
  if (images.shape.size() != 4)
    throw ConfigError("spectrum_transform: expected NCHW images");
  const int H = images.shape[2], W = images.shape[3];
  const int planes = int(images.size() / (Eigen::Index(H) * W));
  std::normal_distribution<double> noise(0.0, sigma_xi);
  std::uniform_real_distribution<double> mask(1.0 - rho, 1.0 + rho);

  Tensor out = images;
  using RowMat =
      Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  for (int p = 0; p < planes; ++p) {
    Eigen::Map<RowMat> plane(out.data.data() + Eigen::Index(p) * H * W, H, W);
    Eigen::MatrixXd x = plane;
    if (sigma_xi > 0)
      for (int i = 0; i < H; ++i)
        for (int j = 0; j < W; ++j) x(i, j) += noise(rng);
    Eigen::MatrixXd d = dct2d(x);
    if (rho > 0)
      for (int i = 0; i < H; ++i)
        for (int j = 0; j < W; ++j) d(i, j) *= mask(rng);
    plane = idct2d(d);
  }
  return out;
}

std::vector<DetectorModel> sample_appended_models(const DetectorModel& surrogate,
                                                  const LabeledBatch& trainset,
                                                  const AttackSpec& spec) {
  if (trainset.size() == 0)
    throw ConfigError("sample_appended_models: empty trainset");
  const int mb = std::min(32, trainset.size());
  const Eigen::Index per = trainset.images.size() / trainset.size();

  std::vector<DetectorModel> variants;
  for (int k = 0; k < spec.K; ++k) {
    auto rng = make_rng(derive_seed(spec.seed, concat("fpba:append:", k)));
    std::uniform_int_distribution<int> pick(0, trainset.size() - 1);
    LabeledBatch mini;
    mini.dataset = trainset.dataset;
    mini.images = Tensor::zeros({mb, trainset.images.shape[1],
                                 trainset.images.shape[2],
                                 trainset.images.shape[3]});
    for (int i = 0; i < mb; ++i) {
      int j = pick(rng);
      mini.images.data.segment(Eigen::Index(i) * per, per) =
          trainset.images.data.segment(Eigen::Index(j) * per, per);
      mini.labels.push_back(trainset.labels[j]);
      if (!trainset.methods.empty()) mini.methods.push_back(trainset.methods[j]);
      if (!trainset.identities.empty())
        mini.identities.push_back(trainset.identities[j]);
    }

    DetectorModel v = surrogate;
    if (spec.posterior_lr > 0) {
      std::vector<Array> grads = parameter_gradient(v, mini);
      OptimizerState opt = make_optimizer(OptimizerKind::Sgd, spec.posterior_lr);
      std::vector<Tensor*> params;
      for (auto& p : v.params) params.push_back(&p.value);
      optimizer_step(opt, params, grads);
    }
    if (spec.sigma_theta > 0) {
      std::normal_distribution<double> noise(0.0, spec.sigma_theta);
      for (auto& p : v.params)
        for (Eigen::Index i = 0; i < p.value.size(); ++i)
          p.value.data(i) += noise(rng);
    }
    variants.push_back(std::move(v));
  }
  return variants;
}

AdversarialSet fpba(const DetectorModel& surrogate, const LabeledBatch& trainset,
                    const LabeledBatch& batch, const AttackSpec& spec) {
  if (spec.kind != AttackKind::Fpba)
    throw ConfigError("fpba: spec.kind mismatch");
  spec.validate();
  AdversarialSet s = init_set(surrogate, batch, spec);
  std::vector<char> bad(batch.size(), 0);
  std::vector<DetectorModel> models = sample_appended_models(surrogate, trainset, spec);
  const double alpha_f = spec.epsilon / spec.steps;
  auto rng = make_rng(derive_seed(spec.seed, "fpba:spectrum"));

  for (int t = 0; t < spec.steps; ++t) {
    Array acc = Array::Zero(s.images.size());
    for (const DetectorModel& m : models)
      for (int n = 0; n < spec.N; ++n) {
        Tensor xt = spectrum_transform(s.images, spec.sigma_xi, spec.rho, rng);
        Tensor g = batch_gradient(m, batch, xt, bad);
        acc += g.data / double(models.size() * spec.N);
      }
    s.images.data += alpha_f * acc.unaryExpr(&sign0);
    project(s.images.data, s.originals.data, spec.epsilon);
  }
  apply_passthrough(s, bad);
  return s;
}

AdversarialSet craft(const DetectorModel& surrogate, const LabeledBatch& trainset,
                     const LabeledBatch& batch, const AttackSpec& spec) {
  switch (spec.kind) {
    case AttackKind::Fgsm: return fgsm(surrogate, batch, spec);
    case AttackKind::Pgd: return pgd(surrogate, batch, spec);
    default: return fpba(surrogate, trainset, batch, spec);
  }
}

std::vector<TestSuite> craft_test_suites(
    const std::vector<DetectorModel>& nominal_models,
    const std::vector<AttackSpec>& attacks,
    const std::map<std::string, LabeledBatch>& test_batches,
    const std::map<std::string, LabeledBatch>& train_batches, uint64_t seed) {
  for (const DetectorModel& m : nominal_models)
    if (m.provenance.strategy != "Base")
      throw ConfigError(concat("craft_test_suites: model ", arch_name(m.arch),
                               " is not a nominal (Base) model, got strategy ",
                               m.provenance.strategy));

  std::vector<TestSuite> suites;
  for (const auto& [dataset, test] : test_batches) {
    TestSuite clean;
    clean.id = concat(dataset, "/clean");
    clean.dataset = dataset;
    clean.attack = "clean";
    clean.set.images = test.images;
    clean.set.originals = test.images;
    clean.set.labels = test.labels;
    clean.set.methods = test.methods;
    clean.set.identities = test.identities;
    clean.set.dataset = dataset;
    suites.push_back(std::move(clean));

    auto train_it = train_batches.find(dataset);
    for (const AttackSpec& a : attacks)
      for (const DetectorModel& m : nominal_models) {
        if (a.kind == AttackKind::Fpba && train_it == train_batches.end())
          throw ConfigError(concat("craft_test_suites: FPBA needs a train batch "
                                   "for dataset ", dataset));
        TestSuite ts;
        ts.id = concat(dataset, "/", attack_name(a.kind), "/", arch_name(m.arch));
        ts.dataset = dataset;
        ts.attack = attack_name(a.kind);
        ts.surrogate = arch_name(m.arch);
        AttackSpec spec = a;
        spec.seed = derive_seed(seed, ts.id);
        ts.set = craft(m, train_it == train_batches.end() ? test : train_it->second,
                       test, spec);
        suites.push_back(std::move(ts));
      }
  }
  return suites;
}

double budget_check(const AdversarialSet& set) {
  if (set.images.size() != set.originals.size())
    throw CheckError("budget_check: image/original size mismatch");
  const int n = set.size();
  const Eigen::Index per = set.images.size() / std::max(1, n);
  double worst = 0.0;
  for (int i = 0; i < n; ++i) {
    auto adv = set.images.data.segment(Eigen::Index(i) * per, per);
    auto orig = set.originals.data.segment(Eigen::Index(i) * per, per);
    double dev = (adv - orig).abs().maxCoeff();
    worst = std::max(worst, dev);
    if (dev > set.spec.epsilon + 1e-6)
      throw CheckError(concat("budget_check: sample ", i, " exceeds budget (",
                              dev, " > ", set.spec.epsilon, " + 1e-6)"));
    if (adv.minCoeff() < 0.0 || adv.maxCoeff() > 1.0)
      throw CheckError(concat("budget_check: sample ", i, " leaves [0,1]"));
  }
  return worst;
}

void save_adversarial_set(const fs::path& dir, const AdversarialSet& set) {
  fs::create_directories(dir);
  write_f64_blob(dir / "images.f64", set.images);
  write_f64_blob(dir / "originals.f64", set.originals);
  nlohmann::json j;
  j["labels"] = set.labels;
  j["methods"] = set.methods;
  j["identities"] = set.identities;
  j["dataset"] = set.dataset;
  j["surrogate_arch"] = set.surrogate_arch;
  j["provenance"] = {{"dataset", set.surrogate_provenance.dataset},
                     {"strategy", set.surrogate_provenance.strategy},
                     {"seed", set.surrogate_provenance.seed}};
  j["warnings"] = set.warnings;
  j["spec"] = {{"kind", attack_name(set.spec.kind)},
               {"epsilon", set.spec.epsilon},
               {"alpha", set.spec.alpha},
               {"steps", set.spec.steps},
               {"random_start", set.spec.random_start},
               {"K", set.spec.K},
               {"N", set.spec.N},
               {"posterior_lr", set.spec.posterior_lr},
               {"sigma_xi", set.spec.sigma_xi},
               {"rho", set.spec.rho},
               {"sigma_theta", set.spec.sigma_theta},
               {"seed", set.spec.seed}};
  atomic_write_file(dir / "set.json", j.dump(2) + "\n");
}

AdversarialSet load_adversarial_set(const fs::path& dir) {
  AdversarialSet s;
  s.images = read_f64_blob(dir / "images.f64");
  s.originals = read_f64_blob(dir / "originals.f64");
  nlohmann::json j = nlohmann::json::parse(read_file(dir / "set.json"));
  s.labels = j.at("labels").get<std::vector<double>>();
  s.methods = j.at("methods").get<std::vector<int>>();
  s.identities = j.at("identities").get<std::vector<int>>();
  s.dataset = j.at("dataset").get<std::string>();
  s.surrogate_arch = j.at("surrogate_arch").get<std::string>();
  const auto& p = j.at("provenance");
  s.surrogate_provenance = {p.at("dataset").get<std::string>(),
                            p.at("strategy").get<std::string>(),
                            p.at("seed").get<uint64_t>()};
  s.warnings = j.at("warnings").get<int>();
  const auto& sp = j.at("spec");
  s.spec.kind = parse_attack(sp.at("kind").get<std::string>());
  s.spec.epsilon = sp.at("epsilon").get<double>();
  s.spec.alpha = sp.at("alpha").get<double>();
  s.spec.steps = sp.at("steps").get<int>();
  s.spec.random_start = sp.at("random_start").get<bool>();
  s.spec.K = sp.at("K").get<int>();
  s.spec.N = sp.at("N").get<int>();
  s.spec.posterior_lr = sp.at("posterior_lr").get<double>();
  s.spec.sigma_xi = sp.at("sigma_xi").get<double>();
  s.spec.rho = sp.at("rho").get<double>();
  s.spec.sigma_theta = sp.at("sigma_theta").get<double>();
  s.spec.seed = sp.at("seed").get<uint64_t>();
  return s;
}

}  // namespace dumbench
