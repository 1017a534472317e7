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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "dumbench/attacks.hpp"
#include "testutil.hpp"

using namespace dumbench;
using dumbench::test::random_batch;

namespace {

AttackSpec make_spec(AttackKind k, uint64_t seed = 1) {
  AttackSpec s;
  s.kind = k;
  s.seed = seed;
  return s;
}

/// Xcept variant whose logit is strictly increasing in every pixel: all
/// weights made positive, biases pushed deep into the smooth-relu linear
/// region. With label 0 the loss gradient is positive everywhere.
DetectorModel monotone_model() {
  DetectorModel m = build(Arch::Xcept, 5);
  for (auto& p : m.params) {
    p.value.data = p.value.data.abs();
    if (p.name.find(".b") != std::string::npos)
      p.value.data = Array::Constant(p.value.size(), 1.0);
  }
  return m;
}

LabeledBatch constant_batch(double v, int n = 2, int side = 8) {
  LabeledBatch b;
  b.images = Tensor({n, 3, side, side},
                    Array::Constant(Eigen::Index(n) * 3 * side * side, v));
  b.dataset = "D1";
  for (int i = 0; i < n; ++i) {
    b.labels.push_back(0.0);
    b.methods.push_back(0);
    b.identities.push_back(i);
  }
  return b;
}

}  // namespace

TEST_CASE("fgsm with an input-independent model leaves images untouched") {
  DetectorModel m = build(Arch::Xcept, 1);
  for (auto& p : m.params) p.value.data.setZero();
  LabeledBatch b = random_batch(4, 8, 2);
  AdversarialSet s = fgsm(m, b, make_spec(AttackKind::Fgsm));
  CHECK((s.images.data == b.images.data).all());
  CHECK(s.warnings == 0);
}

TEST_CASE("fgsm takes a saturating step and respects the [0,1] clip") {
  DetectorModel m = monotone_model();
  LabeledBatch b = constant_batch(0.5);
  b.images.data(0) = 1.0;
  AttackSpec spec = make_spec(AttackKind::Fgsm);
  AdversarialSet s = fgsm(m, b, spec);
  CHECK(s.images.data(0) == 1.0);
  for (Eigen::Index i = 1; i < s.images.size(); ++i)
    CHECK(s.images.data(i) == 0.5 + spec.epsilon);
}

TEST_CASE("pgd epsilon projection is active when alpha*steps exceeds epsilon") {
  DetectorModel m = monotone_model();
  LabeledBatch b = constant_batch(0.5);
  AttackSpec spec = make_spec(AttackKind::Pgd);
  spec.random_start = false;
  // 10 * 2/255 = 20/255 of raw movement against a 9/255 ball
  AdversarialSet s = pgd(m, b, spec);
  double dev = (s.images.data - s.originals.data).abs().maxCoeff();
  CHECK(dev == doctest::Approx(spec.epsilon).epsilon(1e-12));
}

TEST_CASE("single-step pgd without random start equals fgsm") {
  DetectorModel m = build(Arch::Srm, 9);
  LabeledBatch b = random_batch(4, 8, 10);
  AttackSpec p = make_spec(AttackKind::Pgd, 3);
  p.steps = 1;
  p.random_start = false;
  p.alpha = p.epsilon;
  AttackSpec f = make_spec(AttackKind::Fgsm, 3);
  AdversarialSet sp = pgd(m, b, p);
  AdversarialSet sf = fgsm(m, b, f);
  CHECK((sp.images.data == sf.images.data).all());
}

TEST_CASE("spectrum transform") {
  Tensor x = dumbench::test::random_tensor({2, 3, 8, 8}, 4);
  SUBCASE("degenerate parameters give the identity within 1e-6") {
    auto rng = make_rng(1);
    Tensor y = spectrum_transform(x, 0.0, 0.0, rng);
    CHECK((y.data - x.data).abs().maxCoeff() < 1e-6);
  }
  SUBCASE("output differs across seeds") {
    auto r1 = make_rng(1), r2 = make_rng(2);
    Tensor a = spectrum_transform(x, 0.01, 0.25, r1);
    Tensor b = spectrum_transform(x, 0.01, 0.25, r2);
    CHECK((a.data != b.data).any());
  }
  SUBCASE("mean over many draws recovers the input") {
    Tensor small = dumbench::test::random_tensor({1, 1, 8, 8}, 6);
    auto rng = make_rng(7);
    Array mean = Array::Zero(small.size());
    const int draws = 1000;
    for (int i = 0; i < draws; ++i)
      mean += spectrum_transform(small, 0.01, 0.25, rng).data / draws;
    CHECK((mean - small.data).abs().maxCoeff() < 0.02);
  }
}

TEST_CASE("appended models") {
  DetectorModel m = build(Arch::Spsl, 11);
  LabeledBatch train = random_batch(16, 8, 12);
  SUBCASE("zero posterior lr and zero noise reproduce the surrogate") {
    AttackSpec spec = make_spec(AttackKind::Fpba);
    spec.posterior_lr = 0.0;
    spec.sigma_theta = 0.0;
    auto vs = sample_appended_models(m, train, spec);
    REQUIRE(int(vs.size()) == spec.K);
    for (const auto& v : vs)
      for (size_t p = 0; p < v.params.size(); ++p)
        CHECK((v.params[p].value.data == m.params[p].value.data).all());
  }
  SUBCASE("default spec yields K distinct variants, surrogate untouched") {
    Array before = m.params[0].value.data;
    AttackSpec spec = make_spec(AttackKind::Fpba);
    auto vs = sample_appended_models(m, train, spec);
    CHECK(int(vs.size()) == 3);
    for (const auto& v : vs) {
      bool diff = false;
      for (size_t p = 0; p < v.params.size() && !diff; ++p)
        diff = (v.params[p].value.data != m.params[p].value.data).any();
      CHECK(diff);
    }
    CHECK((m.params[0].value.data == before).all());
  }
  SUBCASE("empty trainset is rejected") {
    LabeledBatch empty;
    CHECK_THROWS_AS(sample_appended_models(m, empty, make_spec(AttackKind::Fpba)),
                    ConfigError);
  }
}

TEST_CASE("degenerate fpba reduces to pgd without random start") {
  DetectorModel m = build(Arch::Ucf, 13);
  LabeledBatch train = random_batch(16, 8, 14);
  LabeledBatch b = random_batch(4, 8, 15);
  AttackSpec fs = make_spec(AttackKind::Fpba, 8);
  fs.K = 1;
  fs.N = 1;
  fs.rho = 0.0;
  fs.sigma_xi = 0.0;
  fs.sigma_theta = 0.0;
  fs.posterior_lr = 0.0;
  AttackSpec ps = make_spec(AttackKind::Pgd, 8);
  ps.random_start = false;
  ps.alpha = ps.epsilon / ps.steps;
  AdversarialSet a = fpba(m, train, b, fs);
  AdversarialSet p = pgd(m, b, ps);
  CHECK((a.images.data - p.images.data).abs().maxCoeff() < 1e-9);
}

TEST_CASE("all three attacks respect the budget on every sample") {
  LabeledBatch train = random_batch(16, 8, 20);
  LabeledBatch b = random_batch(8, 8, 21);
  for (Arch arch : {Arch::Xcept, Arch::Spsl, Arch::Recce}) {
    DetectorModel m = build(arch, 22);
    for (AttackKind k : {AttackKind::Fgsm, AttackKind::Pgd, AttackKind::Fpba}) {
      AdversarialSet s = craft(m, train, b, make_spec(k, 23));
      CHECK(budget_check(s) <= s.spec.epsilon + 1e-6);
    }
  }
}

TEST_CASE("crafting is deterministic given the seed") {
  DetectorModel m = build(Arch::Srm, 30);
  LabeledBatch train = random_batch(16, 8, 31);
  LabeledBatch b = random_batch(4, 8, 32);
  for (AttackKind k : {AttackKind::Fgsm, AttackKind::Pgd, AttackKind::Fpba}) {
    AdversarialSet a = craft(m, train, b, make_spec(k, 33));
    AdversarialSet c = craft(m, train, b, make_spec(k, 33));
    CHECK((a.images.data == c.images.data).all());
  }
}

TEST_CASE("budget_check flags a corrupted sample by index") {
  DetectorModel m = build(Arch::Xcept, 40);
  LabeledBatch b = random_batch(4, 8, 41);
  AdversarialSet s = fgsm(m, b, make_spec(AttackKind::Fgsm));
  CHECK(budget_check(s) >= 0.0);

  const Eigen::Index per = s.images.size() / s.size();
  Eigen::Index i = 2 * per + 5;
  s.images.data(i) = std::min(1.0, s.originals.data(i) + 10.0 / 255.0);
  if (s.images.data(i) - s.originals.data(i) < 10.0 / 255.0)
    s.images.data(i) = s.originals.data(i) - 10.0 / 255.0;
  CHECK_THROWS_WITH_AS(budget_check(s), doctest::Contains("sample 2"),
                       CheckError);
}

TEST_CASE("adversarial set roundtrips through the cache format") {
  DetectorModel m = build(Arch::Spsl, 50);
  LabeledBatch b = random_batch(4, 8, 51);
  AdversarialSet s = pgd(m, b, make_spec(AttackKind::Pgd, 52));
  fs::path dir = fs::temp_directory_path() / "dumbench_advset_rt";
  fs::remove_all(dir);
  save_adversarial_set(dir, s);
  AdversarialSet r = load_adversarial_set(dir);
  fs::remove_all(dir);
  CHECK((r.images.data == s.images.data).all());
  CHECK((r.originals.data == s.originals.data).all());
  CHECK(r.labels == s.labels);
  CHECK(r.surrogate_arch == s.surrogate_arch);
  CHECK(r.spec.seed == s.spec.seed);
  CHECK(attack_name(r.spec.kind) == "PGD");
}

TEST_CASE("craft_test_suites enumerates the expected grid") {
  std::vector<DetectorModel> nominal;
  for (Arch a : {Arch::Xcept, Arch::Spsl, Arch::Srm}) {
    DetectorModel m = build(a, 60);
    m.provenance = {"D1", "Base", 60};
    nominal.push_back(std::move(m));
  }
  std::vector<AttackSpec> attacks{make_spec(AttackKind::Fgsm),
                                  make_spec(AttackKind::Pgd)};
  std::map<std::string, LabeledBatch> tests{{"D1", random_batch(6, 8, 61)},
                                            {"D2", random_batch(6, 8, 62)}};
  std::map<std::string, LabeledBatch> trains{{"D1", random_batch(8, 8, 63)},
                                             {"D2", random_batch(8, 8, 64)}};
  auto suites = craft_test_suites(nominal, attacks, tests, trains, 65);
  CHECK(int(suites.size()) == 14);  // 2 x (1 clean + 2 attacks x 3 surrogates)
  int clean = 0;
  for (const auto& s : suites) {
    if (s.attack == "clean") {
      ++clean;
      CHECK((s.set.images.data == s.set.originals.data).all());
    } else {
      CHECK_NOTHROW(budget_check(s.set));
    }
  }
  CHECK(clean == 2);

  nominal[1].provenance.strategy = "PGD";
  CHECK_THROWS_AS(craft_test_suites(nominal, attacks, tests, trains, 65),
                  ConfigError);
}
