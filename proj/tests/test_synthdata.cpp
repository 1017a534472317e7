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
#include <set>

#include "dumbench/synthdata.hpp"
#include "dumbench/transforms.hpp"

using namespace dumbench;

namespace {

DatasetSpec d1_spec() {
  DatasetSpec s;
  s.id = "D1";
  s.identities = 20;
  s.per_identity = 10;
  s.seed = 77;
  return s;
}

// Energy in the DCT coefficients above the anti-diagonal, summed over
// channels.
double hf_energy(const Tensor& img) {
  const int C = img.shape[0], H = img.shape[1], W = img.shape[2];
  double total = 0.0;
  for (int c = 0; c < C; ++c) {
    Eigen::MatrixXd ch(H, W);
    for (int i = 0; i < H; ++i)
      for (int j = 0; j < W; ++j) ch(i, j) = img.data((Eigen::Index(c) * H + i) * W + j);
    Eigen::MatrixXd d = dct2d(ch);
    for (int i = 0; i < H; ++i)
      for (int j = 0; j < W; ++j)
        if (i + j >= H) total += d(i, j) * d(i, j);
  }
  return total;
}

}  // namespace

TEST_CASE("D1 counts: 200 samples, balanced labels, methods 0..4") {
  Dataset data = generate(d1_spec());
  CHECK(int(data.samples.size()) == 200);
  int reals = 0, fakes = 0;
  std::set<int> methods;
  for (const auto& s : data.samples) {
    (s.label == 0 ? reals : fakes)++;
    methods.insert(s.method);
    if (s.label == 0) CHECK(s.method == 0);
    else CHECK(s.method >= 1);
  }
  CHECK(reals == 100);
  CHECK(fakes == 100);
  CHECK(methods == std::set<int>{0, 1, 2, 3, 4});
}

TEST_CASE("D2 fakes all carry method id 5") {
  DatasetSpec s = d1_spec();
  s.id = "D2";
  Dataset data = generate(s);
  for (const auto& smp : data.samples)
    if (smp.label == 1) CHECK(smp.method == 5);
}

TEST_CASE("generation is deterministic given the seed") {
  Dataset a = generate(d1_spec());
  Dataset b = generate(d1_spec());
  REQUIRE(a.samples.size() == b.samples.size());
  for (size_t i = 0; i < a.samples.size(); ++i)
    CHECK((a.samples[i].image.data == b.samples[i].image.data).all());
  DatasetSpec other = d1_spec();
  other.seed = 78;
  Dataset c = generate(other);
  bool any_diff = false;
  for (size_t i = 0; i < a.samples.size() && !any_diff; ++i)
    any_diff = (a.samples[i].image.data != c.samples[i].image.data).any();
  CHECK(any_diff);
}

TEST_CASE("pixels live on the 1/255 grid inside [0,1]") {
  Dataset data = generate(d1_spec());
  for (const auto& s : data.samples)
    for (Eigen::Index i = 0; i < s.image.size(); ++i) {
      double v = s.image.data(i);
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
      CHECK(std::abs(v * 255.0 - std::round(v * 255.0)) < 1e-9);
    }
}

TEST_CASE("every fake differs from its stored paired original") {
  Dataset data = generate(d1_spec());
  for (const auto& s : data.samples) {
    if (s.label == 0) continue;
    REQUIRE(s.original.size() == s.image.size());
    CHECK((s.image.data != s.original.data).any());
  }
}

TEST_CASE("split is identity-disjoint with balanced classes") {
  DatasetSpec spec = d1_spec();
  spec.identities = 40;
  Dataset data = generate(spec);
  SplitAssignment sa = split(data, {0.7, 0.1, 0.2}, 5);

  std::map<Partition, std::set<int>> ids;
  for (const auto& [ident, part] : sa.by_identity) ids[part].insert(ident);
  CHECK(int(ids[Partition::Train].size()) == 28);
  CHECK(int(ids[Partition::Val].size()) == 4);
  CHECK(int(ids[Partition::Test].size()) == 8);

  for (Partition p : {Partition::Train, Partition::Val, Partition::Test}) {
    LabeledBatch b = to_batch(data, sa, p);
    int fakes = 0;
    for (double l : b.labels) fakes += int(l);
    double frac = double(fakes) / b.size();
    CHECK(std::abs(frac - 0.5) <= 0.02);
  }

  SplitAssignment sb = split(data, {0.7, 0.1, 0.2}, 6);
  CHECK(sa.by_identity != sb.by_identity);
}

TEST_CASE("resampled fakes carry more high-frequency energy than their reals") {
  DatasetSpec spec = d1_spec();
  spec.identities = 80;  // yields 100 method-3 pairs
  Dataset data = generate(spec);
  double fake_sum = 0, real_sum = 0;
  int n = 0;
  for (const auto& s : data.samples) {
    if (s.method != 3) continue;
    fake_sum += hf_energy(s.image);
    Tensor orig = s.original;
    real_sum += hf_energy(orig);
    ++n;
  }
  REQUIRE(n >= 100);
  CHECK(fake_sum / n > real_sum / n);
}

TEST_CASE("save/load roundtrip is bit-exact") {
  DatasetSpec spec = d1_spec();
  spec.identities = 10;
  Dataset data = generate(spec);
  SplitAssignment sa = split(data, {0.7, 0.1, 0.2}, 3);

  fs::path dir = fs::temp_directory_path() / "dumbench_synthdata_rt";
  fs::remove_all(dir);
  save_dataset(dir, data, sa);
  auto [loaded, lsa] = load_dataset(dir);
  fs::remove_all(dir);

  REQUIRE(loaded.samples.size() == data.samples.size());
  CHECK(lsa.by_identity == sa.by_identity);
  for (size_t i = 0; i < data.samples.size(); ++i) {
    const Sample& a = data.samples[i];
    const Sample& b = loaded.samples[i];
    CHECK(a.label == b.label);
    CHECK(a.method == b.method);
    CHECK(a.identity == b.identity);
    CHECK((a.image.data == b.image.data).all());
    if (a.label == 1) CHECK((a.original.data == b.original.data).all());
  }
}

TEST_CASE("invalid specs are rejected") {
  DatasetSpec s = d1_spec();
  s.identities = 1;
  CHECK_THROWS_AS(generate(s), ConfigError);
  s = d1_spec();
  s.per_identity = 7;
  CHECK_THROWS_AS(generate(s), ConfigError);
}
