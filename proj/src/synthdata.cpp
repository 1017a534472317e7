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

#include "dumbench/synthdata.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

namespace dumbench {

namespace {

const double kPi = std::acos(-1.0);

double clamp01(double v) { return std::min(1.0, std::max(0.0, v)); }

void quantize(Tensor& t) {
  for (Eigen::Index i = 0; i < t.size(); ++i)
    t.data(i) = std::lround(clamp01(t.data(i)) * 255.0) / 255.0;
}

double at(const Tensor& img, int c, int i, int j) {
  int H = img.dim(1), W = img.dim(2);
  return img.data((Eigen::Index(c) * H + i) * W + j);
}

double& at(Tensor& img, int c, int i, int j) {
  int H = img.dim(1), W = img.dim(2);
  return img.data((Eigen::Index(c) * H + i) * W + j);
}

double bilinear(const Tensor& img, int c, double fi, double fj) {
  int H = img.dim(1), W = img.dim(2);
  fi = std::min(double(H - 1), std::max(0.0, fi));
  fj = std::min(double(W - 1), std::max(0.0, fj));
  int i0 = int(fi), j0 = int(fj);
  int i1 = std::min(i0 + 1, H - 1), j1 = std::min(j0 + 1, W - 1);
  double wi = fi - i0, wj = fj - j0;
  return (1 - wi) * ((1 - wj) * at(img, c, i0, j0) + wj * at(img, c, i0, j1)) +
         wi * ((1 - wj) * at(img, c, i1, j0) + wj * at(img, c, i1, j1));
}

struct IdentityParams {
  std::array<double, 3> dc;
  std::array<double, 4> amp, fx, fy, phase;
  std::array<std::array<double, 4>, 3> gain;
  uint64_t texture_seed;
};

IdentityParams identity_params(const DatasetSpec& spec, int identity) {
  auto rng = make_rng(derive_seed(spec.seed, concat(spec.id, ":id:", identity)));
  std::uniform_real_distribution<double> u(0.0, 1.0);
  IdentityParams p{};
  bool d2 = spec.id == "D2";
  for (int c = 0; c < 3; ++c)
    p.dc[c] = (d2 ? 0.46 : 0.50) + (u(rng) - 0.5) * (d2 ? 0.16 : 0.10);
  for (int m = 0; m < 4; ++m) {
    p.amp[m] = (d2 ? 0.05 : 0.05) + u(rng) * 0.06;
    p.fx[m] = std::floor(u(rng) * 3.0) + (d2 ? 2.0 : 1.0);
    p.fy[m] = std::floor(u(rng) * 3.0) + (d2 ? 2.0 : 1.0);
    p.phase[m] = u(rng) * 2.0 * kPi;
    for (int c = 0; c < 3; ++c) p.gain[c][m] = 0.6 + 0.4 * u(rng);
  }
  p.texture_seed = derive_seed(spec.seed, concat(spec.id, ":tex:", identity));
  return p;
}

// Smooth low-frequency field + per-identity texture signature + small
// per-sample variation. This is the "real" face proxy.
Tensor base_real(const DatasetSpec& spec, int identity, int index) {
  const int H = spec.side, W = spec.side;
  IdentityParams p = identity_params(spec, identity);
  auto srng = make_rng(
      derive_seed(spec.seed, concat(spec.id, ":sample:", identity, ":", index)));
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double brightness = (u(srng) - 0.5) * 0.06;
  double wfx = 1.0 + std::floor(u(srng) * 2.0);
  double wfy = 1.0 + std::floor(u(srng) * 2.0);
  double wph = u(srng) * 2.0 * kPi;
  double wamp = 0.015 + 0.01 * u(srng);
  // Weak per-sample sensor pattern noise (CFA/demosaicing proxy): the same
  // pixel-checker structure some forgeries leave behind, so weak checker
  // energy is not class evidence on its own.
  double samp = u(srng) * 0.012;

  auto trng = make_rng(p.texture_seed);
  double tex_amp = spec.id == "D2" ? 0.015 : 0.02;
  Tensor img = Tensor::zeros({3, H, W});
  std::vector<double> tex(size_t(H) * W);
  for (auto& v : tex) v = (u(trng) - 0.5) * 2.0 * tex_amp;

  for (int i = 0; i < H; ++i)
    for (int j = 0; j < W; ++j) {
      double ui = double(i) / H, uj = double(j) / W;
      double field = 0.0;
      std::array<double, 4> modes;
      for (int m = 0; m < 4; ++m)
        modes[m] = p.amp[m] *
                   std::cos(2.0 * kPi * (p.fx[m] * ui + p.fy[m] * uj) +
                            p.phase[m]);
      double wobble =
          wamp * std::cos(2.0 * kPi * (wfx * ui + wfy * uj) + wph);
      double sensor = samp * (((i + j) % 2 == 0) ? 1.0 : -1.0);
      for (int c = 0; c < 3; ++c) {
        field = p.dc[c] + brightness + wobble + sensor + tex[size_t(i) * W + j];
        for (int m = 0; m < 4; ++m) field += p.gain[c][m] * modes[m];
        field += (u(srng) - 0.5) * 0.008;
        at(img, c, i, j) = field;
      }
    }
  quantize(img);
  return img;
}

struct Region {
  double cx, cy, rx, ry;
  // Smooth boundary weight in [0,1]; 1 well inside, 0 outside.
  double mask(int i, int j, double ramp = 0.3) const {
    double rho = std::sqrt(std::pow((i - cx) / rx, 2.0) +
                           std::pow((j - cy) / ry, 2.0));
    if (rho <= 1.0 - ramp) return 1.0;
    if (rho >= 1.0) return 0.0;
    return 0.5 * (1.0 + std::cos(kPi * (rho - (1.0 - ramp)) / ramp));
  }
};

Region draw_region(std::mt19937_64& rng, int side, double lo, double hi) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Region r;
  r.cx = side * (0.40 + 0.20 * u(rng));
  r.cy = side * (0.40 + 0.20 * u(rng));
  r.rx = side * (lo + (hi - lo) * u(rng));
  r.ry = side * (lo + (hi - lo) * u(rng));
  return r;
}

Tensor fake_region_swap(const Tensor& x, const Tensor& donor, Region r) {
  Tensor out = x;
  int H = x.dim(1), W = x.dim(2);
  for (int i = 0; i < H; ++i)
    for (int j = 0; j < W; ++j) {
      double m = r.mask(i, j);
      if (m <= 0.0) continue;
      for (int c = 0; c < 3; ++c)
        at(out, c, i, j) = (1 - m) * at(x, c, i, j) + m * at(donor, c, i, j);
    }
  return out;
}

Tensor fake_warp(const Tensor& x, Region r, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double amp = 2.0 + 1.0 * u(rng);
  double lam = 6.0 + 4.0 * u(rng);
  double ph1 = u(rng) * 2 * kPi, ph2 = u(rng) * 2 * kPi;
  Tensor out = x;
  int H = x.dim(1), W = x.dim(2);
  for (int i = 0; i < H; ++i)
    for (int j = 0; j < W; ++j) {
      double m = r.mask(i, j);
      if (m <= 0.0) continue;
      double di = m * amp * std::sin(2 * kPi * j / lam + ph1);
      double dj = m * amp * std::cos(2 * kPi * i / lam + ph2);
      for (int c = 0; c < 3; ++c)
        at(out, c, i, j) = bilinear(x, c, i + di, j + dj);
    }
  return out;
}

// Downsample-then-upsample in the region: block means re-expanded with
// nearest-neighbour fill, which leaves blocky high-frequency steps.
Tensor fake_resample(const Tensor& x, Region r) {
  const int block = 4;
  Tensor out = x;
  int H = x.dim(1), W = x.dim(2);
  for (int c = 0; c < 3; ++c)
    for (int bi = 0; bi < H; bi += block)
      for (int bj = 0; bj < W; bj += block) {
        double mean = 0.0;
        int cnt = 0;
        for (int i = bi; i < std::min(bi + block, H); ++i)
          for (int j = bj; j < std::min(bj + block, W); ++j) {
            mean += at(x, c, i, j);
            ++cnt;
          }
        mean /= cnt;
        for (int i = bi; i < std::min(bi + block, H); ++i)
          for (int j = bj; j < std::min(bj + block, W); ++j) {
            double m = 0.7 * r.mask(i, j);  // partial blend keeps steps subtle
            if (m <= 0.0) continue;
            at(out, c, i, j) = (1 - m) * at(x, c, i, j) + m * mean;
          }
      }
  return out;
}

Tensor fake_checker(const Tensor& x, Region r, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double amp = 0.06 + 0.02 * u(rng);
  Tensor out = x;
  int H = x.dim(1), W = x.dim(2);
  for (int i = 0; i < H; ++i)
    for (int j = 0; j < W; ++j) {
      double m = r.mask(i, j);
      if (m <= 0.0) continue;
      double s = ((i + j) % 2 == 0) ? 1.0 : -1.0;
      for (int c = 0; c < 3; ++c) at(out, c, i, j) += m * amp * s;
    }
  return out;
}

// D2's method: box-feathered swap plus a global color transfer toward the
// donor's channel means. Deliberately subtler than the D1 methods.
Tensor fake_swap_color(const Tensor& x, const Tensor& donor, Region r,
                       std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double strength = 0.12 + 0.08 * u(rng);
  int H = x.dim(1), W = x.dim(2);
  Tensor out = x;
  for (int c = 0; c < 3; ++c) {
    double mx = 0.0, md = 0.0;
    for (int i = 0; i < H; ++i)
      for (int j = 0; j < W; ++j) {
        mx += at(x, c, i, j);
        md += at(donor, c, i, j);
      }
    double shift = strength * (md - mx) / (H * W);
    for (int i = 0; i < H; ++i)
      for (int j = 0; j < W; ++j) at(out, c, i, j) += shift;
  }
  // 2px linear feather on a box around the region centre
  double x0 = r.cx - r.rx, x1 = r.cx + r.rx, y0 = r.cy - r.ry, y1 = r.cy + r.ry;
  auto feather = [](double d) { return std::min(1.0, std::max(0.0, d / 2.0)); };
  for (int i = 0; i < H; ++i)
    for (int j = 0; j < W; ++j) {
      double m = std::min(std::min(feather(i - x0), feather(x1 - i)),
                          std::min(feather(j - y0), feather(y1 - j)));
      if (m <= 0.0) continue;
      for (int c = 0; c < 3; ++c)
        at(out, c, i, j) = (1 - m) * at(out, c, i, j) + m * at(donor, c, i, j);
    }
  return out;
}

// Faint method-keyed spectral fingerprint layered over the whole fake,
// mimicking the global generator traces deepfake pipelines leave behind.
// D2's method carries a weaker print at a different band.
Tensor add_fingerprint(const Tensor& x, int method, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int H = x.dim(1), W = x.dim(2);
  double amp = method == 5 ? 0.012 + 0.004 * u(rng) : 0.028 + 0.005 * u(rng);
  double fi = 3.0 + method, fj = 5.0 + ((method * 2) % 5);
  double ph1 = u(rng) * 2 * kPi, ph2 = u(rng) * 2 * kPi;
  Tensor out = x;
  for (int i = 0; i < H; ++i)
    for (int j = 0; j < W; ++j) {
      double v = amp * std::cos(2 * kPi * fi * i / H + ph1) *
                 std::cos(2 * kPi * fj * j / W + ph2);
      for (int c = 0; c < 3; ++c) at(out, c, i, j) += v;
    }
  return out;
}

}  // namespace

void DatasetSpec::validate() const {
  if (id != "D1" && id != "D2")
    throw ConfigError(concat("dataset id must be D1 or D2, got ", id));
  if (channels != 3) throw ConfigError("only 3-channel datasets are supported");
  if (side < 8) throw ConfigError("image side must be >= 8");
  if (identities < 2)
    throw ConfigError("identity count must be >= 2 (region swap needs a donor)");
  if (per_identity < 2 || per_identity % 2 != 0)
    throw ConfigError("per_identity must be even and >= 2 for class balance");
}

const char* partition_name(Partition p) {
  switch (p) {
    case Partition::Train: return "train";
    case Partition::Val: return "val";
    default: return "test";
  }
}

Dataset generate(const DatasetSpec& spec) {
  spec.validate();
  Dataset out;
  out.spec = spec;
  const auto methods = spec.methods();
  const int half = spec.per_identity / 2;
  for (int identity = 0; identity < spec.identities; ++identity) {
    for (int s = 0; s < half; ++s) {
      Sample real;
      real.image = base_real(spec, identity, s);
      real.label = 0;
      real.method = 0;
      real.identity = identity;
      real.dataset = spec.id;

      auto frng = make_rng(
          derive_seed(spec.seed, concat(spec.id, ":fake:", identity, ":", s)));
      int donor_id = (identity + 1 + s % (spec.identities - 1)) % spec.identities;
      Tensor donor = base_real(spec, donor_id, s);
      int method = methods[(identity * half + s) % methods.size()];

      Sample fake;
      fake.label = 1;
      fake.method = method;
      fake.identity = identity;
      fake.dataset = spec.id;
      fake.original = real.image;
      switch (method) {
        case 1:
          fake.image = fake_region_swap(real.image, donor,
                                        draw_region(frng, spec.side, 0.24, 0.34));
          break;
        case 2:
          fake.image =
              fake_warp(real.image, draw_region(frng, spec.side, 0.24, 0.34), frng);
          break;
        case 3:
          fake.image =
              fake_resample(real.image, draw_region(frng, spec.side, 0.24, 0.34));
          break;
        case 4:
          fake.image = fake_checker(
              real.image, draw_region(frng, spec.side, 0.24, 0.34), frng);
          break;
        default:
          fake.image = fake_swap_color(
              real.image, donor, draw_region(frng, spec.side, 0.16, 0.24), frng);
          break;
      }
      fake.image = add_fingerprint(fake.image, method, frng);
      quantize(fake.image);
      if ((fake.image.data == real.image.data).all())
        fake.image.data(0) = clamp01(fake.image.data(0) + 1.0 / 255.0);

      out.samples.push_back(std::move(real));
      out.samples.push_back(std::move(fake));
    }
  }
  return out;
}

SplitAssignment split(const Dataset& data, const std::array<double, 3>& ratios,
                      uint64_t seed) {
  double sum = ratios[0] + ratios[1] + ratios[2];
  if (std::abs(sum - 1.0) > 1e-9)
    throw ConfigError("split: ratios must sum to 1");
  const int ids = data.spec.identities;
  int n_train = int(std::lround(ratios[0] * ids));
  int n_val = int(std::lround(ratios[1] * ids));
  n_train = std::max(1, n_train);
  n_val = std::max(1, n_val);
  int n_test = ids - n_train - n_val;
  if (n_test < 1)
    throw ConfigError(concat("split: too few identities (", ids,
                             ") to satisfy the requested ratios"));
  auto check = [&](int n, double want) {
    if (std::abs(double(n) / ids - want) > 0.02 + 1e-12)
      throw ConfigError(concat("split: achievable fraction ", double(n) / ids,
                               " deviates more than 2 points from ", want));
  };
  check(n_train, ratios[0]);
  check(n_val, ratios[1]);
  check(n_test, ratios[2]);

  std::vector<int> order(ids);
  for (int i = 0; i < ids; ++i) order[i] = i;
  auto rng = make_rng(derive_seed(seed, concat(data.spec.id, ":split")));
  std::shuffle(order.begin(), order.end(), rng);

  SplitAssignment a;
  for (int i = 0; i < ids; ++i) {
    Partition p = i < n_train               ? Partition::Train
                  : i < n_train + n_val     ? Partition::Val
                                            : Partition::Test;
    a.by_identity[order[i]] = p;
  }
  return a;
}

std::vector<const Sample*> partition_samples(const Dataset& data,
                                             const SplitAssignment& split,
                                             Partition p) {
  std::vector<const Sample*> out;
  for (const auto& s : data.samples)
    if (split.by_identity.at(s.identity) == p) out.push_back(&s);
  return out;
}

LabeledBatch to_batch(const std::vector<const Sample*>& samples) {
  if (samples.empty()) throw ConfigError("to_batch: empty sample list");
  const auto& s0 = *samples[0];
  int C = s0.image.dim(0), H = s0.image.dim(1), W = s0.image.dim(2);
  LabeledBatch b;
  b.images = Tensor::zeros({int(samples.size()), C, H, W});
  b.dataset = s0.dataset;
  const Eigen::Index per = Eigen::Index(C) * H * W;
  for (size_t n = 0; n < samples.size(); ++n) {
    b.images.data.segment(Eigen::Index(n) * per, per) = samples[n]->image.data;
    b.labels.push_back(double(samples[n]->label));
    b.methods.push_back(samples[n]->method);
    b.identities.push_back(samples[n]->identity);
  }
  return b;
}

LabeledBatch to_batch(const Dataset& data, const SplitAssignment& split,
                      Partition p) {
  return to_batch(partition_samples(data, split, p));
}

void save_dataset(const fs::path& dir, const Dataset& data,
                  const SplitAssignment& split) {
  fs::create_directories(dir);
  nlohmann::json spec{{"id", data.spec.id},
                      {"side", data.spec.side},
                      {"channels", data.spec.channels},
                      {"identities", data.spec.identities},
                      {"per_identity", data.spec.per_identity},
                      {"seed", data.spec.seed}};
  atomic_write_file(dir / "spec.json", spec.dump(2) + "\n");

  std::string index = "file\tlabel\tmethod\tidentity\tpartition\tpaired\n";
  std::map<int, int> counter;
  for (const auto& s : data.samples) {
    int k = counter[s.identity]++;
    std::string name = concat("s", s.identity, "_", k,
                              s.label == 0 ? "_real" : "_fake", ".ppm");
    write_ppm(dir / name, s.image);
    std::string paired = "-";
    if (s.label == 1) {
      paired = name + ".orig";
      write_ppm(dir / paired, s.original);
    }
    index += concat(name, "\t", s.label, "\t", s.method, "\t", s.identity, "\t",
                    partition_name(split.by_identity.at(s.identity)), "\t",
                    paired, "\n");
  }
  atomic_write_file(dir / "index.tsv", index);
}

std::pair<Dataset, SplitAssignment> load_dataset(const fs::path& dir) {
  auto spec_json = nlohmann::json::parse(read_file(dir / "spec.json"));
  Dataset data;
  data.spec.id = spec_json.at("id");
  data.spec.side = spec_json.at("side");
  data.spec.channels = spec_json.at("channels");
  data.spec.identities = spec_json.at("identities");
  data.spec.per_identity = spec_json.at("per_identity");
  data.spec.seed = spec_json.at("seed");

  SplitAssignment split;
  std::istringstream index(read_file(dir / "index.tsv"));
  std::string line;
  std::getline(index, line);  // header
  while (std::getline(index, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string file, partition, paired;
    Sample s;
    ls >> file >> s.label >> s.method >> s.identity >> partition >> paired;
    s.dataset = data.spec.id;
    s.image = read_ppm(dir / file);
    if (paired != "-") s.original = read_ppm(dir / paired);
    for (Partition p : {Partition::Train, Partition::Val, Partition::Test})
      if (partition == partition_name(p)) split.by_identity[s.identity] = p;
    data.samples.push_back(std::move(s));
  }
  return {std::move(data), std::move(split)};
}

}  // namespace dumbench
