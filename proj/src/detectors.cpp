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

#include "dumbench/detectors.hpp"

#include <cmath>

#include <json.hpp>

namespace dumbench {

// Classic zero-sum high-pass residual kernels, applied to the channel-mean
// image. Fixed (not learned) for stability at micro scale.
Tensor srm_filter_bank() {
  Tensor w = Tensor::zeros({3, 1, 3, 3});
  const double k1[9] = {-0.25, 0.5, -0.25, 0.5, -1.0, 0.5, -0.25, 0.5, -0.25};
  const double k2[9] = {0, 0, 0, 0.5, -1.0, 0.5, 0, 0, 0};
  const double k3[9] = {0, 0.5, 0, 0, -1.0, 0, 0, 0.5, 0};
  for (int i = 0; i < 9; ++i) {
    w.data(i) = k1[i];
    w.data(9 + i) = k2[i];
    w.data(18 + i) = k3[i];
  }
  return w;
}

namespace {

void add_param(DetectorModel& m, const std::string& name, std::vector<int> shape,
               int fan_in, std::mt19937_64& rng) {
  double bound = 1.0 / std::sqrt(double(fan_in));
  std::uniform_real_distribution<double> u(-bound, bound);
  Tensor t = Tensor::zeros(std::move(shape));
  for (Eigen::Index i = 0; i < t.size(); ++i) t.data(i) = u(rng);
  m.params.push_back({name, std::move(t)});
}

void add_bias(DetectorModel& m, const std::string& name, int n) {
  m.params.push_back({name, Tensor::zeros({n})});
}

int find_param(const GraphOutputs& g, const DetectorModel& m,
               const std::string& name) {
  for (size_t i = 0; i < m.params.size(); ++i)
    if (m.params[i].name == name) return g.param_ids[i];
  throw ConfigError(concat("unknown parameter: ", name));
}

double logistic(double z) {
  return z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
}

struct LossGraph {
  GraphOutputs outs;
  int total = -1;
  int bce = -1, rec = -1, mt = -1, con = -1;
};

LossGraph build_loss_graph(Tape& tape, const DetectorModel& model,
                           const LabeledBatch& batch, int x) {
  LossGraph lg;
  lg.outs = build_graph(tape, model, x);
  lg.bce = tape.bce_with_logits(lg.outs.logits, batch.labels);
  std::vector<int> terms{lg.bce};
  std::vector<double> coeffs{1.0};
  if (model.arch == Arch::Recce) {
    // reconstruction penalized on real samples only
    std::vector<char> real_mask;
    for (double y : batch.labels) real_mask.push_back(y < 0.5 ? 1 : 0);
    lg.rec = tape.recon_l2(lg.outs.recon, x, real_mask);
    terms.push_back(lg.rec);
    coeffs.push_back(model.coeffs.rec);
  }
  if (model.arch == Arch::Ucf) {
    if (batch.methods.empty() ||
        batch.methods.size() != batch.labels.size())
      throw ConfigError("ucf-mu loss requires forgery-method labels");
    lg.mt = tape.softmax_cross_entropy(lg.outs.method_logits, batch.methods);
    std::vector<int> bin;
    for (double y : batch.labels) bin.push_back(y > 0.5 ? 1 : 0);
    lg.con = tape.contrastive_pull(lg.outs.embedding, bin);
    terms.push_back(lg.mt);
    coeffs.push_back(model.coeffs.mt);
    terms.push_back(lg.con);
    coeffs.push_back(model.coeffs.con);
  }
  lg.total = tape.weighted_sum(terms, coeffs);
  return lg;
}

LossBreakdown read_breakdown(const Tape& tape, const DetectorModel& model,
                             const LossGraph& lg) {
  LossBreakdown b;
  auto component = [&](int id, double coeff, const char* name) {
    if (id < 0) return 0.0;
    double v = coeff * tape.val(id)(0);
    if (!std::isfinite(v))
      throw CheckError(concat("loss component '", name, "' is non-finite"));
    return v;
  };
  b.bce = component(lg.bce, 1.0, "bce");
  b.rec = component(lg.rec, model.coeffs.rec, "reconstruction");
  b.mt = component(lg.mt, model.coeffs.mt, "method-ce");
  b.con = component(lg.con, model.coeffs.con, "contrastive");
  b.total = tape.val(lg.total)(0);
  if (!std::isfinite(b.total)) throw CheckError("total loss is non-finite");
  return b;
}

}  // namespace

std::string arch_name(Arch a) {
  switch (a) {
    case Arch::Xcept: return "xcept-mu";
    case Arch::Spsl: return "spsl-mu";
    case Arch::Srm: return "srm-mu";
    case Arch::Recce: return "recce-mu";
    default: return "ucf-mu";
  }
}

Arch parse_arch(const std::string& name) {
  for (Arch a : kAllArchs)
    if (arch_name(a) == name) return a;
  throw ConfigError(concat("unknown architecture: ", name));
}

DetectorModel build(Arch arch, uint64_t seed) {
  DetectorModel m;
  m.arch = arch;
  m.provenance.seed = seed;
  auto rng = make_rng(derive_seed(seed, concat("init:", arch_name(arch))));
  switch (arch) {
    case Arch::Xcept:
      add_param(m, "conv1.w", {8, 6, 3, 3}, 54, rng);
      add_bias(m, "conv1.b", 8);
      add_param(m, "dw1.w", {8, 3, 3}, 9, rng);
      add_bias(m, "dw1.b", 8);
      add_param(m, "pw1.w", {8, 8, 1, 1}, 8, rng);
      add_bias(m, "pw1.b", 8);
      add_param(m, "dw2.w", {8, 3, 3}, 9, rng);
      add_bias(m, "dw2.b", 8);
      add_param(m, "pw2.w", {8, 8, 1, 1}, 8, rng);
      add_bias(m, "pw2.b", 8);
      add_param(m, "head1.w", {16, 8}, 8, rng);
      add_bias(m, "head1.b", 16);
      add_param(m, "head2.w", {1, 16}, 16, rng);
      add_bias(m, "head2.b", 1);
      break;
    case Arch::Spsl:
      add_param(m, "conv1.w", {8, 4, 3, 3}, 36, rng);
      add_bias(m, "conv1.b", 8);
      add_param(m, "conv2.w", {8, 8, 3, 3}, 72, rng);
      add_bias(m, "conv2.b", 8);
      add_param(m, "head1.w", {16, 8}, 8, rng);
      add_bias(m, "head1.b", 16);
      add_param(m, "head2.w", {1, 16}, 16, rng);
      add_bias(m, "head2.b", 1);
      break;
    case Arch::Srm:
      add_param(m, "rgb.w", {6, 3, 3, 3}, 27, rng);
      add_bias(m, "rgb.b", 6);
      add_param(m, "res.w", {6, 3, 3, 3}, 27, rng);
      add_bias(m, "res.b", 6);
      add_param(m, "fuse.w", {8, 12, 1, 1}, 12, rng);
      add_bias(m, "fuse.b", 8);
      add_param(m, "head1.w", {16, 8}, 8, rng);
      add_bias(m, "head1.b", 16);
      add_param(m, "head2.w", {1, 16}, 16, rng);
      add_bias(m, "head2.b", 1);
      break;
    case Arch::Recce:
      add_param(m, "enc1.w", {8, 3, 3, 3}, 27, rng);
      add_bias(m, "enc1.b", 8);
      add_param(m, "enc2.w", {8, 8, 3, 3}, 72, rng);
      add_bias(m, "enc2.b", 8);
      add_param(m, "dec.w", {3, 8, 3, 3}, 72, rng);
      add_bias(m, "dec.b", 3);
      add_param(m, "res.w", {8, 3, 3, 3}, 27, rng);
      add_bias(m, "res.b", 8);
      add_param(m, "head1.w", {16, 16}, 16, rng);
      add_bias(m, "head1.b", 16);
      add_param(m, "head2.w", {1, 16}, 16, rng);
      add_bias(m, "head2.b", 1);
      break;
    case Arch::Ucf:
      add_param(m, "conv1.w", {8, 3, 3, 3}, 27, rng);
      add_bias(m, "conv1.b", 8);
      add_param(m, "conv2.w", {8, 8, 3, 3}, 72, rng);
      add_bias(m, "conv2.b", 8);
      add_param(m, "head1.w", {16, 8}, 8, rng);
      add_bias(m, "head1.b", 16);
      add_param(m, "head2.w", {1, 16}, 16, rng);
      add_bias(m, "head2.b", 1);
      add_param(m, "method.w", {6, 8}, 8, rng);
      add_bias(m, "method.b", 6);
      break;
  }
  return m;
}

GraphOutputs build_graph(Tape& tape, const DetectorModel& model, int x) {
  if (tape.shape(x).size() != 4)
    throw ConfigError("build_graph: input must be NCHW");
  if (tape.shape(x)[1] != 3)
    throw ConfigError(concat("build_graph: ", arch_name(model.arch),
                             " expects 3 input channels, got ",
                             tape.shape(x)[1]));
  GraphOutputs g;
  for (const auto& p : model.params) g.param_ids.push_back(tape.input(p.value));
  auto pid = [&](const std::string& name) { return find_param(g, model, name); };
  // two-layer head so non-monotone rules over pooled feature energies
  // (too much or too little texture) stay representable
  auto head = [&](int pooled) {
    int hh = tape.softrelu(tape.dense(pooled, pid("head1.w"), pid("head1.b")));
    return tape.dense(hh, pid("head2.w"), pid("head2.b"));
  };

  switch (model.arch) {
    case Arch::Xcept: {
      // fixed per-channel Laplacian assist strips the DC component the
      // learnable stack is slow to remove on its own
      static const Tensor lap = [] {
        Tensor w = Tensor::zeros({3, 3, 3});
        const double k[9] = {0, -0.25, 0, -0.25, 1.0, -0.25, 0, -0.25, 0};
        for (int c = 0; c < 3; ++c)
          for (int i = 0; i < 9; ++i) w.data(c * 9 + i) = k[i];
        return w;
      }();
      int hp = tape.depthwise_conv2d(x, tape.input(lap),
                                     tape.input(Tensor::zeros({3})));
      int stem = tape.concat_channels(x, hp);
      // squared stem: local filter energy makes texture statistics
      // first-order visible to the stack and the global average
      int h = tape.square(tape.conv2d(stem, pid("conv1.w"), pid("conv1.b")));
      h = tape.softrelu(tape.depthwise_conv2d(h, pid("dw1.w"), pid("dw1.b")));
      h = tape.softrelu(tape.conv2d(h, pid("pw1.w"), pid("pw1.b")));
      h = tape.softrelu(tape.depthwise_conv2d(h, pid("dw2.w"), pid("dw2.b")));
      h = tape.softrelu(tape.conv2d(h, pid("pw2.w"), pid("pw2.b")));
      g.logits = head(tape.global_avg_pool(h));
      break;
    }
    case Arch::Spsl: {
      int phase = tape.fft_phase_channel(x);
      int h = tape.concat_channels(x, phase);
      h = tape.softrelu(tape.conv2d(h, pid("conv1.w"), pid("conv1.b")));
      h = tape.softrelu(tape.conv2d(h, pid("conv2.w"), pid("conv2.b")));
      g.logits = head(tape.global_avg_pool(h));
      break;
    }
    case Arch::Srm: {
      static const Tensor bank = srm_filter_bank();
      int gray = tape.mean_channels(x);
      int bank_w = tape.input(bank);
      int bank_b = tape.input(Tensor::zeros({3}));
      int residual = tape.conv2d(gray, bank_w, bank_b);
      int sa = tape.softrelu(tape.conv2d(x, pid("rgb.w"), pid("rgb.b")));
      int sb = tape.softrelu(tape.conv2d(residual, pid("res.w"), pid("res.b")));
      int h = tape.concat_channels(sa, sb);
      h = tape.softrelu(tape.conv2d(h, pid("fuse.w"), pid("fuse.b")));
      g.logits = head(tape.global_avg_pool(h));
      break;
    }
    case Arch::Recce: {
      int e1 = tape.square(tape.conv2d(x, pid("enc1.w"), pid("enc1.b")));
      int e2 = tape.softrelu(tape.conv2d(e1, pid("enc2.w"), pid("enc2.b"), 2));
      int up = tape.upsample_nearest2(e2);
      g.recon = tape.conv2d(up, pid("dec.w"), pid("dec.b"));
      // reconstruction-guided: the head also reads residual energy, where
      // traces the decoder cannot reproduce concentrate
      int res = tape.sub(x, g.recon);
      int rf = tape.square(tape.conv2d(res, pid("res.w"), pid("res.b")));
      int pooled = tape.concat_features(tape.global_avg_pool(e2),
                                        tape.global_avg_pool(rf));
      g.logits = head(pooled);
      break;
    }
    case Arch::Ucf: {
      int h = tape.square(tape.conv2d(x, pid("conv1.w"), pid("conv1.b")));
      h = tape.softrelu(tape.conv2d(h, pid("conv2.w"), pid("conv2.b")));
      g.embedding = tape.global_avg_pool(h);
      g.logits = head(g.embedding);
      g.method_logits =
          tape.dense(g.embedding, pid("method.w"), pid("method.b"));
      break;
    }
  }
  return g;
}

ForwardResult forward(const DetectorModel& model, const Tensor& images) {
  Tape tape;
  int x = tape.input(images);
  GraphOutputs g = build_graph(tape, model, x);
  ForwardResult r;
  r.logits = tape.val(g.logits);
  if (g.recon >= 0) r.recon = tape.val(g.recon);
  if (g.method_logits >= 0) r.method_logits = tape.val(g.method_logits);
  return r;
}

LossBreakdown detector_loss(const DetectorModel& model,
                            const LabeledBatch& batch) {
  Tape tape;
  int x = tape.input(batch.images);
  LossGraph lg = build_loss_graph(tape, model, batch, x);
  return read_breakdown(tape, model, lg);
}

Tensor input_gradient(const DetectorModel& model, const LabeledBatch& batch) {
  Tape tape;
  int x = tape.input(batch.images);
  LossGraph lg = build_loss_graph(tape, model, batch, x);
  read_breakdown(tape, model, lg);  // finiteness gate
  tape.backward(lg.total);
  Tensor g(batch.images.shape, tape.grad(x));
  return g;
}

std::vector<Array> parameter_gradient(const DetectorModel& model,
                                      const LabeledBatch& batch) {
  std::vector<Array> grads;
  loss_and_param_grads(model, batch, grads);
  return grads;
}

LossBreakdown loss_and_param_grads(const DetectorModel& model,
                                   const LabeledBatch& batch,
                                   std::vector<Array>& grads) {
  Tape tape;
  int x = tape.input(batch.images);
  LossGraph lg = build_loss_graph(tape, model, batch, x);
  LossBreakdown b = read_breakdown(tape, model, lg);
  tape.backward(lg.total);
  grads.clear();
  for (int id : lg.outs.param_ids) grads.push_back(tape.grad(id));
  return b;
}

std::vector<double> predict_scores(const DetectorModel& model,
                                   const Tensor& images) {
  ForwardResult r = forward(model, images);
  std::vector<double> scores;
  scores.reserve(r.logits.size());
  for (Eigen::Index i = 0; i < r.logits.size(); ++i)
    scores.push_back(logistic(r.logits(i)));
  return scores;
}

void save_checkpoint(const fs::path& path, const DetectorModel& model) {
  nlohmann::json j;
  j["arch"] = arch_name(model.arch);
  j["provenance"] = {{"dataset", model.provenance.dataset},
                     {"strategy", model.provenance.strategy},
                     {"seed", model.provenance.seed}};
  j["coeffs"] = {{"rec", model.coeffs.rec},
                 {"mt", model.coeffs.mt},
                 {"con", model.coeffs.con}};
  j["params"] = nlohmann::json::array();
  for (const auto& p : model.params) {
    nlohmann::json pj;
    pj["name"] = p.name;
    pj["shape"] = p.value.shape;
    pj["data"] = std::vector<double>(p.value.data.data(),
                                     p.value.data.data() + p.value.size());
    j["params"].push_back(std::move(pj));
  }
  atomic_write_file(path, j.dump() + "\n");
}

DetectorModel load_checkpoint(const fs::path& path) {
  auto j = nlohmann::json::parse(read_file(path));
  DetectorModel m;
  m.arch = parse_arch(j.at("arch"));
  m.provenance.dataset = j.at("provenance").at("dataset");
  m.provenance.strategy = j.at("provenance").at("strategy");
  m.provenance.seed = j.at("provenance").at("seed");
  m.coeffs.rec = j.at("coeffs").at("rec");
  m.coeffs.mt = j.at("coeffs").at("mt");
  m.coeffs.con = j.at("coeffs").at("con");
  for (const auto& pj : j.at("params")) {
    std::vector<int> shape = pj.at("shape");
    std::vector<double> data = pj.at("data");
    NamedParam p;
    p.name = pj.at("name");
    p.value = Tensor(shape, Eigen::Map<const Array>(data.data(),
                                                    Eigen::Index(data.size())));
    m.params.push_back(std::move(p));
  }
  return m;
}

GradCheckResult gradient_check(const DetectorModel& model,
                               const LabeledBatch& batch, double h) {
  GradCheckResult r;
  auto rel = [](double a, double b) {
    return std::abs(a - b) / std::max({1e-4, std::abs(a), std::abs(b)});
  };

  Tensor analytic_in = input_gradient(model, batch);
  LabeledBatch probe = batch;
  for (Eigen::Index i = 0; i < probe.images.size(); ++i) {
    double orig = probe.images.data(i);
    probe.images.data(i) = orig + h;
    double lp = detector_loss(model, probe).total;
    probe.images.data(i) = orig - h;
    double lm = detector_loss(model, probe).total;
    probe.images.data(i) = orig;
    r.input_err = std::max(r.input_err, rel(analytic_in.data(i), (lp - lm) / (2 * h)));
  }

  std::vector<Array> analytic_p = parameter_gradient(model, batch);
  DetectorModel m = model;
  for (size_t p = 0; p < m.params.size(); ++p)
    for (Eigen::Index i = 0; i < m.params[p].value.size(); ++i) {
      double orig = m.params[p].value.data(i);
      m.params[p].value.data(i) = orig + h;
      double lp = detector_loss(m, batch).total;
      m.params[p].value.data(i) = orig - h;
      double lm = detector_loss(m, batch).total;
      m.params[p].value.data(i) = orig;
      r.param_err = std::max(r.param_err, rel(analytic_p[p](i), (lp - lm) / (2 * h)));
    }
  return r;
}

}  // namespace dumbench
