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

#include "dumbench/graph.hpp"

#include <cmath>
#include <memory>

#include "dumbench/transforms.hpp"

namespace dumbench {

namespace {

using RowMat =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using CRowMap = Eigen::Map<const RowMat>;
using RowMap = Eigen::Map<RowMat>;

// col(r, q) = x[c, oi*s+di-p, oj*s+dj-p] with r = (c*k+di)*k+dj, q = oi*Wo+oj
void im2col(const double* x, int C, int H, int W, int k, int s, int p, int Ho,
            int Wo, Eigen::MatrixXd& col) {
  col.setZero();
  for (int c = 0; c < C; ++c)
    for (int di = 0; di < k; ++di)
      for (int dj = 0; dj < k; ++dj) {
        int r = (c * k + di) * k + dj;
        for (int oi = 0; oi < Ho; ++oi) {
          int i = oi * s + di - p;
          if (i < 0 || i >= H) continue;
          for (int oj = 0; oj < Wo; ++oj) {
            int j = oj * s + dj - p;
            if (j < 0 || j >= W) continue;
            col(r, oi * Wo + oj) = x[(c * H + i) * W + j];
          }
        }
      }
}

void col2im_add(const Eigen::MatrixXd& col, int C, int H, int W, int k, int s,
                int p, int Ho, int Wo, double* dx) {
  for (int c = 0; c < C; ++c)
    for (int di = 0; di < k; ++di)
      for (int dj = 0; dj < k; ++dj) {
        int r = (c * k + di) * k + dj;
        for (int oi = 0; oi < Ho; ++oi) {
          int i = oi * s + di - p;
          if (i < 0 || i >= H) continue;
          for (int oj = 0; oj < Wo; ++oj) {
            int j = oj * s + dj - p;
            if (j < 0 || j >= W) continue;
            dx[(c * H + i) * W + j] += col(r, oi * Wo + oj);
          }
        }
      }
}

double logistic(double z) {
  return z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
}

}  // namespace

int Tape::add(std::vector<int> shape, Array val) {
  Node n;
  n.shape = std::move(shape);
  n.val = std::move(val);
  nodes_.push_back(std::move(n));
  return int(nodes_.size()) - 1;
}

int Tape::input(const Tensor& t) { return add(t.shape, t.data); }

void Tape::backward(int root) {
  if (nodes_[root].val.size() != 1)
    throw ConfigError("backward: root must be a scalar node");
  for (auto& n : nodes_) n.grad = Array::Zero(n.val.size());
  nodes_[root].grad(0) = 1.0;
  for (int i = root; i >= 0; --i)
    if (nodes_[i].back) nodes_[i].back();
}

void Tape::check_image(int x, const char* op) const {
  if (nodes_[x].shape.size() != 4)
    throw ConfigError(concat(op, ": expected NCHW input, got rank ",
                             nodes_[x].shape.size()));
}

int Tape::conv2d(int x, int w, int b, int stride) {
  check_image(x, "conv2d");
  const auto& xs = nodes_[x].shape;
  const auto& ws = nodes_[w].shape;
  if (ws.size() != 4 || ws[2] != ws[3] || ws[2] % 2 == 0)
    throw ConfigError("conv2d: kernel must be [outC,inC,k,k] with odd k");
  if (ws[1] != xs[1])
    throw ConfigError(concat("conv2d: input has ", xs[1],
                             " channels but kernel expects ", ws[1]));
  if (stride != 1 && stride != 2)
    throw ConfigError("conv2d: stride must be 1 or 2");
  const int N = xs[0], C = xs[1], H = xs[2], W = xs[3];
  const int OC = ws[0], k = ws[2], p = k / 2, s = stride;
  const int Ho = (H + 2 * p - k) / s + 1, Wo = (W + 2 * p - k) / s + 1;

  Array out(Eigen::Index(N) * OC * Ho * Wo);
  CRowMap wm(nodes_[w].val.data(), OC, C * k * k);
  Eigen::Map<const Eigen::VectorXd> bv(nodes_[b].val.data(), OC);
  Eigen::MatrixXd col(C * k * k, Ho * Wo);
  for (int n = 0; n < N; ++n) {
    im2col(nodes_[x].val.data() + Eigen::Index(n) * C * H * W, C, H, W, k, s,
           p, Ho, Wo, col);
    RowMap on(out.data() + Eigen::Index(n) * OC * Ho * Wo, OC, Ho * Wo);
    on = wm * col;
    on.colwise() += bv;
  }
  int id = add({N, OC, Ho, Wo}, std::move(out));
  nodes_[id].back = [this, id, x, w, b, N, C, H, W, OC, k, p, s, Ho, Wo]() {
    CRowMap wm(nodes_[w].val.data(), OC, C * k * k);
    RowMap dwm(grad_mut(w).data(), OC, C * k * k);
    Eigen::Map<Eigen::VectorXd> db(grad_mut(b).data(), OC);
    Eigen::MatrixXd col(C * k * k, Ho * Wo);
    for (int n = 0; n < N; ++n) {
      CRowMap dout(nodes_[id].grad.data() + Eigen::Index(n) * OC * Ho * Wo,
                   OC, Ho * Wo);
      im2col(nodes_[x].val.data() + Eigen::Index(n) * C * H * W, C, H, W, k,
             s, p, Ho, Wo, col);
      dwm.noalias() += dout * col.transpose();
      db.noalias() += dout.rowwise().sum();
      Eigen::MatrixXd dcol = wm.transpose() * dout;
      col2im_add(dcol, C, H, W, k, s, p, Ho, Wo,
                 grad_mut(x).data() + Eigen::Index(n) * C * H * W);
    }
  };
  return id;
}

int Tape::depthwise_conv2d(int x, int w, int b) {
  check_image(x, "depthwise_conv2d");
  const auto& xs = nodes_[x].shape;
  const auto& ws = nodes_[w].shape;
  if (ws.size() != 3 || ws[1] != ws[2] || ws[1] % 2 == 0)
    throw ConfigError("depthwise_conv2d: kernel must be [C,k,k] with odd k");
  if (ws[0] != xs[1])
    throw ConfigError(concat("depthwise_conv2d: input has ", xs[1],
                             " channels but kernel expects ", ws[0]));
  const int N = xs[0], C = xs[1], H = xs[2], W = xs[3];
  const int k = ws[1], p = k / 2;

  Array out = Array::Zero(nodes_[x].val.size());
  const double* xd = nodes_[x].val.data();
  const double* wd = nodes_[w].val.data();
  const double* bd = nodes_[b].val.data();
  for (int n = 0; n < N; ++n)
    for (int c = 0; c < C; ++c) {
      const double* xc = xd + (Eigen::Index(n) * C + c) * H * W;
      double* oc = out.data() + (Eigen::Index(n) * C + c) * H * W;
      const double* wc = wd + Eigen::Index(c) * k * k;
      for (int i = 0; i < H; ++i)
        for (int j = 0; j < W; ++j) {
          double acc = bd[c];
          for (int di = 0; di < k; ++di) {
            int ii = i + di - p;
            if (ii < 0 || ii >= H) continue;
            for (int dj = 0; dj < k; ++dj) {
              int jj = j + dj - p;
              if (jj < 0 || jj >= W) continue;
              acc += wc[di * k + dj] * xc[ii * W + jj];
            }
          }
          oc[i * W + j] = acc;
        }
    }
  int id = add(xs, std::move(out));
  nodes_[id].back = [this, id, x, w, b, N, C, H, W, k, p]() {
    const double* xd = nodes_[x].val.data();
    const double* wd = nodes_[w].val.data();
    const double* gd = nodes_[id].grad.data();
    double* dx = grad_mut(x).data();
    double* dw = grad_mut(w).data();
    double* db = grad_mut(b).data();
    for (int n = 0; n < N; ++n)
      for (int c = 0; c < C; ++c) {
        const double* xc = xd + (Eigen::Index(n) * C + c) * H * W;
        const double* gc = gd + (Eigen::Index(n) * C + c) * H * W;
        double* dxc = dx + (Eigen::Index(n) * C + c) * H * W;
        const double* wc = wd + Eigen::Index(c) * k * k;
        double* dwc = dw + Eigen::Index(c) * k * k;
        for (int i = 0; i < H; ++i)
          for (int j = 0; j < W; ++j) {
            double g = gc[i * W + j];
            db[c] += g;
            for (int di = 0; di < k; ++di) {
              int ii = i + di - p;
              if (ii < 0 || ii >= H) continue;
              for (int dj = 0; dj < k; ++dj) {
                int jj = j + dj - p;
                if (jj < 0 || jj >= W) continue;
                dwc[di * k + dj] += g * xc[ii * W + jj];
                dxc[ii * W + jj] += g * wc[di * k + dj];
              }
            }
          }
      }
  };
  return id;
}

int Tape::dense(int x, int w, int b) {
  const auto& xs = nodes_[x].shape;
  const auto& ws = nodes_[w].shape;
  if (xs.size() != 2 || ws.size() != 2)
    throw ConfigError("dense: expects [N,F] input and [O,F] weights");
  if (xs[1] != ws[1])
    throw ConfigError(concat("dense: input features ", xs[1],
                             " do not match weight features ", ws[1]));
  const int N = xs[0], F = xs[1], O = ws[0];
  CRowMap xm(nodes_[x].val.data(), N, F);
  CRowMap wm(nodes_[w].val.data(), O, F);
  Eigen::Map<const Eigen::RowVectorXd> bv(nodes_[b].val.data(), O);
  Array out(Eigen::Index(N) * O);
  RowMap om(out.data(), N, O);
  om = xm * wm.transpose();
  om.rowwise() += bv;
  int id = add({N, O}, std::move(out));
  nodes_[id].back = [this, id, x, w, b, N, F, O]() {
    CRowMap xm(nodes_[x].val.data(), N, F);
    CRowMap wm(nodes_[w].val.data(), O, F);
    CRowMap dout(nodes_[id].grad.data(), N, O);
    RowMap dx(grad_mut(x).data(), N, F);
    RowMap dw(grad_mut(w).data(), O, F);
    Eigen::Map<Eigen::RowVectorXd> db(grad_mut(b).data(), O);
    dx.noalias() += dout * wm;
    dw.noalias() += dout.transpose() * xm;
    db.noalias() += dout.colwise().sum();
  };
  return id;
}

int Tape::relu(int x) {
  Array out = nodes_[x].val.max(0.0);
  int id = add(nodes_[x].shape, std::move(out));
  nodes_[id].back = [this, id, x]() {
    grad_mut(x) += (nodes_[x].val > 0.0).cast<double>() * nodes_[id].grad;
  };
  return id;
}

int Tape::softrelu(int x) {
  // softplus with sharpness beta: smooth, so finite-difference validation
  // is well-posed at any probe point
  const double beta = 10.0;
  const Array& z = nodes_[x].val;
  Array out(z.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    double v = beta * z(i);
    out(i) = v > 0 ? z(i) + std::log1p(std::exp(-v)) / beta
                   : std::log1p(std::exp(v)) / beta;
  }
  int id = add(nodes_[x].shape, std::move(out));
  nodes_[id].back = [this, id, x, beta]() {
    const Array& z = nodes_[x].val;
    for (Eigen::Index i = 0; i < z.size(); ++i)
      grad_mut(x)(i) += logistic(beta * z(i)) * nodes_[id].grad(i);
  };
  return id;
}

int Tape::square(int x) {
  int id = add(nodes_[x].shape, nodes_[x].val.square());
  nodes_[id].back = [this, id, x]() {
    grad_mut(x) += 2.0 * nodes_[x].val * nodes_[id].grad;
  };
  return id;
}

int Tape::sub(int a, int b) {
  if (nodes_[a].shape != nodes_[b].shape)
    throw ConfigError("sub: shape mismatch");
  Array out = nodes_[a].val - nodes_[b].val;
  int id = add(nodes_[a].shape, std::move(out));
  nodes_[id].back = [this, id, a, b]() {
    grad_mut(a) += nodes_[id].grad;
    grad_mut(b) -= nodes_[id].grad;
  };
  return id;
}

int Tape::concat_features(int a, int b) {
  const auto& as = nodes_[a].shape;
  const auto& bs = nodes_[b].shape;
  if (as.size() != 2 || bs.size() != 2 || as[0] != bs[0])
    throw ConfigError("concat_features: expects [N,F] with equal batch");
  const int N = as[0], Fa = as[1], Fb = bs[1];
  Array out(Eigen::Index(N) * (Fa + Fb));
  for (int n = 0; n < N; ++n) {
    out.segment(Eigen::Index(n) * (Fa + Fb), Fa) =
        nodes_[a].val.segment(Eigen::Index(n) * Fa, Fa);
    out.segment(Eigen::Index(n) * (Fa + Fb) + Fa, Fb) =
        nodes_[b].val.segment(Eigen::Index(n) * Fb, Fb);
  }
  int id = add({N, Fa + Fb}, std::move(out));
  nodes_[id].back = [this, id, a, b, N, Fa, Fb]() {
    for (int n = 0; n < N; ++n) {
      grad_mut(a).segment(Eigen::Index(n) * Fa, Fa) +=
          nodes_[id].grad.segment(Eigen::Index(n) * (Fa + Fb), Fa);
      grad_mut(b).segment(Eigen::Index(n) * Fb, Fb) +=
          nodes_[id].grad.segment(Eigen::Index(n) * (Fa + Fb) + Fa, Fb);
    }
  };
  return id;
}

int Tape::concat_channels(int a, int b) {
  check_image(a, "concat_channels");
  check_image(b, "concat_channels");
  const auto& as = nodes_[a].shape;
  const auto& bs = nodes_[b].shape;
  if (as[0] != bs[0] || as[2] != bs[2] || as[3] != bs[3])
    throw ConfigError("concat_channels: batch or spatial dims differ");
  const int N = as[0], Ca = as[1], Cb = bs[1], H = as[2], W = as[3];
  const Eigen::Index plane = Eigen::Index(H) * W;
  Array out(Eigen::Index(N) * (Ca + Cb) * plane);
  for (int n = 0; n < N; ++n) {
    out.segment(Eigen::Index(n) * (Ca + Cb) * plane, Ca * plane) =
        nodes_[a].val.segment(Eigen::Index(n) * Ca * plane, Ca * plane);
    out.segment(Eigen::Index(n) * (Ca + Cb) * plane + Ca * plane, Cb * plane) =
        nodes_[b].val.segment(Eigen::Index(n) * Cb * plane, Cb * plane);
  }
  int id = add({N, Ca + Cb, H, W}, std::move(out));
  nodes_[id].back = [this, id, a, b, N, Ca, Cb, plane]() {
    for (int n = 0; n < N; ++n) {
      grad_mut(a).segment(Eigen::Index(n) * Ca * plane, Ca * plane) +=
          nodes_[id].grad.segment(Eigen::Index(n) * (Ca + Cb) * plane,
                                  Ca * plane);
      grad_mut(b).segment(Eigen::Index(n) * Cb * plane, Cb * plane) +=
          nodes_[id].grad.segment(
              Eigen::Index(n) * (Ca + Cb) * plane + Ca * plane, Cb * plane);
    }
  };
  return id;
}

int Tape::global_avg_pool(int x) {
  check_image(x, "global_avg_pool");
  const auto& xs = nodes_[x].shape;
  const int N = xs[0], C = xs[1];
  const Eigen::Index plane = Eigen::Index(xs[2]) * xs[3];
  Array out(Eigen::Index(N) * C);
  for (int n = 0; n < N; ++n)
    for (int c = 0; c < C; ++c)
      out(Eigen::Index(n) * C + c) =
          nodes_[x].val.segment((Eigen::Index(n) * C + c) * plane, plane).mean();
  int id = add({N, C}, std::move(out));
  nodes_[id].back = [this, id, x, N, C, plane]() {
    for (int n = 0; n < N; ++n)
      for (int c = 0; c < C; ++c)
        grad_mut(x).segment((Eigen::Index(n) * C + c) * plane, plane) +=
            nodes_[id].grad(Eigen::Index(n) * C + c) / double(plane);
  };
  return id;
}

int Tape::upsample_nearest2(int x) {
  check_image(x, "upsample_nearest2");
  const auto& xs = nodes_[x].shape;
  const int N = xs[0], C = xs[1], H = xs[2], W = xs[3];
  Array out(Eigen::Index(N) * C * 4 * H * W);
  const double* xd = nodes_[x].val.data();
  for (int nc = 0; nc < N * C; ++nc) {
    const double* src = xd + Eigen::Index(nc) * H * W;
    double* dst = out.data() + Eigen::Index(nc) * 4 * H * W;
    for (int i = 0; i < 2 * H; ++i)
      for (int j = 0; j < 2 * W; ++j)
        dst[i * 2 * W + j] = src[(i / 2) * W + j / 2];
  }
  int id = add({N, C, 2 * H, 2 * W}, std::move(out));
  nodes_[id].back = [this, id, x, N, C, H, W]() {
    const double* gd = nodes_[id].grad.data();
    double* dx = grad_mut(x).data();
    for (int nc = 0; nc < N * C; ++nc) {
      const double* g = gd + Eigen::Index(nc) * 4 * H * W;
      double* d = dx + Eigen::Index(nc) * H * W;
      for (int i = 0; i < 2 * H; ++i)
        for (int j = 0; j < 2 * W; ++j) d[(i / 2) * W + j / 2] += g[i * 2 * W + j];
    }
  };
  return id;
}

int Tape::mean_channels(int x) {
  check_image(x, "mean_channels");
  const auto& xs = nodes_[x].shape;
  const int N = xs[0], C = xs[1], H = xs[2], W = xs[3];
  const Eigen::Index plane = Eigen::Index(H) * W;
  Array out = Array::Zero(Eigen::Index(N) * plane);
  for (int n = 0; n < N; ++n)
    for (int c = 0; c < C; ++c)
      out.segment(Eigen::Index(n) * plane, plane) +=
          nodes_[x].val.segment((Eigen::Index(n) * C + c) * plane, plane) / C;
  int id = add({N, 1, H, W}, std::move(out));
  nodes_[id].back = [this, id, x, N, C, plane]() {
    for (int n = 0; n < N; ++n)
      for (int c = 0; c < C; ++c)
        grad_mut(x).segment((Eigen::Index(n) * C + c) * plane, plane) +=
            nodes_[id].grad.segment(Eigen::Index(n) * plane, plane) / C;
  };
  return id;
}

int Tape::fft_phase_channel(int x) {
  check_image(x, "fft_phase_channel");
  const auto& xs = nodes_[x].shape;
  const int N = xs[0], C = xs[1], H = xs[2], W = xs[3];
  const Eigen::Index plane = Eigen::Index(H) * W;
  const Eigen::MatrixXcd& fr = dft_matrix(H);
  const Eigen::MatrixXcd& fc = dft_matrix(W);

  auto re = std::make_shared<std::vector<Eigen::MatrixXd>>(N);
  auto im = std::make_shared<std::vector<Eigen::MatrixXd>>(N);
  Array out(Eigen::Index(N) * plane);
  for (int n = 0; n < N; ++n) {
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(H, W);
    for (int c = 0; c < C; ++c)
      g += CRowMap(nodes_[x].val.data() + (Eigen::Index(n) * C + c) * plane, H,
                   W) /
           double(C);
    Eigen::MatrixXcd spec = fr * g * fc.transpose();
    (*re)[n] = spec.real();
    (*im)[n] = spec.imag();
    RowMap on(out.data() + Eigen::Index(n) * plane, H, W);
    for (int i = 0; i < H; ++i)
      for (int j = 0; j < W; ++j)
        on(i, j) = std::atan2((*im)[n](i, j), (*re)[n](i, j));
  }
  int id = add({N, 1, H, W}, std::move(out));
  nodes_[id].back = [this, id, x, N, C, H, W, plane, re, im, &fr, &fc]() {
    for (int n = 0; n < N; ++n) {
      CRowMap dphi(nodes_[id].grad.data() + Eigen::Index(n) * plane, H, W);
      Eigen::MatrixXd mag2 =
          ((*re)[n].array().square() + (*im)[n].array().square()).max(1e-30);
      Eigen::MatrixXd dre =
          (-(*im)[n].array() / mag2.array() * dphi.array()).matrix();
      Eigen::MatrixXd dim =
          ((*re)[n].array() / mag2.array() * dphi.array()).matrix();
      Eigen::MatrixXd dg =
          (fr.transpose() * dre.cast<std::complex<double>>() * fc).real() +
          (fr.transpose() * dim.cast<std::complex<double>>() * fc).imag();
      for (int c = 0; c < C; ++c) {
        RowMap dxc(grad_mut(x).data() + (Eigen::Index(n) * C + c) * plane, H, W);
        dxc += dg / double(C);
      }
    }
  };
  return id;
}

int Tape::bce_with_logits(int logits, const std::vector<double>& labels) {
  const Eigen::Index n = nodes_[logits].val.size();
  if (Eigen::Index(labels.size()) != n)
    throw ConfigError("bce_with_logits: label count does not match logits");
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    double z = nodes_[logits].val(i), y = labels[i];
    total += std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::abs(z)));
  }
  int id = add({1}, Array::Constant(1, total / double(n)));
  nodes_[id].back = [this, id, logits, labels, n]() {
    double g = nodes_[id].grad(0) / double(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      // sigmoid(z) - y, evaluated from the small tail so a saturated
      // logit still yields a correctly signed (if tiny) gradient
      double z = nodes_[logits].val(i);
      double d = labels[i] > 0.5 ? -logistic(-z) + (1.0 - labels[i])
                                 : logistic(z) - labels[i];
      grad_mut(logits)(i) += g * d;
    }
  };
  return id;
}

int Tape::softmax_cross_entropy(int logits, const std::vector<int>& labels) {
  const auto& zs = nodes_[logits].shape;
  if (zs.size() != 2)
    throw ConfigError("softmax_cross_entropy: expects [N,K] logits");
  const int N = zs[0], K = zs[1];
  if (int(labels.size()) != N)
    throw ConfigError("softmax_cross_entropy: label count mismatch");
  double total = 0.0;
  for (int i = 0; i < N; ++i) {
    if (labels[i] < 0 || labels[i] >= K)
      throw ConfigError(concat("softmax_cross_entropy: label ", labels[i],
                               " out of range [0,", K, ")"));
    auto z = nodes_[logits].val.segment(Eigen::Index(i) * K, K);
    double zmax = z.maxCoeff();
    total += std::log((z - zmax).exp().sum()) + zmax - z(labels[i]);
  }
  int id = add({1}, Array::Constant(1, total / N));
  nodes_[id].back = [this, id, logits, labels, N, K]() {
    double g = nodes_[id].grad(0) / N;
    for (int i = 0; i < N; ++i) {
      auto z = nodes_[logits].val.segment(Eigen::Index(i) * K, K);
      Array p = (z - z.maxCoeff()).exp();
      p /= p.sum();
      p(labels[i]) -= 1.0;
      grad_mut(logits).segment(Eigen::Index(i) * K, K) += g * p;
    }
  };
  return id;
}

int Tape::recon_l2(int xhat, const Array& target, const std::vector<char>& mask) {
  const auto& xs = nodes_[xhat].shape;
  if (nodes_[xhat].val.size() != target.size())
    throw ConfigError("recon_l2: target size does not match prediction");
  const int N = xs[0];
  if (int(mask.size()) != N) throw ConfigError("recon_l2: mask size mismatch");
  const Eigen::Index per = nodes_[xhat].val.size() / N;
  int selected = 0;
  double total = 0.0;
  for (int n = 0; n < N; ++n) {
    if (!mask[n]) continue;
    ++selected;
    total += (nodes_[xhat].val.segment(Eigen::Index(n) * per, per) -
              target.segment(Eigen::Index(n) * per, per))
                 .square()
                 .mean();
  }
  int denom = std::max(1, selected);
  int id = add({1}, Array::Constant(1, total / denom));
  nodes_[id].back = [this, id, xhat, target, mask, N, per, denom]() {
    double g = nodes_[id].grad(0) / denom;
    for (int n = 0; n < N; ++n) {
      if (!mask[n]) continue;
      grad_mut(xhat).segment(Eigen::Index(n) * per, per) +=
          g * 2.0 / double(per) *
          (nodes_[xhat].val.segment(Eigen::Index(n) * per, per) -
           target.segment(Eigen::Index(n) * per, per));
    }
  };
  return id;
}

int Tape::recon_l2(int xhat, int target, const std::vector<char>& mask) {
  const auto& xs = nodes_[xhat].shape;
  if (nodes_[xhat].val.size() != nodes_[target].val.size())
    throw ConfigError("recon_l2: target size does not match prediction");
  const int N = xs[0];
  if (int(mask.size()) != N) throw ConfigError("recon_l2: mask size mismatch");
  const Eigen::Index per = nodes_[xhat].val.size() / N;
  int selected = 0;
  double total = 0.0;
  for (int n = 0; n < N; ++n) {
    if (!mask[n]) continue;
    ++selected;
    total += (nodes_[xhat].val.segment(Eigen::Index(n) * per, per) -
              nodes_[target].val.segment(Eigen::Index(n) * per, per))
                 .square()
                 .mean();
  }
  int denom = std::max(1, selected);
  int id = add({1}, Array::Constant(1, total / denom));
  nodes_[id].back = [this, id, xhat, target, mask, N, per, denom]() {
    double g = nodes_[id].grad(0) / denom;
    for (int n = 0; n < N; ++n) {
      if (!mask[n]) continue;
      Array diff = g * 2.0 / double(per) *
                   (nodes_[xhat].val.segment(Eigen::Index(n) * per, per) -
                    nodes_[target].val.segment(Eigen::Index(n) * per, per));
      grad_mut(xhat).segment(Eigen::Index(n) * per, per) += diff;
      grad_mut(target).segment(Eigen::Index(n) * per, per) -= diff;
    }
  };
  return id;
}

int Tape::contrastive_pull(int emb, const std::vector<int>& labels) {
  const auto& es = nodes_[emb].shape;
  if (es.size() != 2) throw ConfigError("contrastive_pull: expects [N,F]");
  const int N = es[0], F = es[1];
  if (int(labels.size()) != N)
    throw ConfigError("contrastive_pull: label count mismatch");
  int pairs = 0;
  double total = 0.0;
  for (int i = 0; i < N; ++i)
    for (int j = i + 1; j < N; ++j) {
      if (labels[i] != labels[j]) continue;
      ++pairs;
      total += (nodes_[emb].val.segment(Eigen::Index(i) * F, F) -
                nodes_[emb].val.segment(Eigen::Index(j) * F, F))
                   .square()
                   .sum();
    }
  int denom = std::max(1, pairs);
  int id = add({1}, Array::Constant(1, total / denom));
  nodes_[id].back = [this, id, emb, labels, N, F, denom]() {
    double g = nodes_[id].grad(0) * 2.0 / denom;
    for (int i = 0; i < N; ++i)
      for (int j = i + 1; j < N; ++j) {
        if (labels[i] != labels[j]) continue;
        Array diff = nodes_[emb].val.segment(Eigen::Index(i) * F, F) -
                     nodes_[emb].val.segment(Eigen::Index(j) * F, F);
        grad_mut(emb).segment(Eigen::Index(i) * F, F) += g * diff;
        grad_mut(emb).segment(Eigen::Index(j) * F, F) -= g * diff;
      }
  };
  return id;
}

int Tape::weighted_sum(const std::vector<int>& terms,
                       const std::vector<double>& coeffs) {
  if (terms.size() != coeffs.size() || terms.empty())
    throw ConfigError("weighted_sum: terms and coefficients must pair up");
  double total = 0.0;
  for (size_t i = 0; i < terms.size(); ++i) {
    if (nodes_[terms[i]].val.size() != 1)
      throw ConfigError("weighted_sum: terms must be scalar nodes");
    total += coeffs[i] * nodes_[terms[i]].val(0);
  }
  int id = add({1}, Array::Constant(1, total));
  nodes_[id].back = [this, id, terms, coeffs]() {
    for (size_t i = 0; i < terms.size(); ++i)
      grad_mut(terms[i])(0) += coeffs[i] * nodes_[id].grad(0);
  };
  return id;
}

}  // namespace dumbench
