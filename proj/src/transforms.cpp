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

#include "dumbench/transforms.hpp"

#include <cmath>
#include <map>
#include <mutex>

#include "dumbench/common.hpp"

namespace dumbench {

namespace {
std::mutex g_cache_mutex;
}

const Eigen::MatrixXd& dct_matrix(int n) {
  if (n <= 0) throw ConfigError("dct_matrix: size must be positive");
  static std::map<int, Eigen::MatrixXd> cache;
  std::lock_guard<std::mutex> lock(g_cache_mutex);
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  Eigen::MatrixXd c(n, n);
  const double pi = std::acos(-1.0);
  for (int k = 0; k < n; ++k) {
    double scale = std::sqrt((k == 0 ? 1.0 : 2.0) / n);
    for (int j = 0; j < n; ++j)
      c(k, j) = scale * std::cos(pi * (2 * j + 1) * k / (2.0 * n));
  }
  return cache.emplace(n, std::move(c)).first->second;
}

const Eigen::MatrixXcd& dft_matrix(int n) {
  if (n <= 0) throw ConfigError("dft_matrix: size must be positive");
  static std::map<int, Eigen::MatrixXcd> cache;
  std::lock_guard<std::mutex> lock(g_cache_mutex);
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  Eigen::MatrixXcd f(n, n);
  const double pi = std::acos(-1.0);
  const double norm = 1.0 / std::sqrt(double(n));
  for (int k = 0; k < n; ++k)
    for (int j = 0; j < n; ++j) {
      double a = -2.0 * pi * k * j / n;
      f(k, j) = std::complex<double>(std::cos(a) * norm, std::sin(a) * norm);
    }
  return cache.emplace(n, std::move(f)).first->second;
}

Eigen::MatrixXd dct2d(const Eigen::MatrixXd& x) {
  if (x.rows() == 0 || x.cols() == 0)
    throw ConfigError("dct2d: zero-size input");
  const Eigen::MatrixXd& cr = dct_matrix(int(x.rows()));
  const Eigen::MatrixXd& cc = dct_matrix(int(x.cols()));
  return cr * x * cc.transpose();
}

Eigen::MatrixXd idct2d(const Eigen::MatrixXd& x) {
  if (x.rows() == 0 || x.cols() == 0)
    throw ConfigError("idct2d: zero-size input");
  const Eigen::MatrixXd& cr = dct_matrix(int(x.rows()));
  const Eigen::MatrixXd& cc = dct_matrix(int(x.cols()));
  return cr.transpose() * x * cc;
}

Eigen::MatrixXd fft_phase(const Eigen::MatrixXd& x) {
  if (x.rows() == 0 || x.cols() == 0)
    throw ConfigError("fft_phase: zero-size input");
  const Eigen::MatrixXcd& fr = dft_matrix(int(x.rows()));
  const Eigen::MatrixXcd& fc = dft_matrix(int(x.cols()));
  Eigen::MatrixXcd spectrum = fr * x * fc.transpose();
  Eigen::MatrixXd phase(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    for (Eigen::Index j = 0; j < x.cols(); ++j)
      phase(i, j) = std::atan2(spectrum(i, j).imag(), spectrum(i, j).real());
  return phase;
}

}  // namespace dumbench
