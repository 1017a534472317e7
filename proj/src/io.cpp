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

#include "dumbench/io.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

namespace dumbench {

void atomic_write_file(const fs::path& path, const std::string& bytes) {
  fs::create_directories(path.parent_path().empty() ? "." : path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError(concat("cannot open for writing: ", tmp.string()));
    out.write(bytes.data(), std::streamsize(bytes.size()));
    if (!out) throw ConfigError(concat("short write: ", tmp.string()));
  }
  fs::rename(tmp, path);
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(concat("cannot open: ", path.string()));
  std::string bytes((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());
  return bytes;
}

uint64_t hash_file(const fs::path& path) { return fnv1a64(read_file(path)); }

void write_ppm(const fs::path& path, const Tensor& chw) {
  if (chw.shape.size() != 3 || chw.dim(0) != 3)
    throw ConfigError("write_ppm: expected [3,H,W] tensor");
  const int H = chw.dim(1), W = chw.dim(2);
  std::string bytes = concat("P6\n", W, " ", H, "\n255\n");
  bytes.reserve(bytes.size() + size_t(3) * H * W);
  for (int i = 0; i < H; ++i)
    for (int j = 0; j < W; ++j)
      for (int c = 0; c < 3; ++c) {
        double v = chw.data((Eigen::Index(c) * H + i) * W + j);
        long q = std::lround(v * 255.0);
        if (q < 0 || q > 255 || std::abs(v * 255.0 - double(q)) > 1e-6)
          throw ConfigError("write_ppm: pixel not on the 1/255 grid");
        bytes.push_back(char(static_cast<unsigned char>(q)));
      }
  atomic_write_file(path, bytes);
}

Tensor read_ppm(const fs::path& path) {
  std::string bytes = read_file(path);
  std::istringstream head(bytes.substr(0, 64));
  std::string magic;
  int w = 0, h = 0, maxv = 0;
  head >> magic >> w >> h >> maxv;
  if (magic != "P6" || maxv != 255 || w <= 0 || h <= 0)
    throw ConfigError(concat("read_ppm: unsupported header in ", path.string()));
  size_t offset = size_t(head.tellg()) + 1;  // single whitespace after maxval
  if (bytes.size() < offset + size_t(3) * w * h)
    throw ConfigError(concat("read_ppm: truncated file ", path.string()));
  Tensor t = Tensor::zeros({3, h, w});
  for (int i = 0; i < h; ++i)
    for (int j = 0; j < w; ++j)
      for (int c = 0; c < 3; ++c)
        t.data((Eigen::Index(c) * h + i) * w + j) =
            double(static_cast<unsigned char>(
                bytes[offset + (size_t(i) * w + j) * 3 + c])) /
            255.0;
  return t;
}

void write_f64_blob(const fs::path& path, const Tensor& t) {
  std::string bytes = "F64\n";
  bytes += std::to_string(t.shape.size());
  for (int d : t.shape) bytes += concat(" ", d);
  bytes += "\n";
  size_t payload = size_t(t.size()) * sizeof(double);
  size_t head = bytes.size();
  bytes.resize(head + payload);
  std::memcpy(bytes.data() + head, t.data.data(), payload);
  atomic_write_file(path, bytes);
}

Tensor read_f64_blob(const fs::path& path) {
  std::string bytes = read_file(path);
  if (bytes.rfind("F64\n", 0) != 0)
    throw ConfigError(concat("read_f64_blob: bad magic in ", path.string()));
  size_t eol = bytes.find('\n', 4);
  if (eol == std::string::npos)
    throw ConfigError(concat("read_f64_blob: bad header in ", path.string()));
  std::istringstream head(bytes.substr(4, eol - 4));
  int rank = 0;
  head >> rank;
  std::vector<int> shape(rank);
  for (int& d : shape) head >> d;
  Tensor t = Tensor::zeros(shape);
  size_t payload = size_t(t.size()) * sizeof(double);
  if (bytes.size() != eol + 1 + payload)
    throw ConfigError(concat("read_f64_blob: truncated file ", path.string()));
  std::memcpy(t.data.data(), bytes.data() + eol + 1, payload);
  return t;
}

}  // namespace dumbench
