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

#pragma once

#include <array>
#include <map>
#include <string>
#include <vector>

#include "dumbench/io.hpp"
#include "dumbench/tensor.hpp"

namespace dumbench {

/// Procedural dual-dataset generator. D1 carries four forgery methods
/// (ids 1..4), D2 a single distinct one (id 5); reals have method id 0.
/// Every identity contributes an equal count of real and fake samples.
struct DatasetSpec {
  std::string id = "D1";  // "D1" or "D2"
  int side = 32;
  int channels = 3;
  int identities = 20;
  int per_identity = 10;  // must be even: half real, half fake
  uint64_t seed = 1;

  std::vector<int> methods() const {
    return id == "D1" ? std::vector<int>{1, 2, 3, 4} : std::vector<int>{5};
  }
  void validate() const;
};

struct Sample {
  Tensor image;     // [3,H,W], values on the 1/255 grid
  int label = 0;    // 0=real, 1=fake
  int method = 0;   // 0 for reals
  int identity = 0;
  std::string dataset;
  Tensor original;  // paired clean image (fakes only)
};

struct Dataset {
  DatasetSpec spec;
  std::vector<Sample> samples;
};

/// Model-facing view of a set of samples.
struct LabeledBatch {
  Tensor images;  // [N,C,H,W]
  std::vector<double> labels;
  std::vector<int> methods;
  std::vector<int> identities;
  std::string dataset;

  int size() const { return labels.empty() ? 0 : int(labels.size()); }
};

enum class Partition { Train, Val, Test };
const char* partition_name(Partition p);

struct SplitAssignment {
  std::map<int, Partition> by_identity;
};

Dataset generate(const DatasetSpec& spec);

/// Identity-disjoint split; errors if too few identities to get within
/// +-2 percentage points of the requested ratios.
SplitAssignment split(const Dataset& data, const std::array<double, 3>& ratios,
                      uint64_t seed);

std::vector<const Sample*> partition_samples(const Dataset& data,
                                             const SplitAssignment& split,
                                             Partition p);

LabeledBatch to_batch(const std::vector<const Sample*>& samples);
LabeledBatch to_batch(const Dataset& data, const SplitAssignment& split,
                      Partition p);

/// Dataset cache: one PPM per sample plus an index.tsv with label, method,
/// identity, partition, and the paired original.
void save_dataset(const fs::path& dir, const Dataset& data,
                  const SplitAssignment& split);
std::pair<Dataset, SplitAssignment> load_dataset(const fs::path& dir);

}  // namespace dumbench
