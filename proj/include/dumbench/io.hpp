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

#include <filesystem>
#include <string>
#include <vector>

#include "dumbench/tensor.hpp"

namespace dumbench {

namespace fs = std::filesystem;

/// Write-then-rename so an interrupted run never leaves a truncated artifact.
void atomic_write_file(const fs::path& path, const std::string& bytes);
std::string read_file(const fs::path& path);
uint64_t hash_file(const fs::path& path);

/// 8-bit binary PPM (P6). Pixel values must be exact multiples of 1/255 so
/// the roundtrip is lossless; the dataset generator quantizes accordingly.
void write_ppm(const fs::path& path, const Tensor& chw);
Tensor read_ppm(const fs::path& path);

/// Raw little-endian float64 blob with a tiny header carrying the shape.
void write_f64_blob(const fs::path& path, const Tensor& t);
Tensor read_f64_blob(const fs::path& path);

}  // namespace dumbench
