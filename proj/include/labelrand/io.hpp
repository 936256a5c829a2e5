//
// Copyright 2026 The labelrand Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//
// File exchange formats. Everything is plain CSV with an `id` first column
// (an optional header row is recognized by its literal `id` cell); quoting
// is not supported, ids must not contain commas. Parse errors always carry
// the file name and line number. Writers are atomic (temp file + rename)
// and deterministic byte-for-byte given identical inputs.

#ifndef LABELRAND_IO_HPP_
#define LABELRAND_IO_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "labelrand/core.hpp"
#include "labelrand/priors.hpp"

namespace labelrand::io {

struct LabelsFile {
  std::vector<std::string> ids;
  std::vector<int> labels;
  std::vector<size_t> lines;  // source line per row, for later error reports
};

struct PriorsFile {
  std::vector<std::string> ids;
  std::vector<std::vector<double>> rows;  // one probability row per id
  std::vector<size_t> lines;

  int num_classes() const { return rows.empty() ? 0 : static_cast<int>(rows.front().size()); }
};

// id,label; duplicate ids and non-integer labels are errors.
LabelsFile read_labels_csv(const std::filesystem::path& path);

// id,f0,...,fd-1; all rows must share a dimension >= 1.
FeatureMatrix read_features_csv(const std::filesystem::path& path);

// id,p0,...,pK-1; rows are validated as priors by the caller.
PriorsFile read_priors_csv(const std::filesystem::path& path);

void write_priors_csv(const std::filesystem::path& path,
                      const std::vector<std::string>& ids,
                      const std::vector<Prior>& priors);

struct RandomizedRow {
  std::string id;
  int label = 0;
  int k_star = 0;  // written only in with-prior mode
};

void write_randomized_csv(const std::filesystem::path& path,
                          const std::vector<RandomizedRow>& rows,
                          bool with_k_star);

// Shortest-roundtrip decimal text for a double.
std::string format_double(double value);

// FNV-1a 64 over the raw file bytes, for run manifests.
uint64_t file_digest(const std::filesystem::path& path);

// Writes content to path via a temporary file in the same directory followed
// by an atomic rename.
void write_text_atomic(const std::filesystem::path& path,
                       const std::string& content);

}  // namespace labelrand::io

#endif  // LABELRAND_IO_HPP_
