/*
 * Copyright 2026 The FisherHash Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Dataset ingestion.
//
//   feature file   "FHFT", version u32, dim u32, N u32, then N*dim f32 (LE),
//                  one contiguous record per item
//   label file     UTF-8 text, one line per item: "index: c1 c2 ..."
//   manifest       JSON, see DatasetManifest

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "fisherhash/binary_codes.hpp"
#include "fisherhash/center_learning.hpp"

namespace fisherhash {

struct DatasetManifest {
  std::string name;
  std::filesystem::path features;
  std::filesystem::path labels;
  std::size_t input_dim = 0;
  std::size_t items = 0;
  std::size_t classes = 0;
  std::vector<std::size_t> train;
  std::vector<std::size_t> query;
  std::vector<std::size_t> database;
  bool query_in_database = false;

  /// Index ranges and split disjointness rules. Throws DataError.
  void validate() const;
};

/// Relative feature/label paths are resolved against the manifest's folder.
DatasetManifest load_manifest(const std::filesystem::path& path);
void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);

RealMatrix read_features(const std::filesystem::path& path);
void write_features(const RealMatrix& features, const std::filesystem::path& path);
/// read_features plus the manifest's dimension and item-count checks.
RealMatrix load_features(const DatasetManifest& manifest);

/// Label rows may appear in any order but must cover 0..items-1 exactly once.
std::vector<std::vector<int>> read_label_sets(const std::filesystem::path& path,
                                              std::size_t items, std::size_t classes);
void write_label_sets(const std::vector<std::vector<int>>& sets, const std::filesystem::path& path);
LabelMatrix load_labels(const DatasetManifest& manifest);

/// True iff the two label sets intersect.
bool shares_label(const std::vector<int>& a, const std::vector<int>& b);

struct Dataset {
  std::string name;
  RealMatrix features;  // dim x N
  LabelMatrix labels;
  std::vector<std::size_t> train;
  std::vector<std::size_t> query;
  std::vector<std::size_t> database;

  RealMatrix features_of(const std::vector<std::size_t>& idx) const;
};

Dataset load_dataset(const std::filesystem::path& manifest_path);

struct SyntheticSpec {
  std::size_t classes = 2;
  std::size_t train_per_class = 100;
  std::size_t query_per_class = 0;
  std::size_t dim = 2;
  double separation = 4.0;
  double noise = 1.0;
  std::uint64_t seed = 0;
};

/// Isotropic Gaussian blobs, one per class. With classes <= dim the class
/// means are separation * (e_c - centroid), a centered simplex (two classes
/// are antipodal); otherwise they are random unit directions scaled by
/// separation. Items are laid out class by class:
/// the first train_per_class of every class go to the train split, the rest
/// to the query split; the database split is the train split.
Dataset make_synthetic(const SyntheticSpec& spec);

}  // namespace fisherhash
