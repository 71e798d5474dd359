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

#include "fisherhash/data_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "json.hpp"

#include "fisherhash/binary_io.hpp"
#include "fisherhash/error.hpp"

namespace fisherhash {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr char kFeatureMagic[] = "FHFT";
constexpr std::uint32_t kFeatureVersion = 1;

void check_split(const std::vector<std::size_t>& split, std::size_t items, const char* name) {
  std::set<std::size_t> seen;
  for (std::size_t i : split) {
    if (i >= items) {
      throw DataError(std::string("split ") + name + ": index " + std::to_string(i) +
                      " out of range for " + std::to_string(items) + " items");
    }
    if (!seen.insert(i).second) {
      throw DataError(std::string("split ") + name + ": index " + std::to_string(i) + " repeated");
    }
  }
}

bool intersects(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
  const std::set<std::size_t> sa(a.begin(), a.end());
  return std::any_of(b.begin(), b.end(), [&](std::size_t i) { return sa.count(i) > 0; });
}

std::vector<std::size_t> index_list(const json& j, const char* key) {
  if (!j.contains(key)) return {};
  return j.at(key).get<std::vector<std::size_t>>();
}

}  // namespace

void DatasetManifest::validate() const {
  if (input_dim == 0 || items == 0 || classes == 0) {
    throw DataError("manifest: input_dim, items and classes must all be >= 1");
  }
  check_split(train, items, "train");
  check_split(query, items, "query");
  check_split(database, items, "database");
  if (intersects(query, train)) throw DataError("manifest: query and train splits overlap");
  if (!query_in_database && intersects(query, database)) {
    throw DataError("manifest: query and database splits overlap (set query_in_database)");
  }
}

DatasetManifest load_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open manifest: " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": invalid JSON: " + e.what());
  }
  DatasetManifest m;
  try {
    const fs::path base = path.parent_path();
    m.name = j.value("name", path.stem().string());
    m.features = base / j.at("features").get<std::string>();
    m.labels = base / j.at("labels").get<std::string>();
    m.input_dim = j.at("input_dim").get<std::size_t>();
    m.items = j.at("items").get<std::size_t>();
    m.classes = j.at("classes").get<std::size_t>();
    const json splits = j.value("splits", json::object());
    m.train = index_list(splits, "train");
    m.query = index_list(splits, "query");
    m.database = index_list(splits, "database");
    m.query_in_database = j.value("query_in_database", false);
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": malformed manifest: " + e.what());
  }
  if (m.train.empty()) {
    m.train.resize(m.items);
    for (std::size_t i = 0; i < m.items; ++i) m.train[i] = i;
  }
  m.validate();
  return m;
}

void save_manifest(const DatasetManifest& m, const fs::path& path) {
  json j;
  j["name"] = m.name;
  j["features"] = m.features.string();
  j["labels"] = m.labels.string();
  j["input_dim"] = m.input_dim;
  j["items"] = m.items;
  j["classes"] = m.classes;
  j["splits"] = {{"train", m.train}, {"query", m.query}, {"database", m.database}};
  j["query_in_database"] = m.query_in_database;
  std::ofstream out(path);
  if (!out) throw DataError("cannot write manifest: " + path.string());
  out << j.dump(2) << "\n";
}

RealMatrix read_features(const fs::path& path) {
  auto r = io::ByteReader::open(path);
  r.expect_magic(kFeatureMagic);
  if (const auto version = r.u32(); version != kFeatureVersion) {
    throw DataError(path.string() + ": unsupported feature-file version " + std::to_string(version));
  }
  const std::uint32_t dim = r.u32();
  const std::uint32_t items = r.u32();
  r.expect_remaining(std::size_t{dim} * items * 4, "feature payload");
  RealMatrix x(dim, items);
  for (Eigen::Index i = 0; i < x.cols(); ++i) {
    for (Eigen::Index d = 0; d < x.rows(); ++d) {
      const float v = r.f32();
      if (std::isnan(v) || std::isinf(v)) {
        throw DataError(path.string() + ": non-finite feature at item " + std::to_string(i) +
                        ", dim " + std::to_string(d));
      }
      x(d, i) = v;
    }
  }
  return x;
}

void write_features(const RealMatrix& x, const fs::path& path) {
  io::ByteWriter w;
  w.magic(kFeatureMagic);
  w.u32(kFeatureVersion);
  w.u32(static_cast<std::uint32_t>(x.rows()));
  w.u32(static_cast<std::uint32_t>(x.cols()));
  for (Eigen::Index i = 0; i < x.cols(); ++i) {
    for (Eigen::Index d = 0; d < x.rows(); ++d) w.f32(static_cast<float>(x(d, i)));
  }
  w.save(path);
}

RealMatrix load_features(const DatasetManifest& m) {
  RealMatrix x = read_features(m.features);
  if (static_cast<std::size_t>(x.rows()) != m.input_dim) {
    throw DataError(m.features.string() + ": feature dim " + std::to_string(x.rows()) +
                    " does not match manifest input_dim " + std::to_string(m.input_dim));
  }
  if (static_cast<std::size_t>(x.cols()) != m.items) {
    throw DataError(m.features.string() + ": " + std::to_string(x.cols()) +
                    " items, manifest says " + std::to_string(m.items));
  }
  return x;
}

std::vector<std::vector<int>> read_label_sets(const fs::path& path, std::size_t items,
                                              std::size_t classes) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open label file: " + path.string());
  std::vector<std::vector<int>> sets(items);
  std::vector<bool> filled(items, false);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    const auto where = path.string() + ":" + std::to_string(line_no);
    const auto colon = line.find(':');
    if (colon == std::string::npos) throw DataError(where + ": expected \"index: c1 c2 ...\"");
    std::size_t item = 0;
    {
      std::istringstream head(line.substr(0, colon));
      if (!(head >> item)) throw DataError(where + ": bad item index");
    }
    if (item >= items) throw DataError(where + ": item index " + std::to_string(item) + " >= N");
    if (filled[item]) throw DataError(where + ": item " + std::to_string(item) + " listed twice");
    std::istringstream rest(line.substr(colon + 1));
    std::string tok;
    std::vector<int> labels;
    while (rest >> tok) {
      int c = -1;
      const auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), c);
      if (ec != std::errc() || p != tok.data() + tok.size() || c < 0) {
        throw DataError(where + ": bad class id \"" + tok + "\"");
      }
      if (static_cast<std::size_t>(c) >= classes) {
        throw DataError(where + ": class id " + std::to_string(c) + " >= M=" +
                        std::to_string(classes));
      }
      labels.push_back(c);
    }
    if (labels.empty()) throw DataError(where + ": empty label row");
    sets[item] = std::move(labels);
    filled[item] = true;
  }
  for (std::size_t i = 0; i < items; ++i) {
    if (!filled[i]) throw DataError(path.string() + ": no labels for item " + std::to_string(i));
  }
  return sets;
}

void write_label_sets(const std::vector<std::vector<int>>& sets, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write label file: " + path.string());
  for (std::size_t i = 0; i < sets.size(); ++i) {
    out << i << ":";
    for (int c : sets[i]) out << ' ' << c;
    out << '\n';
  }
}

LabelMatrix load_labels(const DatasetManifest& m) {
  return LabelMatrix::from_label_sets(read_label_sets(m.labels, m.items, m.classes), m.classes);
}

bool shares_label(const std::vector<int>& a, const std::vector<int>& b) {
  for (int x : a) {
    if (std::find(b.begin(), b.end(), x) != b.end()) return true;
  }
  return false;
}

RealMatrix Dataset::features_of(const std::vector<std::size_t>& idx) const {
  RealMatrix out(features.rows(), static_cast<Eigen::Index>(idx.size()));
  for (std::size_t r = 0; r < idx.size(); ++r) {
    out.col(static_cast<Eigen::Index>(r)) = features.col(static_cast<Eigen::Index>(idx[r]));
  }
  return out;
}

Dataset load_dataset(const fs::path& manifest_path) {
  const DatasetManifest m = load_manifest(manifest_path);
  Dataset d;
  d.name = m.name;
  d.features = load_features(m);
  d.labels = load_labels(m);
  d.train = m.train;
  d.query = m.query;
  d.database = m.database.empty() ? m.train : m.database;
  return d;
}

Dataset make_synthetic(const SyntheticSpec& spec) {
  if (spec.classes < 2) throw InvalidArgument("make_synthetic: need at least 2 classes");
  if (spec.dim == 0 || spec.train_per_class == 0) {
    throw InvalidArgument("make_synthetic: dim and train_per_class must be >= 1");
  }
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  const auto dim = static_cast<Eigen::Index>(spec.dim);
  RealMatrix means = RealMatrix::Zero(dim, static_cast<Eigen::Index>(spec.classes));
  for (std::size_t c = 0; c < spec.classes; ++c) {
    const auto col = static_cast<Eigen::Index>(c);
    if (spec.classes <= spec.dim) {
      means(col, col) = 1.0;
    } else {
      for (Eigen::Index d = 0; d < dim; ++d) means(d, col) = gauss(rng);
      means.col(col).normalize();
    }
  }
  if (spec.classes <= spec.dim) {
    // Center the simplex so that, e.g., two classes sit at antipodal points.
    const RealVector centroid = means.rowwise().mean();
    means.colwise() -= centroid;
  }
  means *= spec.separation;

  const std::size_t per_class = spec.train_per_class + spec.query_per_class;
  Dataset out;
  out.name = "synthetic";
  out.features.resize(dim, static_cast<Eigen::Index>(per_class * spec.classes));
  std::vector<std::vector<int>> labels;
  labels.reserve(per_class * spec.classes);
  std::size_t item = 0;
  for (std::size_t c = 0; c < spec.classes; ++c) {
    for (std::size_t k = 0; k < per_class; ++k, ++item) {
      const auto col = static_cast<Eigen::Index>(item);
      for (Eigen::Index d = 0; d < dim; ++d) {
        out.features(d, col) = means(d, static_cast<Eigen::Index>(c)) + spec.noise * gauss(rng);
      }
      labels.push_back({static_cast<int>(c)});
      (k < spec.train_per_class ? out.train : out.query).push_back(item);
    }
  }
  out.labels = LabelMatrix::from_label_sets(std::move(labels), spec.classes);
  out.database = out.train;
  return out;
}

}  // namespace fisherhash
