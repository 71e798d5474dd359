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

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"

#include "fisherhash/data_io.hpp"
#include "fisherhash/error.hpp"
#include "test_util.hpp"

using namespace fisherhash;

namespace {

RealMatrix float_matrix(std::mt19937_64& rng, std::size_t rows, std::size_t cols) {
  RealMatrix m = fh_test::random_matrix(rng, rows, cols);
  return m.cast<float>().cast<double>();
}

std::string error_of(auto&& fn) {
  try {
    fn();
  } catch (const DataError& e) {
    return e.what();
  }
  return "";
}

/// Writes a small manifest-backed dataset and returns the manifest path.
std::filesystem::path write_dataset(const std::filesystem::path& dir, nlohmann::json splits) {
  std::mt19937_64 rng(71);
  write_features(float_matrix(rng, 3, 6), dir / "x.fhft");
  fh_test::spit(dir / "y.txt", "0: 0\n1: 1\n2: 0 1\n3: 2\n4: 2\n5: 1\n");
  nlohmann::json m = {{"name", "tiny"},        {"features", "x.fhft"}, {"labels", "y.txt"},
                      {"input_dim", 3},        {"items", 6},           {"classes", 3},
                      {"splits", splits}};
  fh_test::spit(dir / "m.json", m.dump());
  return dir / "m.json";
}

}  // namespace

TEST_CASE("feature files round trip bit-identically") {
  const auto dir = fh_test::scratch_dir("data_io_features");
  std::mt19937_64 rng(72);
  const RealMatrix x = float_matrix(rng, 7, 11);
  write_features(x, dir / "x.fhft");
  CHECK(read_features(dir / "x.fhft") == x);
  const std::string bytes = fh_test::slurp(dir / "x.fhft");
  CHECK(bytes.size() == 16 + 7 * 11 * 4);

  fh_test::spit(dir / "cut.fhft", bytes.substr(0, bytes.size() - 5));
  const std::string msg = error_of([&] { read_features(dir / "cut.fhft"); });
  CHECK(msg.find("expected 308 bytes") != std::string::npos);
  CHECK(msg.find("found 303") != std::string::npos);

  RealMatrix bad = x;
  bad(2, 3) = std::nan("");
  write_features(bad, dir / "nan.fhft");
  CHECK(error_of([&] { read_features(dir / "nan.fhft"); }).find("non-finite") !=
        std::string::npos);
}

TEST_CASE("load_features checks the manifest dimensions") {
  const auto dir = fh_test::scratch_dir("data_io_dims");
  const auto path = write_dataset(dir, nlohmann::json::object());
  DatasetManifest m = load_manifest(path);
  CHECK(load_features(m).rows() == 3);
  m.input_dim = 4;
  CHECK(error_of([&] { load_features(m); }).find("input_dim") != std::string::npos);
  m.input_dim = 3;
  m.items = 7;
  CHECK_THROWS_AS(load_features(m), DataError);
}

TEST_CASE("label files") {
  const auto dir = fh_test::scratch_dir("data_io_labels");
  fh_test::spit(dir / "ok.txt", "1: 2 5\n0: 3\n\n");
  const auto sets = read_label_sets(dir / "ok.txt", 2, 8);
  CHECK(sets[0] == std::vector<int>{3});
  CHECK(sets[1] == std::vector<int>{2, 5});

  DatasetManifest m;
  m.labels = dir / "ok.txt";
  m.items = 2;
  m.classes = 8;
  const LabelMatrix y = load_labels(m);
  CHECK(y.matrix()(3, 0) == 1.0);
  CHECK(y.matrix()(2, 1) == 0.5);
  CHECK(y.matrix()(5, 1) == 0.5);
  for (Eigen::Index i = 0; i < 2; ++i) CHECK(std::abs(y.matrix().col(i).sum() - 1.0) < 1e-9);

  const std::vector<std::pair<std::string, std::string>> bad = {
      {"0:\n1: 1\n", "empty label row"},
      {"0: 8\n1: 1\n", "class id 8"},
      {"0: 1\n0: 1\n", "listed twice"},
      {"0: 1\n", "no labels for item 1"},
      {"0 1\n1: 1\n", "expected"},
      {"0: x\n1: 1\n", "bad class id"},
  };
  for (const auto& [text, needle] : bad) {
    fh_test::spit(dir / "bad.txt", text);
    CHECK(error_of([&] { read_label_sets(dir / "bad.txt", 2, 8); }).find(needle) !=
          std::string::npos);
  }

  write_label_sets(sets, dir / "again.txt");
  CHECK(read_label_sets(dir / "again.txt", 2, 8) == sets);
}

TEST_CASE("shares_label is symmetric and reduces to equality for single labels") {
  std::mt19937_64 rng(73);
  std::uniform_int_distribution<int> c(0, 4);
  for (int t = 0; t < 100; ++t) {
    const std::vector<int> a = {c(rng), c(rng)}, b = {c(rng)};
    CHECK(shares_label(a, b) == shares_label(b, a));
    const std::vector<int> s = {c(rng)};
    CHECK(shares_label(s, b) == (s[0] == b[0]));
  }
}

TEST_CASE("manifest loading and split rules") {
  const auto dir = fh_test::scratch_dir("data_io_manifest");
  const auto path = write_dataset(dir, {{"train", {0, 1, 2, 3}}, {"query", {4, 5}}});
  const Dataset d = load_dataset(path);
  CHECK(d.name == "tiny");
  CHECK(d.features.cols() == 6);
  CHECK(d.train == std::vector<std::size_t>{0, 1, 2, 3});
  CHECK(d.query == std::vector<std::size_t>{4, 5});
  CHECK(d.database == d.train);
  CHECK(d.labels.labels_of(2) == std::vector<int>{0, 1});
  const std::vector<std::size_t> pick = {5, 0};
  const RealMatrix sub = d.features_of(pick);
  CHECK(sub.col(0) == d.features.col(5));

  const DatasetManifest all = load_manifest(write_dataset(dir, nlohmann::json::object()));
  CHECK(all.train.size() == 6);

  CHECK_THROWS_AS(load_manifest(write_dataset(dir, {{"train", {0, 6}}})), DataError);
  CHECK_THROWS_AS(load_manifest(write_dataset(dir, {{"train", {0, 0}}})), DataError);
  CHECK_THROWS_AS(load_manifest(write_dataset(dir, {{"train", {0, 1}}, {"query", {1}}})),
                  DataError);
  CHECK_THROWS_AS(
      load_manifest(write_dataset(dir, {{"train", {0}}, {"query", {1}}, {"database", {1, 2}}})),
      DataError);

  nlohmann::json m = nlohmann::json::parse(fh_test::slurp(path));
  m["splits"] = {{"train", {0}}, {"query", {1}}, {"database", {1, 2}}};
  m["query_in_database"] = true;
  fh_test::spit(dir / "m2.json", m.dump());
  CHECK(load_manifest(dir / "m2.json").database == std::vector<std::size_t>{1, 2});

  fh_test::spit(dir / "broken.json", "{\"features\": ");
  CHECK_THROWS_AS(load_manifest(dir / "broken.json"), DataError);
  CHECK_THROWS_AS(load_manifest(dir / "absent.json"), DataError);
}

TEST_CASE("save_manifest round trip") {
  const auto dir = fh_test::scratch_dir("data_io_save");
  const auto path = write_dataset(dir, {{"train", {0, 1, 2}}, {"query", {3}}});
  const DatasetManifest m = load_manifest(path);
  save_manifest(m, dir / "copy.json");
  const DatasetManifest r = load_manifest(dir / "copy.json");
  CHECK(r.train == m.train);
  CHECK(r.query == m.query);
  CHECK(r.input_dim == m.input_dim);
}

TEST_CASE("make_synthetic is deterministic and laid out by class") {
  SyntheticSpec s;
  s.classes = 3;
  s.train_per_class = 20;
  s.query_per_class = 5;
  s.dim = 4;
  s.seed = 9;
  const Dataset a = make_synthetic(s);
  const Dataset b = make_synthetic(s);
  CHECK(a.features == b.features);
  CHECK(a.features.cols() == 75);
  CHECK(a.train.size() == 60);
  CHECK(a.query.size() == 15);
  CHECK(a.database == a.train);
  CHECK(a.labels.labels_of(0) == std::vector<int>{0});
  CHECK(a.labels.labels_of(74) == std::vector<int>{2});
  s.seed = 10;
  CHECK(make_synthetic(s).features != a.features);

  s.classes = 1;
  CHECK_THROWS_AS(make_synthetic(s), InvalidArgument);
}

TEST_CASE("make_synthetic with zero separation has coincident class means") {
  SyntheticSpec s;
  s.classes = 2;
  s.train_per_class = 4000;
  s.dim = 3;
  s.separation = 0;
  s.seed = 3;
  const Dataset d = make_synthetic(s);
  const RealVector m0 = d.features.leftCols(4000).rowwise().mean();
  const RealVector m1 = d.features.rightCols(4000).rowwise().mean();
  CHECK((m0 - m1).norm() < 0.15);
}

TEST_CASE("make_synthetic with large separation is linearly separable") {
  SyntheticSpec s;
  s.classes = 2;
  s.train_per_class = 200;
  s.dim = 2;
  s.separation = 8;
  s.seed = 4;
  const Dataset d = make_synthetic(s);
  // Least-squares probe on [x; 1] against +-1 targets.
  const Eigen::Index n = d.features.cols();
  RealMatrix a(n, 3);
  RealVector t(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    a.row(i) << d.features(0, i), d.features(1, i), 1.0;
    t(i) = d.labels.labels_of(static_cast<std::size_t>(i))[0] == 0 ? 1.0 : -1.0;
  }
  const RealVector w = a.colPivHouseholderQr().solve(t);
  const RealVector pred = a * w;
  Eigen::Index correct = 0;
  for (Eigen::Index i = 0; i < n; ++i) correct += (pred(i) >= 0) == (t(i) > 0);
  CHECK(static_cast<double>(correct) / static_cast<double>(n) >= 0.99);

  s.classes = 5;
  s.dim = 3;
  const Dataset many = make_synthetic(s);
  CHECK(many.features.rows() == 3);
}
