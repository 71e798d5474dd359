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

// Exact Hamming ranking and the usual retrieval metrics.
//
// Conventions:
//  * ties at equal distance are broken by ascending database index;
//  * an item is relevant to a query iff their label sets intersect;
//  * AP@k is normalized by min(R, k), R = relevant items in the database,
//    and queries with R = 0 are left out of MAP and recall averages.

#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "fisherhash/binary_codes.hpp"

namespace fisherhash {

struct Neighbor {
  std::size_t index = 0;
  int distance = 0;

  friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

struct RankedResult {
  std::size_t query = 0;
  std::vector<Neighbor> neighbors;  // nondecreasing distance, length k
};

/// Top-k database items for every query by linear popcount scan.
std::vector<RankedResult> search(const BinaryCodeMatrix& queries, const BinaryCodeMatrix& database,
                                 std::size_t k, int threads = 1);

/// Full ranking of the database for one query (k = N_db), as indices only.
std::vector<std::size_t> rank_database(const BinaryCodeMatrix& queries, std::size_t query,
                                       const BinaryCodeMatrix& database);

/// AP over the given ranked relevance flags, normalized by
/// min(relevant_total, flags.size()).
double average_precision(std::span<const int> flags, std::size_t relevant_total);

struct MapPoint {
  std::size_t k = 0;
  double map = 0.0;
};

struct RankPoint {
  std::size_t n = 0;
  double precision = 0.0;
  double recall = 0.0;
};

struct RadiusPoint {
  int radius = 0;
  double precision = 0.0;
  double recall = 0.0;
};

struct MetricsReport {
  std::vector<MapPoint> map;
  std::vector<RankPoint> rank_curve;    // P@N and R@N, N = 1..n_max
  std::vector<RadiusPoint> radius_curve;  // PR by Hamming radius 0..K
  std::size_t queries = 0;
  std::size_t queries_with_relevant = 0;
};

struct MetricsOptions {
  std::vector<std::size_t> ks;
  std::size_t rank_curve_max = 0;  // 0: the whole database
  int threads = 1;
};

MetricsReport metrics_report(const BinaryCodeMatrix& queries, const BinaryCodeMatrix& database,
                             const std::vector<std::vector<int>>& query_labels,
                             const std::vector<std::vector<int>>& db_labels,
                             const MetricsOptions& options);

/// Writes map.csv, prn.csv and pr.csv into `dir`.
void write_metrics_csv(const MetricsReport& report, const std::filesystem::path& dir);

/// Shortest round-trip decimal form used in every CSV this library writes.
std::string format_real(double v);

}  // namespace fisherhash
