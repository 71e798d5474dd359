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

#include "fisherhash/retrieval.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>

#include "fisherhash/data_io.hpp"
#include "fisherhash/error.hpp"
#include "fisherhash/parallel.hpp"

namespace fisherhash {

namespace {

constexpr std::size_t kQueryChunk = 16;

void check_tables(const BinaryCodeMatrix& queries, const BinaryCodeMatrix& database) {
  if (queries.bits() != database.bits()) {
    throw InvalidArgument("search: query codes have " + std::to_string(queries.bits()) +
                          " bits, database has " + std::to_string(database.bits()));
  }
  if (database.items() == 0) throw InvalidArgument("search: empty database");
}

// Counting sort on distance. Scanning the database in index order keeps
// equal-distance items in ascending index order.
void rank_into(const BinaryCodeMatrix& queries, std::size_t q, const BinaryCodeMatrix& database,
               std::vector<int>& dist, std::vector<std::size_t>& order) {
  const std::size_t n = database.items();
  const std::size_t bits = database.bits();
  dist.resize(n);
  std::vector<std::size_t> bucket(bits + 2, 0);
  const auto qcol = queries.column(q);
  for (std::size_t i = 0; i < n; ++i) {
    dist[i] = hamming_distance(qcol, database.column(i), bits);
    ++bucket[static_cast<std::size_t>(dist[i]) + 1];
  }
  for (std::size_t d = 1; d < bucket.size(); ++d) bucket[d] += bucket[d - 1];
  order.resize(n);
  for (std::size_t i = 0; i < n; ++i) order[bucket[static_cast<std::size_t>(dist[i])]++] = i;
}

struct Partial {
  std::vector<double> map_sum;
  std::vector<double> prec_sum;
  std::vector<double> rec_sum;
  std::vector<double> rad_prec_sum;
  std::vector<std::size_t> rad_prec_count;
  std::vector<double> rad_rec_sum;
  std::size_t with_relevant = 0;

  Partial(std::size_t ks, std::size_t n_max, std::size_t radii)
      : map_sum(ks, 0.0),
        prec_sum(n_max, 0.0),
        rec_sum(n_max, 0.0),
        rad_prec_sum(radii, 0.0),
        rad_prec_count(radii, 0),
        rad_rec_sum(radii, 0.0) {}

  void add(const Partial& o) {
    auto acc = [](auto& a, const auto& b) {
      for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
    };
    acc(map_sum, o.map_sum);
    acc(prec_sum, o.prec_sum);
    acc(rec_sum, o.rec_sum);
    acc(rad_prec_sum, o.rad_prec_sum);
    acc(rad_prec_count, o.rad_prec_count);
    acc(rad_rec_sum, o.rad_rec_sum);
    with_relevant += o.with_relevant;
  }
};

}  // namespace

std::vector<RankedResult> search(const BinaryCodeMatrix& queries, const BinaryCodeMatrix& database,
                                 std::size_t k, int threads) {
  check_tables(queries, database);
  if (k == 0 || k > database.items()) {
    throw InvalidArgument("search: k=" + std::to_string(k) + " outside [1, " +
                          std::to_string(database.items()) + "]");
  }
  std::vector<RankedResult> out(queries.items());
  parallel_for_chunks(queries.items(), kQueryChunk, threads, [&](std::size_t begin, std::size_t end) {
    std::vector<int> dist;
    std::vector<std::size_t> order;
    for (std::size_t q = begin; q < end; ++q) {
      rank_into(queries, q, database, dist, order);
      auto& res = out[q];
      res.query = q;
      res.neighbors.resize(k);
      for (std::size_t r = 0; r < k; ++r) res.neighbors[r] = {order[r], dist[order[r]]};
    }
  });
  return out;
}

std::vector<std::size_t> rank_database(const BinaryCodeMatrix& queries, std::size_t query,
                                       const BinaryCodeMatrix& database) {
  check_tables(queries, database);
  if (query >= queries.items()) throw InvalidArgument("rank_database: query index out of range");
  std::vector<int> dist;
  std::vector<std::size_t> order;
  rank_into(queries, query, database, dist, order);
  return order;
}

double average_precision(std::span<const int> flags, std::size_t relevant_total) {
  if (flags.empty()) throw InvalidArgument("average_precision: empty ranking");
  if (relevant_total == 0) throw InvalidArgument("average_precision: no relevant items");
  double sum = 0.0;
  std::size_t hits = 0;
  for (std::size_t r = 0; r < flags.size(); ++r) {
    if (flags[r] != 0) {
      ++hits;
      sum += static_cast<double>(hits) / static_cast<double>(r + 1);
    }
  }
  const std::size_t norm = std::min(relevant_total, flags.size());
  return sum / static_cast<double>(norm);
}

MetricsReport metrics_report(const BinaryCodeMatrix& queries, const BinaryCodeMatrix& database,
                             const std::vector<std::vector<int>>& query_labels,
                             const std::vector<std::vector<int>>& db_labels,
                             const MetricsOptions& options) {
  check_tables(queries, database);
  if (query_labels.size() != queries.items() || db_labels.size() != database.items()) {
    throw InvalidArgument("metrics_report: label tables do not match code tables");
  }
  if (queries.items() == 0) throw InvalidArgument("metrics_report: no queries");
  const std::size_t n_db = database.items();
  for (std::size_t k : options.ks) {
    if (k == 0 || k > n_db) {
      throw InvalidArgument("metrics_report: k=" + std::to_string(k) + " outside [1, " +
                            std::to_string(n_db) + "]");
    }
  }
  const std::size_t n_max = options.rank_curve_max == 0 ? n_db : options.rank_curve_max;
  if (n_max > n_db) throw InvalidArgument("metrics_report: rank curve longer than the database");
  const std::size_t radii = database.bits() + 1;

  const std::size_t n_q = queries.items();
  const std::size_t chunks = (n_q + kQueryChunk - 1) / kQueryChunk;
  std::vector<Partial> partials(chunks, Partial(options.ks.size(), n_max, radii));

  parallel_for_chunks(n_q, kQueryChunk, options.threads, [&](std::size_t begin, std::size_t end) {
    Partial& part = partials[begin / kQueryChunk];
    std::vector<int> dist;
    std::vector<std::size_t> order;
    std::vector<int> flags(n_db);
    std::vector<std::size_t> rel_at(radii), tot_at(radii);
    for (std::size_t q = begin; q < end; ++q) {
      rank_into(queries, q, database, dist, order);
      std::size_t relevant = 0;
      std::fill(rel_at.begin(), rel_at.end(), 0);
      std::fill(tot_at.begin(), tot_at.end(), 0);
      for (std::size_t r = 0; r < n_db; ++r) {
        const std::size_t item = order[r];
        flags[r] = shares_label(query_labels[q], db_labels[item]) ? 1 : 0;
        relevant += static_cast<std::size_t>(flags[r]);
        ++tot_at[static_cast<std::size_t>(dist[item])];
        rel_at[static_cast<std::size_t>(dist[item])] += static_cast<std::size_t>(flags[r]);
      }

      std::size_t cum = 0;
      for (std::size_t n = 0; n < n_max; ++n) {
        cum += static_cast<std::size_t>(flags[n]);
        part.prec_sum[n] += static_cast<double>(cum) / static_cast<double>(n + 1);
        if (relevant > 0) part.rec_sum[n] += static_cast<double>(cum) / static_cast<double>(relevant);
      }

      std::size_t rel_le = 0, tot_le = 0;
      for (std::size_t r = 0; r < radii; ++r) {
        rel_le += rel_at[r];
        tot_le += tot_at[r];
        if (tot_le > 0) {
          part.rad_prec_sum[r] += static_cast<double>(rel_le) / static_cast<double>(tot_le);
          ++part.rad_prec_count[r];
        }
        if (relevant > 0) {
          part.rad_rec_sum[r] += static_cast<double>(rel_le) / static_cast<double>(relevant);
        }
      }

      if (relevant == 0) continue;
      ++part.with_relevant;
      for (std::size_t t = 0; t < options.ks.size(); ++t) {
        part.map_sum[t] +=
            average_precision(std::span<const int>(flags.data(), options.ks[t]), relevant);
      }
    }
  });

  Partial total(options.ks.size(), n_max, radii);
  for (const auto& p : partials) total.add(p);

  MetricsReport rep;
  rep.queries = n_q;
  rep.queries_with_relevant = total.with_relevant;
  const double rel_queries = static_cast<double>(total.with_relevant);
  for (std::size_t t = 0; t < options.ks.size(); ++t) {
    rep.map.push_back({options.ks[t], total.with_relevant ? total.map_sum[t] / rel_queries : 0.0});
  }
  for (std::size_t n = 0; n < n_max; ++n) {
    rep.rank_curve.push_back({n + 1, total.prec_sum[n] / static_cast<double>(n_q),
                              total.with_relevant ? total.rec_sum[n] / rel_queries : 0.0});
  }
  for (std::size_t r = 0; r < radii; ++r) {
    const double p = total.rad_prec_count[r]
                         ? total.rad_prec_sum[r] / static_cast<double>(total.rad_prec_count[r])
                         : 0.0;
    rep.radius_curve.push_back(
        {static_cast<int>(r), p, total.with_relevant ? total.rad_rec_sum[r] / rel_queries : 0.0});
  }
  return rep;
}

std::string format_real(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void write_metrics_csv(const MetricsReport& report, const std::filesystem::path& dir) {
  auto open = [&](const char* name) {
    std::ofstream out(dir / name);
    if (!out) throw DataError("cannot write " + (dir / name).string());
    return out;
  };
  {
    auto out = open("map.csv");
    out << "k,map\n";
    for (const auto& p : report.map) out << p.k << ',' << format_real(p.map) << '\n';
  }
  {
    auto out = open("prn.csv");
    out << "N,precision,recall\n";
    for (const auto& p : report.rank_curve) {
      out << p.n << ',' << format_real(p.precision) << ',' << format_real(p.recall) << '\n';
    }
  }
  {
    auto out = open("pr.csv");
    out << "radius,precision,recall\n";
    for (const auto& p : report.radius_curve) {
      out << p.radius << ',' << format_real(p.precision) << ',' << format_real(p.recall) << '\n';
    }
  }
}

}  // namespace fisherhash
