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
#include <vector>

#include "doctest.h"

#include "fisherhash/center_learning.hpp"
#include "fisherhash/error.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace fisherhash;

namespace {

BinaryCodeMatrix column_codes(std::initializer_list<std::initializer_list<double>> cols) {
  const auto k = static_cast<Eigen::Index>(cols.begin()->size());
  RealMatrix m(k, static_cast<Eigen::Index>(cols.size()));
  Eigen::Index j = 0;
  for (const auto& c : cols) {
    Eigen::Index i = 0;
    for (double v : c) m(i++, j) = v;
    ++j;
  }
  return BinaryCodeMatrix::from_signs(m);
}

}  // namespace

TEST_CASE("LabelMatrix spreads 1/m over multiple labels") {
  const auto y = LabelMatrix::from_label_sets({{3}, {5, 2}, {2, 5, 2}}, 8);
  CHECK(y.matrix()(3, 0) == 1.0);
  CHECK(y.matrix()(2, 1) == 0.5);
  CHECK(y.matrix()(5, 1) == 0.5);
  CHECK(y.labels_of(1) == std::vector<int>{2, 5});
  CHECK(y.labels_of(2) == std::vector<int>{2, 5});
  for (Eigen::Index i = 0; i < 3; ++i) CHECK(std::abs(y.matrix().col(i).sum() - 1.0) < 1e-9);
  CHECK((y.matrix().array() >= 0).all());

  CHECK_THROWS_AS(LabelMatrix::from_label_sets({{}}, 2), DataError);
  CHECK_THROWS_AS(LabelMatrix::from_label_sets({{2}}, 2), DataError);
  CHECK_THROWS_AS(LabelMatrix::from_label_sets({{-1}}, 2), DataError);

  const std::vector<std::size_t> pick = {2, 0};
  const auto s = y.select(pick);
  CHECK(s.items() == 2);
  CHECK(s.matrix().col(1) == y.matrix().col(0));
}

TEST_CASE("target_matrix examples") {
  RealMatrix a(3, 3);
  a << 8, -8, -8, -8, 8, -8, -8, -8, 8;
  CHECK(target_matrix(8, 3) == a);
  CHECK(target_matrix(5, 1) == RealMatrix::Constant(1, 1, 5));
  RealMatrix b(2, 2);
  b << 12, -12, -12, 12;
  CHECK(target_matrix(12, 2) == b);
}

TEST_CASE("intra_loss examples") {
  const auto centers = column_codes({{1, -1}, {-1, 1}});
  const auto exact = column_codes({{1, -1}, {-1, 1}, {1, -1}});
  const auto labels = LabelMatrix::from_label_sets({{0}, {1}, {0}}, 2);
  CHECK(intra_loss(exact, centers, labels) == 0.0);

  const auto one = column_codes({{1, 1}});
  CHECK(intra_loss(one, column_codes({{1, -1}}), LabelMatrix::from_label_sets({{0}}, 1)) == 4.0);

  const auto two = column_codes({{1, 1}, {1, -1}});
  CHECK(intra_loss(one, two, LabelMatrix::from_label_sets({{0, 1}}, 2)) == 1.0);

  CHECK_THROWS_AS(intra_loss(one, two, LabelMatrix::from_label_sets({{0}, {1}}, 2)),
                  InvalidArgument);
}

TEST_CASE("inter_loss examples") {
  std::mt19937_64 rng(21);
  for (std::size_t k : {1u, 2u, 12u, 64u}) {
    const RealMatrix c1 = fh_test::random_signs(rng, k, 1);
    RealMatrix anti(k, 2), same(k, 2);
    anti << c1, -c1;
    same << c1, c1;
    const RealMatrix a = target_matrix(k, 2);
    CHECK(inter_loss(anti, a) == 0.0);
    CHECK(inter_loss(BinaryCodeMatrix::from_signs(anti), a) == 0.0);
    CHECK(inter_loss(same, a) == 8.0 * k * k);
  }
  CHECK_THROWS_AS(inter_loss(RealMatrix::Ones(2, 3), target_matrix(2, 2)), InvalidArgument);
}

TEST_CASE("inter_loss terms are monotone in pairwise inner products") {
  // Exhaustive over all center pairs at K = 4: flipping a bit that lowers
  // c_i^T c_j toward -K never raises the (i, j) term of ||C^T C - A||^2.
  const std::size_t k = 4;
  const RealMatrix a = target_matrix(k, 2);
  for (unsigned x = 0; x < 16; ++x) {
    for (unsigned y = 0; y < 16; ++y) {
      RealMatrix c(k, 2);
      for (std::size_t r = 0; r < k; ++r) {
        c(r, 0) = (x >> r) & 1 ? 1 : -1;
        c(r, 1) = (y >> r) & 1 ? 1 : -1;
      }
      const double before = inter_loss(c, a);
      for (std::size_t r = 0; r < k; ++r) {
        if (c(r, 0) != c(r, 1)) continue;
        RealMatrix flipped = c;
        flipped(r, 1) = -flipped(r, 1);
        CHECK(c.col(0).dot(flipped.col(1)) < c.col(0).dot(c.col(1)));
        CHECK(inter_loss(flipped, a) <= before);
      }
    }
  }
}

TEST_CASE("quant_loss examples") {
  std::mt19937_64 rng(22);
  const RealMatrix b = fh_test::random_signs(rng, 6, 5);
  CHECK(quant_loss(BinaryCodeMatrix::from_signs(b), b) == 0.0);
  CHECK(quant_loss(BinaryCodeMatrix(1, 1), RealMatrix::Constant(1, 1, 0.2)) ==
        doctest::Approx(0.64).epsilon(1e-15));
  const RealMatrix u = fh_test::random_matrix(rng, 6, 5);
  double ref = 0;
  for (Eigen::Index j = 0; j < 5; ++j) {
    for (Eigen::Index i = 0; i < 6; ++i) ref += (b(i, j) - u(i, j)) * (b(i, j) - u(i, j));
  }
  CHECK(std::abs(quant_loss(BinaryCodeMatrix::from_signs(b), u) - ref) < 1e-12);
  CHECK_THROWS_AS(quant_loss(BinaryCodeMatrix(6, 4), u), InvalidArgument);
}

TEST_CASE("center_gradient matches finite differences with sgn(V) frozen") {
  std::mt19937_64 rng(23);
  for (int t = 0; t < 10; ++t) {
    const std::size_t k = 6, m = 4, n = 12;
    const RealMatrix v0 = fh_test::random_matrix(rng, k, m);
    const auto codes = fh_test::random_codes(rng, k, n);
    const auto labels = LabelMatrix::from_label_sets(fh_test::random_label_sets(rng, n, m, 2), m);
    const RealMatrix a = target_matrix(k, m);
    CenterHyper h;
    h.mu = 0.3 + 0.2 * t;
    h.nu = 0.05 * t;
    h.eta = 0.1 * (t % 4);
    const RealMatrix frozen = sign_matrix(v0);
    const RealMatrix g = center_gradient(v0, codes, labels, a, h);
    const double step = 1e-5;
    for (Eigen::Index i = 0; i < v0.size(); ++i) {
      RealMatrix up = v0, dn = v0;
      up(i) += step;
      dn(i) -= step;
      const double fd = (relaxed_center_objective(up, frozen, codes, labels, a, h) -
                         relaxed_center_objective(dn, frozen, codes, labels, a, h)) /
                        (2 * step);
      CHECK(fh_test::rel_error(g(i), fd) < 1e-4);
    }
  }
}

TEST_CASE("eta term vanishes on +-1 entries") {
  std::mt19937_64 rng(24);
  const RealMatrix v = fh_test::random_signs(rng, 5, 3);
  const auto codes = fh_test::random_codes(rng, 5, 7);
  const auto labels = LabelMatrix::from_label_sets(fh_test::random_label_sets(rng, 7, 3, 1), 3);
  CenterHyper only_eta;
  only_eta.mu = 0;
  only_eta.nu = 0;
  only_eta.eta = 100;
  CHECK(center_gradient(v, codes, labels, target_matrix(5, 3), only_eta).cwiseAbs().maxCoeff() ==
        0.0);
  const CenterUpdate up = update_centers(v, codes, labels, target_matrix(5, 3), only_eta);
  CHECK(up.relaxed == v);
  CHECK(up.centers == BinaryCodeMatrix::from_signs(v));
}

TEST_CASE("update_centers with only mu converges to least squares class means") {
  std::mt19937_64 rng(25);
  const std::size_t k = 5, m = 3, n = 30;
  std::vector<std::vector<int>> sets;
  for (std::size_t i = 0; i < n; ++i) sets.push_back({static_cast<int>(i % m)});
  const auto labels = LabelMatrix::from_label_sets(sets, m);
  const auto codes = fh_test::random_codes(rng, k, n);
  CenterHyper h;
  h.mu = 1;
  h.nu = 0;
  h.eta = 0;
  h.inner_lr = 0.5;
  h.inner_steps = 400;
  const CenterUpdate up =
      update_centers(fh_test::random_matrix(rng, k, m), codes, labels, target_matrix(k, m), h);
  // V Y Y^T = B Y^T.
  const RealMatrix& y = labels.matrix();
  const RealMatrix ls = (codes.to_real() * y.transpose()) * (y * y.transpose()).inverse();
  CHECK((up.relaxed - ls).cwiseAbs().maxCoeff() < 1e-9);
  CHECK(up.centers == BinaryCodeMatrix::from_signs(up.relaxed));
}

TEST_CASE("classes without weight keep their center column") {
  std::mt19937_64 rng(26);
  const auto labels = LabelMatrix::from_label_sets({{0}, {2}, {0, 2}}, 3);
  const RealMatrix v = fh_test::random_matrix(rng, 4, 3);
  const CenterUpdate up =
      update_centers(v, fh_test::random_codes(rng, 4, 3), labels, target_matrix(4, 3), {});
  CHECK(up.relaxed.col(1) == v.col(1));
  CHECK(up.relaxed.col(0) != v.col(0));
}

TEST_CASE("update_centers reports divergence with the step index") {
  std::mt19937_64 rng(27);
  CenterHyper h;
  h.nu = 10;
  h.inner_lr = 10;
  h.inner_steps = 50;
  const auto labels = LabelMatrix::from_label_sets({{0}, {1}}, 2);
  try {
    update_centers(fh_test::random_matrix(rng, 8, 2, 5.0), fh_test::random_codes(rng, 8, 2),
                   labels, target_matrix(8, 2), h);
    FAIL("expected divergence");
  } catch (const NumericalError& e) {
    CHECK(std::string(e.what()).find("step") != std::string::npos);
  }
}

TEST_CASE("CenterHyper validation") {
  CenterHyper h;
  CHECK_NOTHROW(h.validate());
  h.inner_steps = 0;
  CHECK_THROWS_AS(h.validate(), InvalidArgument);
  h = {};
  h.mu = -1;
  CHECK_THROWS_AS(h.validate(), InvalidArgument);
  h = {};
  h.inner_lr = 0;
  CHECK_THROWS_AS(h.validate(), InvalidArgument);
}

TEST_CASE("update_codes examples") {
  const auto labels = LabelMatrix::from_label_sets({{0}}, 1);
  RealMatrix u(2, 1);
  u << 0.3, -2.5;
  auto b = update_codes(u, column_codes({{1, -1}}), labels, 1.0);
  CHECK(b.to_real() == (RealMatrix(2, 1) << 1, -1).finished());

  u << 0.3, -0.5;
  b = update_codes(u, column_codes({{-1, 1}}), labels, 1.0);
  CHECK(b.to_real() == (RealMatrix(2, 1) << -1, 1).finished());
  CHECK(code_objective(b, u, column_codes({{-1, 1}}), labels, 1.0) ==
        doctest::Approx(3.94).epsilon(1e-12));
  CHECK(code_objective(BinaryCodeMatrix::from_signs(u), u, column_codes({{-1, 1}}), labels, 1.0) ==
        doctest::Approx(8.74).epsilon(1e-12));

  std::mt19937_64 rng(28);
  const RealMatrix r = fh_test::random_matrix(rng, 9, 20);
  const auto many = LabelMatrix::from_label_sets(fh_test::random_label_sets(rng, 20, 4, 2), 4);
  CHECK(update_codes(r, fh_test::random_codes(rng, 9, 4), many, 0.0) ==
        BinaryCodeMatrix::from_signs(r));
}

TEST_CASE("update_codes is the exhaustive minimizer") {
  std::mt19937_64 rng(29);
  std::uniform_real_distribution<double> mu_dist(0.0, 3.0);
  for (int t = 0; t < 40; ++t) {
    const std::size_t k = 2 + t % 7, m = 3, n = 6;
    const auto sets = fh_test::random_label_sets(rng, n, m, 3);
    const auto labels = LabelMatrix::from_label_sets(sets, m);
    const RealMatrix c = fh_test::random_signs(rng, k, m);
    const RealMatrix u = fh_test::random_matrix(rng, k, n);
    const double mu = mu_dist(rng);
    const auto b = update_codes(u, BinaryCodeMatrix::from_signs(c), labels, mu, 1 + t % 3);
    CHECK(b.to_real() == fh_test::exhaustive_codes(u, c, labels.matrix(), mu));
  }
}

TEST_CASE("update_codes ties go to +1 like the exhaustive oracle") {
  // mu C y + u is exactly zero in some coordinates (dyadic values).
  const auto labels = LabelMatrix::from_label_sets({{0}, {1}, {0, 1}}, 2);
  RealMatrix c(3, 2);
  c << 1, -1, -1, -1, 1, 1;
  const double mu = 0.5;
  RealMatrix u = -mu * c * labels.matrix();
  u(2, 0) += 0.25;
  const auto b = update_codes(u, BinaryCodeMatrix::from_signs(c), labels, mu);
  CHECK(b.to_real() == fh_test::exhaustive_codes(u, c, labels.matrix(), mu));
  CHECK(b.at(0, 0) == 1);
  CHECK(b.at(1, 1) == 1);
}

TEST_CASE("update_codes is a translation within single-label classes") {
  std::mt19937_64 rng(30);
  const auto labels = LabelMatrix::from_label_sets({{0}, {1}, {0}, {1}, {0}}, 2);
  const RealMatrix c = fh_test::random_signs(rng, 7, 2);
  const RealMatrix u = fh_test::random_matrix(rng, 7, 5);
  const double mu = 0.7;
  const RealMatrix f = mu * c * labels.matrix() + u;
  const RealMatrix shift = f - u;
  CHECK((shift.col(0) - shift.col(2)).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((shift.col(0) - shift.col(4)).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((shift.col(1) - shift.col(3)).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(update_codes(u, BinaryCodeMatrix::from_signs(c), labels, mu) ==
        BinaryCodeMatrix::from_signs(f));
}

TEST_CASE("update_codes never increases the code objective") {
  std::mt19937_64 rng(31);
  for (int t = 0; t < 20; ++t) {
    const auto labels = LabelMatrix::from_label_sets(fh_test::random_label_sets(rng, 15, 3, 2), 3);
    const auto c = fh_test::random_codes(rng, 10, 3);
    const RealMatrix u = fh_test::random_matrix(rng, 10, 15);
    const auto start = fh_test::random_codes(rng, 10, 15);
    const auto b = update_codes(u, c, labels, 1.5);
    CHECK(code_objective(b, u, c, labels, 1.5) <= code_objective(start, u, c, labels, 1.5));
  }
}

TEST_CASE("init_centers is the label-weighted mean") {
  RealMatrix u(2, 3);
  u << 1, 3, 9, 3, 1, 9;
  const auto single = LabelMatrix::from_label_sets({{0}, {0}, {1}}, 2);
  const RealMatrix v = init_centers(u, single);
  CHECK(v.col(0) == (RealVector(2) << 2, 2).finished());
  CHECK(v.col(1) == u.col(2));

  std::mt19937_64 rng(32);
  const auto sets = fh_test::random_label_sets(rng, 25, 4, 3);
  const auto multi = LabelMatrix::from_label_sets(sets, 4);
  const RealMatrix r = fh_test::random_matrix(rng, 5, 25);
  const RealMatrix got = init_centers(r, multi);
  for (int c = 0; c < 4; ++c) {
    RealVector num = RealVector::Zero(5);
    double den = 0;
    for (std::size_t i = 0; i < sets.size(); ++i) {
      for (int l : sets[i]) {
        if (l != c) continue;
        num += r.col(static_cast<Eigen::Index>(i)) / static_cast<double>(sets[i].size());
        den += 1.0 / static_cast<double>(sets[i].size());
      }
    }
    CHECK((got.col(c) - num / den).cwiseAbs().maxCoeff() < 1e-12);
  }

  try {
    init_centers(u, LabelMatrix::from_label_sets({{0}, {0}, {2}}, 3));
    FAIL("expected empty-class error");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("class 1") != std::string::npos);
  }
}

TEST_CASE("alternation keeps codes optimal for the final centers") {
  std::mt19937_64 rng(33);
  const auto labels = LabelMatrix::from_label_sets(fh_test::random_label_sets(rng, 40, 4, 1), 4);
  const RealMatrix u = fh_test::random_matrix(rng, 8, 40);
  CenterHyper h;
  const DiscreteState s = alternate_codes_and_centers(u, labels, std::nullopt, h, 3, 2);
  CHECK(s.centers == BinaryCodeMatrix::from_signs(s.relaxed));
  CHECK(s.codes == update_codes(u, s.centers, labels, h.mu));
  CHECK_THROWS_AS(alternate_codes_and_centers(u, labels, std::nullopt, h, 0), InvalidArgument);

  const DiscreteState again = alternate_codes_and_centers(u, labels, std::nullopt, h, 3, 1);
  CHECK(again.relaxed == s.relaxed);
  CHECK(again.codes == s.codes);
}

TEST_CASE("relaxed center sidecar round trip") {
  const auto dir = fh_test::scratch_dir("center_learning");
  std::mt19937_64 rng(34);
  const RealMatrix v = fh_test::random_matrix(rng, 7, 3);
  save_relaxed_centers(v, dir / "v.fhcv");
  CHECK(load_relaxed_centers(dir / "v.fhcv") == v);
  const std::string bytes = fh_test::slurp(dir / "v.fhcv");
  CHECK(bytes.size() == 16 + 7 * 3 * 8);
  fh_test::spit(dir / "cut.fhcv", bytes.substr(0, 30));
  CHECK_THROWS_AS(load_relaxed_centers(dir / "cut.fhcv"), DataError);
}
