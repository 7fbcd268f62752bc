#include <algorithm>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "scenarios.hpp"

#include "gce/data.hpp"
#include "gce/error.hpp"
#include "gce/explain.hpp"
#include "gce/groups.hpp"
#include "gce/metrics.hpp"
#include "gce/repr.hpp"

using namespace gce;

namespace {

Vector V(std::initializer_list<double> xs) {
  Vector v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index k = 0;
  for (double x : xs) v[k++] = x;
  return v;
}

}  // namespace

TEST_SUITE("metrics") {

TEST_CASE("identical groups under a huge epsilon match completely") {
  const Dataset data(Matrix::Identity(4, 3) + Matrix::Ones(4, 3));
  const Grouping grouping({0, 1, 0, 1});
  const auto model = ReprModel::Linear(Matrix::Ones(2, 3));
  const Vector zero = Vector::Zero(3);
  CHECK(Correctness(model, data, grouping, 0, 0, zero, 1e9) == 1.0);
  CHECK(Coverage(model, data, grouping, 0, 0, zero, 1e9) == 1.0);
  CHECK_THROWS_AS(Correctness(model, data, grouping, 0, 0, Vector::Ones(3), 1e9), Error);
}

TEST_CASE("far-apart groups never match") {
  Matrix rows(4, 2);
  rows << 0, 0, 0, 0.1, 10, 0, 10, 0.1;
  const Dataset data(rows);
  const Grouping grouping({0, 0, 1, 1});
  const auto model = ReprModel::Identity(2);
  CHECK(Correctness(model, data, grouping, 0, 1, Vector::Zero(2), 1.0) == 0.0);
  CHECK(Coverage(model, data, grouping, 0, 1, Vector::Zero(2), 1.0) == 0.0);
}

TEST_CASE("three-point groups against the brute-force loop") {
  // Images are listed by hand: group 0 at (0,0), (1,0), (5,5); group 1 at
  // (1,1), (2,0), (9,9). With delta = (1,0) group 0 lands on (1,0), (2,0), (6,5).
  Matrix rows(6, 2);
  rows << 0, 0, 1, 0, 5, 5, 1, 1, 2, 0, 9, 9;
  const Dataset data(rows);
  const Grouping grouping({0, 0, 0, 1, 1, 1});
  const auto model = ReprModel::Identity(2);
  const Vector delta = V({1, 0});
  // (1,0) is within 1 of (1,1); (2,0) hits (2,0); (6,5) is far from everything.
  CHECK(Correctness(model, data, grouping, 0, 1, delta, 1.0) == doctest::Approx(2.0 / 3.0));
  // (1,1) and (2,0) are covered, (9,9) is not.
  CHECK(Coverage(model, data, grouping, 0, 1, delta, 1.0) == doctest::Approx(2.0 / 3.0));
  const std::vector<oracle::Vec> src = {{1, 0}, {2, 0}, {6, 5}};
  const std::vector<oracle::Vec> dst = {{1, 1}, {2, 0}, {9, 9}};
  CHECK(Correctness(model, data, grouping, 0, 1, delta, 1.0) ==
        oracle::MatchFraction(src, dst, 1.0, false));
  CHECK(Coverage(model, data, grouping, 0, 1, delta, 1.0) ==
        oracle::MatchFraction(dst, src, 1.0, false));
}

TEST_CASE("metrics equal the O(n^2) brute force on random instances") {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 500; ++trial) {
    const auto inst = scenario::RandomMetricInstance(rng);
    const auto model = inst.Model();
    const Vector zero = Vector::Zero(inst.data.dim());
    const auto src = scenario::Images(inst.layers, inst.data.rows(), inst.grouping.Members(inst.i), inst.delta);
    const auto dst = scenario::Images(inst.layers, inst.data.rows(), inst.grouping.Members(inst.j), zero);
    const bool self = inst.i == inst.j;
    CHECK(Correctness(model, inst.data, inst.grouping, inst.i, inst.j, inst.delta,
                      inst.epsilon) == oracle::MatchFraction(src, dst, inst.epsilon, self));
    CHECK(Coverage(model, inst.data, inst.grouping, inst.i, inst.j, inst.delta,
                   inst.epsilon) == oracle::MatchFraction(dst, src, inst.epsilon, self));
  }
}

TEST_CASE("metrics are monotone in epsilon") {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 50; ++trial) {
    const auto inst = scenario::RandomMetricInstance(rng);
    const auto model = inst.Model();
    double prev_cr = 0.0, prev_cv = 0.0;
    for (double eps = inst.epsilon / 64.0; eps <= inst.epsilon * 64.0; eps *= 2.0) {
      const double cr = Correctness(model, inst.data, inst.grouping, inst.i, inst.j, inst.delta, eps);
      const double cv = Coverage(model, inst.data, inst.grouping, inst.i, inst.j, inst.delta, eps);
      CHECK(cr >= prev_cr);
      CHECK(cv >= prev_cv);
      prev_cr = cr;
      prev_cv = cv;
    }
  }
}

TEST_CASE("correctness and coverage are dual under linear maps") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const int d = 3 + trial % 5;
    const Dataset data(oracle::RandomMatrix(rng, 60, d));
    const Grouping grouping(oracle::RandomLabels(rng, 60, 3));
    const auto model = ReprModel::Linear(oracle::RandomMatrix(rng, 2, d));
    const Vector delta = oracle::RandomVector(rng, d, 0.3);
    const double eps = 0.05 + 0.1 * (trial % 4);
    CHECK(Correctness(model, data, grouping, 0, 2, delta, eps) ==
          Coverage(model, data, grouping, 2, 0, -delta, eps));
  }
}

TEST_CASE("equal spreads give good correctness and coverage") {
  const auto s = scenario::MakeTwoGaussians(5, 200, 0.5, 0.5);
  const auto model = ReprModel::Identity(2);
  const auto cal = CalibrateEpsilon(s.data.rows(), s.grouping, DefaultEpsilonGrid(s.data.rows()));
  const auto stats = ComputeGroupStats(s.data, s.grouping, model);
  const Vector delta = Dbm(stats).basis(1);
  CHECK(Correctness(model, s.data, s.grouping, 0, 1, delta, cal.epsilon) >= 0.9);
  CHECK(Coverage(model, s.data, s.grouping, 0, 1, delta, cal.epsilon) >= 0.9);
}

TEST_CASE("a wider target gives good correctness but poor coverage") {
  const auto s = scenario::MakeTwoGaussians(5, 200, 0.3, 1.5);
  const auto model = ReprModel::Identity(2);
  const auto cal = CalibrateEpsilon(s.data.rows(), s.grouping, DefaultEpsilonGrid(s.data.rows()));
  const auto stats = ComputeGroupStats(s.data, s.grouping, model);
  const Vector delta = Dbm(stats).basis(1);
  CHECK(Correctness(model, s.data, s.grouping, 0, 1, delta, cal.epsilon) >= 0.9);
  CHECK(Coverage(model, s.data, s.grouping, 0, 1, delta, cal.epsilon) <= 0.7);
  // Reversed, the pattern mirrors.
  CHECK(Correctness(model, s.data, s.grouping, 1, 0, -delta, cal.epsilon) <= 0.7);
  CHECK(Coverage(model, s.data, s.grouping, 1, 0, -delta, cal.epsilon) >= 0.9);
}

TEST_CASE("similarity") {
  CHECK(Similarity(V({1, 0, 2}), V({3, 1, -1})) == 1.0);
  CHECK(Similarity(V({1, 0, 0}), V({0, 4, 4})) == 0.0);
  CHECK(Similarity(V({1, 1, 0}), V({5, 0, 0})) == doctest::Approx(0.5));
  CHECK_THROWS_AS(Similarity(V({0, 0}), V({1, 1})), Error);
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    Vector e = oracle::RandomVector(rng, 6);
    e[trial % 6] = 0.0;
    CHECK(Similarity(e, e) == doctest::Approx(1.0).epsilon(1e-14));
  }
}

TEST_CASE("pairwise report") {
  SUBCASE("identical groups with zero translations") {
    Matrix rows(4, 3);
    rows << 1, 2, 3, 1, 2, 3, 1, 2, 3, 1, 2, 3;
    const Dataset data(rows);
    const Grouping grouping({0, 1, 0, 1});
    const auto model = ReprModel::Linear(Matrix::Ones(2, 3));
    const ExplanationSet set(2, 3);
    const auto report = PairwiseReport(model, data, grouping, set, 0.5);
    CHECK(report.correctness == Matrix::Ones(2, 2));
    CHECK(report.coverage == Matrix::Ones(2, 2));
    CHECK(report.mean_correctness == 1.0);
    CHECK(report.epsilon == 0.5);
  }
  SUBCASE("entries equal single-pair calls") {
    std::mt19937_64 rng(17);
    const Dataset data(oracle::RandomMatrix(rng, 80, 4));
    const Grouping grouping(oracle::RandomLabels(rng, 80, 4));
    const auto model = ReprModel::FeedForward(
        oracle::RandomNet(rng, {4, 5, 2}, Activation::kTanh, Activation::kIdentity));
    ExplanationSet set(4, 4, 1);
    for (int g : {0, 2, 3}) set.mutable_basis(g) = oracle::RandomVector(rng, 4, 0.4);
    for (std::optional<int> k : {std::optional<int>(), std::optional<int>(2)}) {
      const auto report = PairwiseReport(model, data, grouping, set, 0.2, k);
      double sum_cr = 0.0, sum_cv = 0.0;
      for (int i = 0; i < 4; ++i) {
        for (int j = 0; j < 4; ++j) {
          const Vector delta =
              i == j ? Vector::Zero(4) : (k ? ThresholdK(set.Construct(i, j), *k) : set.Construct(i, j));
          const double cr = Correctness(model, data, grouping, i, j, delta, 0.2);
          const double cv = Coverage(model, data, grouping, i, j, delta, 0.2);
          CHECK(report.correctness(i, j) == cr);
          CHECK(report.coverage(i, j) == cv);
          if (i != j) {
            sum_cr += cr;
            sum_cv += cv;
          }
        }
      }
      CHECK(report.mean_correctness == doctest::Approx(sum_cr / 12.0));
      CHECK(report.mean_coverage == doctest::Approx(sum_cv / 12.0));
    }
  }
  SUBCASE("group count must agree") {
    const Dataset data(Matrix::Ones(4, 3));
    const auto model = ReprModel::Linear(Matrix::Ones(2, 3));
    CHECK_THROWS_AS(PairwiseReport(model, data, Grouping({0, 1, 0, 1}), ExplanationSet(3, 3), 1.0),
                    Error);
  }
}

}  // TEST_SUITE
