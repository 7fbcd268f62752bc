#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>

#include "doctest.h"
#include "oracles.hpp"

#include "gce/data.hpp"
#include "gce/error.hpp"
#include "gce/groups.hpp"
#include "gce/repr.hpp"

using namespace gce;

namespace {

Matrix Points(std::initializer_list<std::initializer_list<double>> rows) {
  Matrix m(static_cast<Eigen::Index>(rows.size()),
           static_cast<Eigen::Index>(rows.begin()->size()));
  Eigen::Index r = 0;
  for (const auto& row : rows) {
    Eigen::Index c = 0;
    for (double v : row) m(r, c++) = v;
    ++r;
  }
  return m;
}

std::filesystem::path TempPath(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("gce_groups_" + name);
}

}  // namespace

TEST_SUITE("groups") {

TEST_CASE("grouping validation") {
  CHECK_NOTHROW(Grouping({0, 1, -1, 1}));
  CHECK_THROWS_AS(Grouping({0, 0, 0}), Error);  // one group
  CHECK_THROWS_AS(Grouping({0, 2, 2}), Error);  // group 1 empty
  CHECK_THROWS_AS(Grouping({0, 1, -2}), Error);
  const Grouping g({1, 0, -1, 1});
  CHECK(g.count() == 2);
  CHECK(g.Members(1) == std::vector<Eigen::Index>{0, 3});
  CHECK(g.Members(0) == std::vector<Eigen::Index>{1});
}

TEST_CASE("k-means separates two obvious clusters") {
  const Matrix pts = Points({{0, 0}, {0, 0}, {9, 9}, {9, 9}});
  const auto g = KMeans(pts, {2, 1});
  CHECK(g.count() == 2);
  CHECK(g.labels()[0] == g.labels()[1]);
  CHECK(g.labels()[2] == g.labels()[3]);
  CHECK(g.labels()[0] != g.labels()[2]);
}

TEST_CASE("k-means is deterministic and validates k") {
  std::mt19937_64 rng(4);
  const Matrix pts = oracle::RandomMatrix(rng, 60, 2);
  CHECK(KMeans(pts, {3, 7}).labels() == KMeans(pts, {3, 7}).labels());
  CHECK_THROWS_AS(KMeans(pts, {1, 0}), Error);
  CHECK_THROWS_AS(KMeans(pts, {61, 0}), Error);
}

TEST_CASE("labels file round trip") {
  const auto path = TempPath("labels.txt");
  SaveLabels({0, 0, 1, 1}, path);
  CHECK(LoadLabels(path) == std::vector<int>{0, 0, 1, 1});
  CHECK(Grouping(LoadLabels(path)).labels() == std::vector<int>{0, 0, 1, 1});
  {
    std::ofstream out(path);
    out << "0\nx\n";
  }
  CHECK_THROWS_AS(LoadLabels(path), Error);
  std::filesystem::remove(path);
}

TEST_CASE("adjusted Rand index") {
  CHECK(AdjustedRandIndex({0, 0, 1, 1}, {1, 1, 0, 0}) == doctest::Approx(1.0));
  CHECK(AdjustedRandIndex({0, 0, 1, 1}, {0, 0, 1, 2}) ==
        doctest::Approx(0.5714285714285714));
  CHECK(AdjustedRandIndex({0, 0, 0, 1, 1, 1}, {0, 0, 1, 1, 2, 2}) ==
        doctest::Approx(0.24242424242424243));
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    const auto a = oracle::RandomLabels(rng, 40, 2 + trial % 4);
    const auto b = oracle::RandomLabels(rng, 40, 2 + trial % 5);
    CHECK(AdjustedRandIndex(a, b) == doctest::Approx(oracle::AdjustedRandIndex(a, b)));
  }
}

TEST_CASE("group means") {
  SUBCASE("single-point group") {
    const Dataset data(Points({{1, 2, 3}, {4, 5, 6}}));
    const auto model = ReprModel::Linear(Points({{1, 0, 1}}));
    const auto stats = ComputeGroupStats(data, Grouping({0, 1}), model);
    CHECK(stats.x_bar[1] == data.rows().row(1).transpose());
    CHECK(stats.r_bar[1][0] == doctest::Approx(10.0));
    CHECK(stats.counts == std::vector<std::size_t>{1, 1});
  }
  SUBCASE("identity representation") {
    const Dataset data(Points({{0, 0}, {2, 2}, {5, 5}}));
    const auto stats = ComputeGroupStats(data, Grouping({0, 0, 1}), ReprModel::Identity(2));
    CHECK(stats.x_bar[0] == Vector::Constant(2, 1.0));
    CHECK(stats.r_bar[0] == Vector::Constant(2, 1.0));
  }
  SUBCASE("nonlinear map: mean of images, not image of mean") {
    std::mt19937_64 rng(3);
    const auto layers =
        oracle::RandomNet(rng, {3, 5, 2}, Activation::kTanh, Activation::kTanh, 2.0);
    const auto model = ReprModel::FeedForward(layers);
    const Dataset data(Points({{0, 0, 0}, {3, -1, 2}, {0.1, 0.2, 0.3}, {1, 1, 1}}));
    const auto stats = ComputeGroupStats(data, Grouping({0, 0, 0, 1}), model);
    oracle::Vec mean(2, 0.0);
    for (int r = 0; r < 3; ++r) {
      const auto img = oracle::Forward(layers, oracle::ToVec(data.rows().row(r).transpose()));
      for (int k = 0; k < 2; ++k) mean[static_cast<std::size_t>(k)] += img[static_cast<std::size_t>(k)] / 3.0;
    }
    CHECK(stats.r_bar[0][0] == doctest::Approx(mean[0]).epsilon(1e-13));
    CHECK(stats.r_bar[0][1] == doctest::Approx(mean[1]).epsilon(1e-13));
    CHECK((stats.r_bar[0] - model.Forward(stats.x_bar[0])).norm() > 1e-3);
  }
}

TEST_CASE("group means are invariant to row order") {
  std::mt19937_64 rng(12);
  const Matrix rows = oracle::RandomMatrix(rng, 30, 3);
  const auto labels = oracle::RandomLabels(rng, 30, 3);
  const auto model = ReprModel::FeedForward(
      oracle::RandomNet(rng, {3, 4, 2}, Activation::kTanh, Activation::kIdentity));
  std::vector<int> order(30);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  Matrix shuffled(30, 3);
  std::vector<int> shuffled_labels(30);
  for (int r = 0; r < 30; ++r) {
    shuffled.row(r) = rows.row(order[static_cast<std::size_t>(r)]);
    shuffled_labels[static_cast<std::size_t>(r)] = labels[static_cast<std::size_t>(order[static_cast<std::size_t>(r)])];
  }
  const auto a = ComputeGroupStats(Dataset(rows), Grouping(labels), model);
  const auto b = ComputeGroupStats(Dataset(shuffled), Grouping(shuffled_labels), model);
  for (int g = 0; g < 3; ++g) {
    CHECK((a.x_bar[static_cast<std::size_t>(g)] - b.x_bar[static_cast<std::size_t>(g)]).norm() < 1e-14);
    CHECK((a.r_bar[static_cast<std::size_t>(g)] - b.r_bar[static_cast<std::size_t>(g)]).norm() < 1e-14);
  }
}

TEST_CASE("epsilon calibration") {
  SUBCASE("coincident members take the first grid value") {
    const Matrix reps = Points({{0, 0}, {0, 0}, {5, 5}, {5, 5}});
    const auto cal = CalibrateEpsilon(reps, Grouping({0, 0, 1, 1}), {0.5, 1, 2});
    CHECK(cal.epsilon == 0.5);
    CHECK(cal.min_self_similarity == 1.0);
  }
  SUBCASE("hand-computed distances") {
    // Within-group squared distances are exactly 4; across groups they are >= 64.
    const Matrix reps = Points({{0, 0}, {2, 0}, {10, 0}, {10, 2}});
    const auto cal = CalibrateEpsilon(reps, Grouping({0, 0, 1, 1}), {1, 4, 9});
    CHECK(cal.epsilon == 4);
  }
  SUBCASE("exhausted grid") {
    const Matrix reps = Points({{0, 0}, {2, 0}, {10, 0}, {10, 2}});
    try {
      CalibrateEpsilon(reps, Grouping({0, 0, 1, 1}), {1e-12});
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.category() == ErrorCategory::kNumeric);
      CHECK(std::string(e.what()).find("0") != std::string::npos);
    }
  }
  SUBCASE("grid must ascend") {
    const Matrix reps = Points({{0, 0}, {2, 0}, {10, 0}, {10, 2}});
    CHECK_THROWS_AS(CalibrateEpsilon(reps, Grouping({0, 0, 1, 1}), {4, 1}), Error);
    CHECK_THROWS_AS(CalibrateEpsilon(reps, Grouping({0, 0, 1, 1}), {}), Error);
  }
}

TEST_CASE("calibration properties on random groups") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 40; ++trial) {
    const Matrix reps = oracle::RandomMatrix(rng, 40, 2);
    const Grouping grouping(oracle::RandomLabels(rng, 40, 2 + trial % 3));
    const auto grid = DefaultEpsilonGrid(reps);
    const auto cal = CalibrateEpsilon(reps, grouping, grid);
    for (int g = 0; g < grouping.count(); ++g) {
      const double s = SelfSimilarity(reps, grouping, g, cal.epsilon);
      CHECK(s >= 0.95);
      CHECK(s <= 1.0);
    }
    // Prepending smaller grid values never raises the result.
    std::vector<double> wider;
    for (double e = grid.front() / 1024.0; e < grid.front(); e *= 2.0) wider.push_back(e);
    wider.insert(wider.end(), grid.begin(), grid.end());
    CHECK(CalibrateEpsilon(reps, grouping, wider).epsilon <= cal.epsilon);
  }
}

TEST_CASE("default epsilon grid") {
  const Matrix reps = Points({{0, 0}, {3, 4}});
  const auto grid = DefaultEpsilonGrid(reps);
  REQUIRE(grid.size() == 60);
  CHECK(grid.front() == doctest::Approx(25e-6));
  CHECK(grid.back() == doctest::Approx(2500));
  for (std::size_t k = 1; k < grid.size(); ++k) CHECK(grid[k] > grid[k - 1]);
}

}  // TEST_SUITE
