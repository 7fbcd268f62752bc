#pragma once

// Regenerated toy setups shared by the unit and acceptance tests.

#include <algorithm>
#include <random>
#include <vector>

#include "oracles.hpp"

#include "gce/data.hpp"
#include "gce/groups.hpp"
#include "gce/repr.hpp"
#include "gce/types.hpp"

namespace scenario {

/// Two 2-D Gaussian groups of n points each: group 0 around the origin with
/// spread `sd0`, group 1 around (gap, 0) with spread `sd1`. The representation
/// is the identity map.
struct TwoGaussians {
  gce::Dataset data;
  gce::Grouping grouping;
};

inline TwoGaussians MakeTwoGaussians(gce::Seed seed, int n, double sd0, double sd1,
                                     double gap = 6.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  gce::Matrix rows(2 * n, 2);
  std::vector<int> labels(static_cast<std::size_t>(2 * n));
  for (int p = 0; p < 2 * n; ++p) {
    const bool second = p >= n;
    const double sd = second ? sd1 : sd0;
    rows(p, 0) = (second ? gap : 0.0) + sd * normal(rng);
    rows(p, 1) = sd * normal(rng);
    labels[static_cast<std::size_t>(p)] = second ? 1 : 0;
  }
  return {gce::Dataset(rows, {"a", "b"}), gce::Grouping(labels)};
}

/// Images r(x + shift) of the listed rows, computed by the oracle forward pass.
inline std::vector<oracle::Vec> Images(const std::vector<gce::DenseLayer>& layers,
                                       const gce::Matrix& rows,
                                       const std::vector<Eigen::Index>& members,
                                       const gce::Vector& shift) {
  std::vector<oracle::Vec> out;
  for (auto r : members) {
    out.push_back(oracle::Forward(layers, oracle::ToVec(rows.row(r).transpose() + shift)));
  }
  return out;
}

/// A random metric instance: dataset, grouping, model layers, translation and
/// an epsilon placed in the middle of a gap between candidate squared
/// distances, so last-bit differences in distance evaluation cannot flip a
/// match.
struct MetricInstance {
  gce::Dataset data;
  gce::Grouping grouping;
  std::vector<gce::DenseLayer> layers;
  bool linear = false;
  int i = 0, j = 1;
  gce::Vector delta;
  double epsilon = 1.0;

  gce::ReprModel Model() const {
    if (linear) return gce::ReprModel::Linear(layers[0].weights, layers[0].bias);
    return gce::ReprModel::FeedForward(layers);
  }
};

/// n <= 200, d <= 10, m = 2; half linear, half one tanh hidden layer.
inline MetricInstance RandomMetricInstance(std::mt19937_64& rng) {
  using gce::Activation;
  std::uniform_int_distribution<int> n_dist(4, 200), d_dist(3, 10), l_dist(2, 4);
  const int n = n_dist(rng), d = d_dist(rng), l = std::min(l_dist(rng), n / 2);
  MetricInstance inst;
  inst.data = gce::Dataset(oracle::RandomMatrix(rng, n, d));
  inst.grouping = gce::Grouping(oracle::RandomLabels(rng, static_cast<std::size_t>(n), l));
  inst.linear = rng() % 2 == 0;
  inst.layers = inst.linear
                    ? oracle::RandomNet(rng, {d, 2}, Activation::kIdentity, Activation::kIdentity)
                    : oracle::RandomNet(rng, {d, 6, 2}, Activation::kTanh, Activation::kIdentity);
  inst.i = static_cast<int>(rng() % static_cast<unsigned>(l));
  inst.j = static_cast<int>(rng() % static_cast<unsigned>(l));
  inst.delta = inst.i == inst.j ? gce::Vector::Zero(d) : oracle::RandomVector(rng, d, 0.5);

  const auto src =
      Images(inst.layers, inst.data.rows(), inst.grouping.Members(inst.i), inst.delta);
  const auto dst = Images(inst.layers, inst.data.rows(), inst.grouping.Members(inst.j),
                          gce::Vector::Zero(d));
  std::vector<double> dist;
  for (const auto& a : src) {
    for (const auto& b : dst) dist.push_back(oracle::SquaredDistance(a, b));
  }
  std::sort(dist.begin(), dist.end());
  std::vector<double> mids;
  for (std::size_t k = 1; k < dist.size(); ++k) {
    if (dist[k] - dist[k - 1] > 1e-9 && dist[k - 1] > 0.0) {
      mids.push_back(0.5 * (dist[k] + dist[k - 1]));
    }
  }
  inst.epsilon = mids.empty() ? dist.back() + 1.0 : mids[rng() % mids.size()];
  return inst;
}

}  // namespace scenario
