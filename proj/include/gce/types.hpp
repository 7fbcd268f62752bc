#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

namespace gce {

using Vector = Eigen::VectorXd;
// Points are stored one per row.
using Matrix = Eigen::MatrixXd;

using Seed = std::uint64_t;

}  // namespace gce
