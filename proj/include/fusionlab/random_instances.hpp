#pragma once

#include <vector>

#include "fusionlab/gaussian.hpp"
#include "fusionlab/rng.hpp"

namespace fusionlab {

/// Random density with mean ~ N(0, mean_scale^2 I) and a well-conditioned
/// random SPD covariance; deterministic given the stream state. Shared by
/// the chain verifier and the property tests.
GaussianDensity random_gaussian(RandomStream& rng, Eigen::Index dim, double mean_scale = 10.0);

std::vector<GaussianDensity> random_gaussian_set(RandomStream& rng, Eigen::Index dim,
                                                 std::size_t count, double mean_scale = 10.0);

/// Strictly positive weights summing to one.
SimplexWeights random_interior_weights(RandomStream& rng, Eigen::Index count);

}  // namespace fusionlab
