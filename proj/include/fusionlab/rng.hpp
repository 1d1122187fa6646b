#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string_view>

namespace fusionlab {

/// Deterministic random stream (xoshiro256++ seeded through splitmix64).
///
/// Streams are derived by name and index from a master seed, so every
/// (trial, sensor, filter) consumer owns an independent sequence and Monte
/// Carlo runs come out identical regardless of execution order or thread
/// count.
class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed);

    /// Derives an independent substream keyed by (seed, name, index).
    static RandomStream derive(std::uint64_t seed, std::string_view name, std::uint64_t index = 0);

    std::uint64_t next_u64();

    /// Uniform double in [0, 1).
    double uniform();

    /// Standard normal draw (Box-Muller, second value cached).
    double normal();

    /// Vector of independent standard normal draws.
    Eigen::VectorXd normal_vector(Eigen::Index n);

private:
    std::uint64_t state_[4];
    double cached_normal_ = 0.0;
    bool has_cached_normal_ = false;
};

}  // namespace fusionlab
