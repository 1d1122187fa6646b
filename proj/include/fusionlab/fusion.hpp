#pragma once

#include <string>
#include <vector>

#include "fusionlab/gaussian.hpp"

namespace fusionlab {

enum class FusionRule { naive, ga, ci, ffcc, cu_max, cu_min, aa_merged };

std::string to_string(FusionRule rule);

/// Result of any single-Gaussian fusion rule, carrying the rule tag and the
/// fusing weights that produced it (for the weight-free naive rule the
/// placeholder is uniform).
struct FusedPair {
    GaussianDensity estimate;
    FusionRule rule;
    SimplexWeights weights_used;
};

/// Product-of-Gaussians fusion: cov = (sum P_i^-1)^-1, mean = cov * sum
/// P_i^-1 mu_i. Valid only under independence; optimistic otherwise.
FusedPair naive_fuse(const std::vector<GaussianDensity>& sources);

/// Normalized weighted geometric average: P = (sum w_i P_i^-1)^-1,
/// mean = P * sum w_i P_i^-1 mu_i. Requires weights totalling one.
FusedPair ga_fuse(const std::vector<GaussianDensity>& sources, const SimplexWeights& w);

/// Covariance intersection: ga_fuse at the weights minimizing the fused
/// covariance trace over the closed simplex (deterministic grid search;
/// boundary weights are admissible).
FusedPair ci_fuse(const std::vector<GaussianDensity>& sources);

/// Fast fusion with constant coefficients: the geometric-average formulas
/// applied to weights totalling delta <= 1, deliberately more conservative
/// than covariance intersection.
FusedPair ffcc_fuse(const std::vector<GaussianDensity>& sources, const SimplexWeights& w);

enum class CuBound { max, min };

/// Covariance union: mean = sum w_i mu_i; covariance is the trace-largest
/// (upper bound) or trace-smallest (lower bound) of the mean-offset-adjusted
/// source covariances P_i + (mean - mu_i)(mean - mu_i)^T. Ties take the
/// lowest source index.
FusedPair cu_fuse(const std::vector<GaussianDensity>& sources, const SimplexWeights& w,
                  CuBound bound);

/// Arithmetic-average fusion of mixtures: concatenates all components with
/// weights scaled by w_i and renormalizes. No merging is performed;
/// zero-weight sources drop out.
GaussianMixture aa_fuse_mixture(const std::vector<GaussianMixture>& sources,
                                const SimplexWeights& w);

/// Arithmetic-average fusion collapsed to a single Gaussian: the moment
/// match of the corresponding mixture (mean = sum w_i mu_i, cov = sum
/// w_i (P_i + offset outer product)).
FusedPair aa_fuse_pairs(const std::vector<GaussianDensity>& sources, const SimplexWeights& w);

struct ChainLink {
    std::string name;  ///< e.g. "naive<min_source"
    double lhs;
    double rhs;
    bool ok;
};

/// Traces of every fused covariance for one instance, plus the pairwise
/// ordering links that conservativeness theory demands.
struct ChainReport {
    double tr_naive;
    double tr_min_source;
    double tr_cu_min;
    double tr_aa;
    double tr_cu_max;
    double tr_ci;
    double tr_ffcc;
    std::vector<ChainLink> links;

    bool all_ok() const;
};

/// Evaluates both conservative fusion chains on one instance:
/// naive < min source <= CU lower <= AA <= CU upper, naive < CI <= AA, and
/// CI <= FFCC (weights scaled to total ffcc_delta). Comparisons carry a
/// 1e-9 relative slack so exact mathematical equalities pass.
ChainReport chain_check(const std::vector<GaussianDensity>& sources, const SimplexWeights& w,
                        double ffcc_delta = 0.5);

}  // namespace fusionlab
