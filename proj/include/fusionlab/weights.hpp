#pragma once

#include <string>
#include <utility>
#include <vector>

#include "fusionlab/gaussian.hpp"
#include "fusionlab/quadrature.hpp"

namespace fusionlab {

enum class ObjectiveKind { opt_kl, subopt_diversity, bound };

std::string to_string(ObjectiveKind kind);

/// Outcome of a fusing-weight design problem. `solver_trace` holds a small
/// deterministic audit trail: the uniform starting point and the final
/// incumbent with their objective values.
struct WeightSolution {
    SimplexWeights w;
    double objective_value;
    ObjectiveKind objective_kind;
    std::vector<std::pair<Eigen::VectorXd, double>> solver_trace;
};

/// Merged arithmetic-average moments at weights `w` (zero entries allowed,
/// sum must be 1): mean = sum w_i mu_i, cov = sum w_i (P_i + offset outer).
GaussianDensity merged_moments(const std::vector<GaussianDensity>& sources,
                               const Eigen::VectorXd& w);

/// Target-fit objective: KL(merged(w) || target). Zero when the merged
/// moments reproduce the target exactly.
double optimal_weight_objective(const std::vector<GaussianDensity>& sources,
                                const GaussianDensity& target, const Eigen::VectorXd& w);

/// Diversity-preference objective: sum_i w_i KL(f_i || merged(w)), with the
/// merged moments recomputed for every candidate w. Zero for identical
/// sources.
double diversity_objective(const std::vector<GaussianDensity>& sources, const Eigen::VectorXd& w);

/// Jensen-bound objective: sum_i w_i log(|P_i|^{1/2} sum_j w_j z_ij) with
/// z_ij the Gaussian product integrals; smaller is better.
double bound_objective(const std::vector<GaussianDensity>& sources, const Eigen::VectorXd& w);

/// Minimizes optimal_weight_objective over the closed simplex with the
/// deterministic grid solver; boundary (zero) weights are admissible.
/// When the target is exactly representable as a weighted merge, every
/// representing weight vector attains the global minimum (zero); the
/// returned solution is then the analytic center of the representing
/// polytope (the interior-point limit), which is unique.
WeightSolution optimal_weights_gaussian(const std::vector<GaussianDensity>& sources,
                                        const GaussianDensity& target);

/// Maximizes diversity_objective over the closed simplex. Ties resolve to
/// the most uniform weights, so identical sources return exactly uniform.
WeightSolution suboptimal_weights_diversity(const std::vector<GaussianDensity>& sources);

/// Minimizes bound_objective over the closed simplex.
WeightSolution bound_weights(const std::vector<GaussianDensity>& sources);

/// Divergences D_KL(f_i || f_AA(w)) against the true (unmerged) mixture,
/// evaluated by quadrature, and their max - min spread. At the max-min
/// weights all divergences coincide.
struct EqualDivergenceReport {
    Eigen::VectorXd divergences;
    double spread;
};

EqualDivergenceReport equal_divergence_check(const std::vector<GaussianDensity>& sources,
                                             const SimplexWeights& w,
                                             const QuadratureSpec& spec = {});

}  // namespace fusionlab
