#pragma once

#include <Eigen/Dense>
#include <functional>

namespace fusionlab {

/// Exhaustive grid search over the closed probability simplex followed by
/// local refinement. Everything is deterministic: candidates are enumerated
/// in lexicographic order, the incumbent is replaced only on strict
/// improvement, and ties within `tie_tol` resolve to the candidate with the
/// highest weight entropy (the most uniform one).
struct SimplexSearchOptions {
    int resolution = 200;   ///< base grid denominator (step = 1/resolution)
    int refine_rounds = 3;  ///< local rounds around the incumbent, halving the step
    double tie_tol = 1e-9;  ///< objective gap treated as a tie
};

struct SimplexSearchResult {
    Eigen::VectorXd w;
    double value;
};

/// Minimizes `objective` over {w >= 0, sum w = 1} of length `count`. The
/// exact uniform vector is always evaluated (first), so symmetric objectives
/// return it. Maximize by negating the objective at the call site.
SimplexSearchResult minimize_on_simplex(Eigen::Index count,
                                        const std::function<double(const Eigen::VectorXd&)>& objective,
                                        const SimplexSearchOptions& options = {});

}  // namespace fusionlab
