#pragma once

#include "fusionlab/gaussian.hpp"

namespace fusionlab {

/// Deterministic trapezoidal grid used by the mixture-divergence oracle.
/// The integration window is the union, over every component of both
/// mixtures, of mean ± sigma_span standard deviations per axis.
struct QuadratureSpec {
    int points_1d = 20001;   ///< grid points in one dimension
    int points_2d = 501;     ///< per-axis points of the 2-D tensor grid
    double sigma_span = 8.0; ///< half-width of the window in std deviations
};

/// Numeric D_KL(f || g) between mixtures of dimension 1 or 2. There is no
/// closed form for mixture KL, so tests and weight diagnostics use this
/// oracle instead.
double kl_mixture_quadrature(const GaussianMixture& f, const GaussianMixture& g,
                             const QuadratureSpec& spec = {});

/// Numeric cross-entropy H(f, g) = -integral of f log g, same grid and
/// dimension limits as kl_mixture_quadrature.
double cross_entropy_quadrature(const GaussianMixture& f, const GaussianMixture& g,
                                const QuadratureSpec& spec = {});

}  // namespace fusionlab
