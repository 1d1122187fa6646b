#include "fusionlab/quadrature.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace fusionlab {

namespace {

/// log f(x) for a mixture, evaluated by log-sum-exp over component
/// log-densities so deep-tail values stay finite instead of underflowing.
double mixture_logpdf(const GaussianMixture& mix, const Eigen::VectorXd& x) {
    double max_term = -std::numeric_limits<double>::infinity();
    std::vector<double> terms;
    terms.reserve(mix.size());
    for (const auto& c : mix.components()) {
        const double t = std::log(c.weight) + c.density.logpdf(x);
        terms.push_back(t);
        max_term = std::max(max_term, t);
    }
    if (!std::isfinite(max_term)) {
        return max_term;
    }
    double acc = 0.0;
    for (double t : terms) {
        acc += std::exp(t - max_term);
    }
    return max_term + std::log(acc);
}

/// Per-axis integration window: union of mean ± span * std over every
/// component of both mixtures.
void axis_window(const GaussianMixture& f, const GaussianMixture& g, double span, int axis,
                 double& lo, double& hi) {
    lo = std::numeric_limits<double>::infinity();
    hi = -std::numeric_limits<double>::infinity();
    for (const GaussianMixture* mix : {&f, &g}) {
        for (const auto& c : mix->components()) {
            const double mu = c.density.mean()[axis];
            const double sd = std::sqrt(c.density.cov()(axis, axis));
            lo = std::min(lo, mu - span * sd);
            hi = std::max(hi, mu + span * sd);
        }
    }
}

/// Shared driver: integrates f(x) * term(log f, log g) on the trapezoid grid.
template <typename Term>
double integrate(const GaussianMixture& f, const GaussianMixture& g, const QuadratureSpec& spec,
                 Term term) {
    if (f.dim() != g.dim()) {
        throw invariant_error("mixture quadrature: dimension mismatch");
    }
    const Eigen::Index dim = f.dim();
    if (dim == 1) {
        double lo = 0.0;
        double hi = 0.0;
        axis_window(f, g, spec.sigma_span, 0, lo, hi);
        const int n = spec.points_1d;
        const double h = (hi - lo) / (n - 1);
        double acc = 0.0;
        Eigen::VectorXd x(1);
        for (int i = 0; i < n; ++i) {
            x[0] = lo + h * i;
            const double lf = mixture_logpdf(f, x);
            if (!std::isfinite(lf)) {
                continue;  // f underflowed; the integrand is zero there
            }
            const double lg = mixture_logpdf(g, x);
            const double weight = (i == 0 || i == n - 1) ? 0.5 : 1.0;
            acc += weight * std::exp(lf) * term(lf, lg);
        }
        return acc * h;
    }
    if (dim == 2) {
        double lo0 = 0.0, hi0 = 0.0, lo1 = 0.0, hi1 = 0.0;
        axis_window(f, g, spec.sigma_span, 0, lo0, hi0);
        axis_window(f, g, spec.sigma_span, 1, lo1, hi1);
        const int n = spec.points_2d;
        const double h0 = (hi0 - lo0) / (n - 1);
        const double h1 = (hi1 - lo1) / (n - 1);
        double acc = 0.0;
        Eigen::VectorXd x(2);
        for (int i = 0; i < n; ++i) {
            x[0] = lo0 + h0 * i;
            const double wi = (i == 0 || i == n - 1) ? 0.5 : 1.0;
            for (int j = 0; j < n; ++j) {
                x[1] = lo1 + h1 * j;
                const double lf = mixture_logpdf(f, x);
                if (!std::isfinite(lf)) {
                    continue;
                }
                const double lg = mixture_logpdf(g, x);
                const double wj = (j == 0 || j == n - 1) ? 0.5 : 1.0;
                acc += wi * wj * std::exp(lf) * term(lf, lg);
            }
        }
        return acc * h0 * h1;
    }
    throw invariant_error("mixture quadrature: only dimensions 1 and 2 are supported");
}

}  // namespace

double kl_mixture_quadrature(const GaussianMixture& f, const GaussianMixture& g,
                             const QuadratureSpec& spec) {
    return integrate(f, g, spec, [](double lf, double lg) { return lf - lg; });
}

double cross_entropy_quadrature(const GaussianMixture& f, const GaussianMixture& g,
                                const QuadratureSpec& spec) {
    return integrate(f, g, spec, [](double /*lf*/, double lg) { return -lg; });
}

}  // namespace fusionlab
