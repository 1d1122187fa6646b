#pragma once

#include <Eigen/Dense>
#include <vector>

#include "fusionlab/common.hpp"

namespace fusionlab {

/// A mean/covariance estimate pair. Construction symmetrizes the covariance,
/// floors its spectrum and rejects indefinite input, so a stored density is
/// always strictly positive definite.
class GaussianDensity {
public:
    GaussianDensity(Eigen::VectorXd mean, const Eigen::MatrixXd& cov);

    const Eigen::VectorXd& mean() const { return mean_; }
    const Eigen::MatrixXd& cov() const { return cov_; }
    Eigen::Index dim() const { return mean_.size(); }

    /// Density value at x.
    double pdf(const Eigen::VectorXd& x) const;

    /// Log-density value at x.
    double logpdf(const Eigen::VectorXd& x) const;

private:
    Eigen::VectorXd mean_;
    Eigen::MatrixXd cov_;
};

struct MixtureComponent {
    double weight;
    GaussianDensity density;
};

/// Weighted list of Gaussian components. Weights are strictly positive and
/// sum to one within 1e-12; all components share one state dimension.
class GaussianMixture {
public:
    explicit GaussianMixture(std::vector<MixtureComponent> components);

    /// Single-component convenience wrapper with weight one.
    static GaussianMixture single(GaussianDensity density);

    const std::vector<MixtureComponent>& components() const { return components_; }
    std::size_t size() const { return components_.size(); }
    Eigen::Index dim() const { return components_.front().density.dim(); }

    double pdf(const Eigen::VectorXd& x) const;

private:
    std::vector<MixtureComponent> components_;
};

/// Nonnegative fusing weights summing to `total`; total is 1 except for
/// deliberately under-normalized combinations (total < 1).
class SimplexWeights {
public:
    explicit SimplexWeights(Eigen::VectorXd w, double total = 1.0);

    static SimplexWeights uniform(Eigen::Index count);

    const Eigen::VectorXd& values() const { return w_; }
    double total() const { return total_; }
    Eigen::Index size() const { return w_.size(); }
    double operator[](Eigen::Index i) const { return w_[i]; }

private:
    Eigen::VectorXd w_;
    double total_;
};

enum class TraceOrdering { less, equal, greater };

/// KL divergence between Gaussians,
///   0.5 * [tr(P2^-1 P1) - n + log(det P2 / det P1) + |mu1 - mu2|^2_{P2}].
double kl_gaussian(const GaussianDensity& f1, const GaussianDensity& f2);

/// Integral of the product of two Gaussian densities, N(mu1; mu2, P1 + P2).
double gaussian_product_integral(const GaussianDensity& f1, const GaussianDensity& f2);

/// Differential entropy, 0.5 * log((2 pi e)^n det P).
double differential_entropy(const GaussianDensity& f);

/// Single Gaussian sharing the mixture's first two moments:
/// mean = sum w_i mu_i, cov = sum w_i (P_i + (mu - mu_i)(mu - mu_i)^T).
GaussianDensity moment_match(const GaussianMixture& mix);

/// Posterior-mean state extraction, sum w_i mu_i.
Eigen::VectorXd eap_estimate(const GaussianMixture& mix);

/// Mode of the heaviest component (ties break to the lowest index).
Eigen::VectorXd map_estimate_approx(const GaussianMixture& mix);

/// True when pair.cov - true_mse is positive semidefinite within tolerance.
bool is_conservative(const GaussianDensity& pair, const Eigen::MatrixXd& true_mse);

/// Scalarized comparison of two square matrices by trace.
TraceOrdering trace_compare(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

}  // namespace fusionlab
