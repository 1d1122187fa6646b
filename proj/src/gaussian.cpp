#include "fusionlab/gaussian.hpp"

#include <cmath>
#include <numbers>
#include <utility>

namespace fusionlab {

namespace {
constexpr double kLog2Pi = 1.8378770664093454836;  // log(2*pi)
}

GaussianDensity::GaussianDensity(Eigen::VectorXd mean, const Eigen::MatrixXd& cov)
    : mean_(std::move(mean)) {
    if (!mean_.allFinite()) {
        throw invariant_error("GaussianDensity: mean has non-finite entries");
    }
    if (cov.rows() != mean_.size()) {
        throw invariant_error("GaussianDensity: covariance dimension " +
                              std::to_string(cov.rows()) + " does not match mean length " +
                              std::to_string(mean_.size()));
    }
    cov_ = repair_covariance(cov, "GaussianDensity");
}

double GaussianDensity::logpdf(const Eigen::VectorXd& x) const {
    if (x.size() != dim()) {
        throw invariant_error("GaussianDensity::logpdf: dimension mismatch");
    }
    Eigen::LLT<Eigen::MatrixXd> llt(cov_);
    const Eigen::VectorXd d = x - mean_;
    const double quad = d.dot(llt.solve(d));
    const double logdet = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
    return -0.5 * (static_cast<double>(dim()) * kLog2Pi + logdet + quad);
}

double GaussianDensity::pdf(const Eigen::VectorXd& x) const {
    return std::exp(logpdf(x));
}

GaussianMixture::GaussianMixture(std::vector<MixtureComponent> components)
    : components_(std::move(components)) {
    if (components_.empty()) {
        throw invariant_error("GaussianMixture: no components");
    }
    const Eigen::Index n = components_.front().density.dim();
    double sum = 0.0;
    for (const auto& c : components_) {
        if (!(c.weight > 0.0)) {
            throw invariant_error("GaussianMixture: weights must be strictly positive");
        }
        if (c.density.dim() != n) {
            throw invariant_error("GaussianMixture: component dimensions differ");
        }
        sum += c.weight;
    }
    if (std::abs(sum - 1.0) > 1e-12) {
        throw invariant_error("GaussianMixture: weights sum to " + std::to_string(sum) +
                              ", expected 1");
    }
}

GaussianMixture GaussianMixture::single(GaussianDensity density) {
    std::vector<MixtureComponent> comps;
    comps.push_back({1.0, std::move(density)});
    return GaussianMixture(std::move(comps));
}

double GaussianMixture::pdf(const Eigen::VectorXd& x) const {
    double v = 0.0;
    for (const auto& c : components_) {
        v += c.weight * c.density.pdf(x);
    }
    return v;
}

SimplexWeights::SimplexWeights(Eigen::VectorXd w, double total) : w_(std::move(w)), total_(total) {
    if (w_.size() == 0) {
        throw invariant_error("SimplexWeights: empty weight vector");
    }
    if (!(total_ > 0.0) || total_ > 1.0) {
        throw invariant_error("SimplexWeights: total must lie in (0, 1], got " +
                              std::to_string(total_));
    }
    double sum = 0.0;
    for (Eigen::Index i = 0; i < w_.size(); ++i) {
        if (!(w_[i] >= 0.0)) {
            throw invariant_error("SimplexWeights: entries must be nonnegative");
        }
        sum += w_[i];
    }
    if (std::abs(sum - total_) > 1e-12) {
        throw invariant_error("SimplexWeights: entries sum to " + std::to_string(sum) +
                              ", expected " + std::to_string(total_));
    }
}

SimplexWeights SimplexWeights::uniform(Eigen::Index count) {
    if (count <= 0) {
        throw invariant_error("SimplexWeights::uniform: count must be positive");
    }
    Eigen::VectorXd w = Eigen::VectorXd::Constant(count, 1.0 / static_cast<double>(count));
    // Rebalance the last entry so the sum is exactly one in floating point.
    w[count - 1] = 1.0 - w.head(count - 1).sum();
    return SimplexWeights(std::move(w));
}

double kl_gaussian(const GaussianDensity& f1, const GaussianDensity& f2) {
    if (f1.dim() != f2.dim()) {
        throw invariant_error("kl_gaussian: dimension mismatch");
    }
    Eigen::LLT<Eigen::MatrixXd> llt2(f2.cov());
    Eigen::LLT<Eigen::MatrixXd> llt1(f1.cov());
    if (llt2.info() != Eigen::Success || llt1.info() != Eigen::Success) {
        throw invariant_error("kl_gaussian: covariance is not positive definite");
    }
    const double n = static_cast<double>(f1.dim());
    const double tr = llt2.solve(f1.cov()).trace();
    const double logdet1 = 2.0 * llt1.matrixLLT().diagonal().array().log().sum();
    const double logdet2 = 2.0 * llt2.matrixLLT().diagonal().array().log().sum();
    const Eigen::VectorXd d = f1.mean() - f2.mean();
    const double quad = d.dot(llt2.solve(d));
    const double kl = 0.5 * (tr - n + logdet2 - logdet1 + quad);
    return std::max(kl, 0.0);
}

double gaussian_product_integral(const GaussianDensity& f1, const GaussianDensity& f2) {
    if (f1.dim() != f2.dim()) {
        throw invariant_error("gaussian_product_integral: dimension mismatch");
    }
    const GaussianDensity convolved(f2.mean(), f1.cov() + f2.cov());
    return convolved.pdf(f1.mean());
}

double differential_entropy(const GaussianDensity& f) {
    const double n = static_cast<double>(f.dim());
    return 0.5 * (n * (kLog2Pi + 1.0) + logdet_spd(f.cov()));
}

GaussianDensity moment_match(const GaussianMixture& mix) {
    const Eigen::Index n = mix.dim();
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(n);
    for (const auto& c : mix.components()) {
        mean += c.weight * c.density.mean();
    }
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(n, n);
    for (const auto& c : mix.components()) {
        const Eigen::VectorXd d = mean - c.density.mean();
        cov += c.weight * (c.density.cov() + d * d.transpose());
    }
    return GaussianDensity(std::move(mean), cov);
}

Eigen::VectorXd eap_estimate(const GaussianMixture& mix) {
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(mix.dim());
    for (const auto& c : mix.components()) {
        mean += c.weight * c.density.mean();
    }
    return mean;
}

Eigen::VectorXd map_estimate_approx(const GaussianMixture& mix) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < mix.size(); ++i) {
        if (mix.components()[i].weight > mix.components()[best].weight) {
            best = i;
        }
    }
    return mix.components()[best].density.mean();
}

bool is_conservative(const GaussianDensity& pair, const Eigen::MatrixXd& true_mse) {
    if (true_mse.rows() != pair.dim() || true_mse.cols() != pair.dim()) {
        throw invariant_error("is_conservative: dimension mismatch");
    }
    const Eigen::MatrixXd mse = 0.5 * (true_mse + true_mse.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> diff(pair.cov() - mse);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> cov_eigs(pair.cov(), Eigen::EigenvaluesOnly);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> mse_eigs(mse, Eigen::EigenvaluesOnly);
    const double scale =
        std::max({cov_eigs.eigenvalues().maxCoeff(), mse_eigs.eigenvalues().maxCoeff(), 0.0});
    return diff.eigenvalues().minCoeff() >= -1e-10 * scale;
}

TraceOrdering trace_compare(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    if (a.rows() != a.cols() || b.rows() != b.cols() || a.rows() != b.rows()) {
        throw invariant_error("trace_compare: matrices must be square with equal dimension");
    }
    const double ta = a.trace();
    const double tb = b.trace();
    if (ta < tb) {
        return TraceOrdering::less;
    }
    if (ta > tb) {
        return TraceOrdering::greater;
    }
    return TraceOrdering::equal;
}

}  // namespace fusionlab
