#include "fusionlab/filters.hpp"

#include <cmath>
#include <limits>

namespace fusionlab {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

/// 2n cubature points of the third-degree spherical-radial rule: columns
/// mean +- sqrt(n) * S e_i with S the symmetric PSD square root.
Eigen::MatrixXd cubature_points(const GaussianDensity& g) {
    const Eigen::Index n = g.dim();
    const Eigen::MatrixXd s = matrix_sqrt_psd(g.cov());
    const double scale = std::sqrt(static_cast<double>(n));
    Eigen::MatrixXd points(n, 2 * n);
    for (Eigen::Index i = 0; i < n; ++i) {
        points.col(i) = g.mean() + scale * s.col(i);
        points.col(n + i) = g.mean() - scale * s.col(i);
    }
    return points;
}

void wrap_components(Eigen::VectorXd& v, const std::vector<Eigen::Index>& angle_components) {
    for (Eigen::Index idx : angle_components) {
        v[idx] = wrap_angle(v[idx]);
    }
}

/// Per-particle measurement log-likelihood under N(h(x), R), with angle
/// innovations wrapped.
class MeasurementLoglik {
public:
    explicit MeasurementLoglik(const NonlinearModel& model)
        : model_(model), llt_(model.R) {
        if (llt_.info() != Eigen::Success) {
            throw invariant_error("sir_step: measurement covariance is not positive definite");
        }
        const double logdet = 2.0 * llt_.matrixLLT().diagonal().array().log().sum();
        norm_const_ = -0.5 * (static_cast<double>(model.R.rows()) * kLog2Pi + logdet);
    }

    double operator()(const Eigen::VectorXd& x, const Eigen::VectorXd& y) const {
        Eigen::VectorXd innovation = y - model_.measurement(x);
        wrap_components(innovation, model_.angle_components);
        return norm_const_ - 0.5 * innovation.dot(llt_.solve(innovation));
    }

private:
    const NonlinearModel& model_;
    Eigen::LLT<Eigen::MatrixXd> llt_;
    double norm_const_;
};

ParticleSet propagate(const ParticleSet& prior, const NonlinearModel& model, RandomStream& rng) {
    const Eigen::Index n = prior.dim();
    const Eigen::Index count = prior.count();
    const Eigen::MatrixXd sqrt_q = matrix_sqrt_psd(model.Q);
    ParticleSet out;
    out.states.resize(n, count);
    out.weights = prior.weights;
    Eigen::VectorXd noise(n);
    for (Eigen::Index j = 0; j < count; ++j) {
        for (Eigen::Index d = 0; d < n; ++d) {
            noise[d] = rng.normal();
        }
        out.states.col(j) = model.transition(prior.states.col(j)) + sqrt_q * noise;
    }
    return out;
}

void reweight(ParticleSet& set, const Eigen::VectorXd& loglik) {
    Eigen::VectorXd logw(set.count());
    double max_term = -std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < set.count(); ++j) {
        logw[j] = (set.weights[j] > 0.0 ? std::log(set.weights[j]) : -std::numeric_limits<double>::infinity()) +
                  loglik[j];
        max_term = std::max(max_term, logw[j]);
    }
    if (!std::isfinite(max_term)) {
        throw invariant_error("sir_step: all measurement likelihoods vanished (degenerate update)");
    }
    double sum = 0.0;
    for (Eigen::Index j = 0; j < set.count(); ++j) {
        set.weights[j] = std::exp(logw[j] - max_term);
        sum += set.weights[j];
    }
    set.weights /= sum;
    // Pin the sum to one so downstream invariant checks stay exact.
    set.weights[set.count() - 1] =
        std::max(1.0 - set.weights.head(set.count() - 1).sum(), 0.0);
}

}  // namespace

GaussianDensity kf_predict(const GaussianDensity& prior, const LinearGaussianModel& model) {
    if (model.F.cols() != prior.dim()) {
        throw invariant_error("kf_predict: model/state dimension mismatch");
    }
    Eigen::VectorXd mean = model.F * prior.mean();
    Eigen::MatrixXd cov =
        model.F * prior.cov() * model.F.transpose() + model.G * model.Qu * model.G.transpose();
    return GaussianDensity(std::move(mean), cov);
}

GaussianDensity kf_update(const GaussianDensity& predicted, const LinearGaussianModel& model,
                          const Eigen::VectorXd& y) {
    if (model.H.cols() != predicted.dim() || y.size() != model.H.rows()) {
        throw invariant_error("kf_update: model/measurement dimension mismatch");
    }
    const Eigen::MatrixXd hp = model.H * predicted.cov();
    const Eigen::MatrixXd s = hp * model.H.transpose() + model.R;
    Eigen::LLT<Eigen::MatrixXd> llt(s);
    if (llt.info() != Eigen::Success) {
        throw invariant_error("kf_update: innovation covariance is not positive definite");
    }
    const Eigen::MatrixXd gain = llt.solve(hp).transpose();
    Eigen::VectorXd mean = predicted.mean() + gain * (y - model.H * predicted.mean());
    const Eigen::MatrixXd a =
        Eigen::MatrixXd::Identity(predicted.dim(), predicted.dim()) - gain * model.H;
    Eigen::MatrixXd cov =
        a * predicted.cov() * a.transpose() + gain * model.R * gain.transpose();
    return GaussianDensity(std::move(mean), cov);
}

GaussianDensity kf_step(const GaussianDensity& prior, const LinearGaussianModel& model,
                        const Eigen::VectorXd& y) {
    return kf_update(kf_predict(prior, model), model, y);
}

GaussianDensity ckf_predict(const GaussianDensity& prior, const NonlinearModel& model) {
    if (model.Q.rows() != prior.dim()) {
        throw invariant_error("ckf_predict: model/state dimension mismatch");
    }
    const Eigen::Index n = prior.dim();
    const Eigen::MatrixXd points = cubature_points(prior);
    Eigen::MatrixXd propagated(n, 2 * n);
    for (Eigen::Index j = 0; j < 2 * n; ++j) {
        propagated.col(j) = model.transition(points.col(j));
    }
    const Eigen::VectorXd mean = propagated.rowwise().mean();
    Eigen::MatrixXd cov = model.Q;
    for (Eigen::Index j = 0; j < 2 * n; ++j) {
        const Eigen::VectorXd d = propagated.col(j) - mean;
        cov += (1.0 / (2.0 * n)) * d * d.transpose();
    }
    return GaussianDensity(mean, cov);
}

GaussianDensity ckf_update(const GaussianDensity& predicted, const NonlinearModel& model,
                           const Eigen::VectorXd& y) {
    const Eigen::Index n = predicted.dim();
    const Eigen::Index m = model.R.rows();
    if (y.size() != m) {
        throw invariant_error("ckf_update: measurement dimension mismatch");
    }
    const Eigen::MatrixXd points = cubature_points(predicted);
    Eigen::MatrixXd z(m, 2 * n);
    for (Eigen::Index j = 0; j < 2 * n; ++j) {
        z.col(j) = model.measurement(points.col(j));
    }

    // Predicted measurement: arithmetic mean, except angle components use
    // the circular mean so points straddling +-pi do not cancel.
    Eigen::VectorXd z_pred = z.rowwise().mean();
    for (Eigen::Index idx : model.angle_components) {
        double s = 0.0;
        double c = 0.0;
        for (Eigen::Index j = 0; j < 2 * n; ++j) {
            s += std::sin(z(idx, j));
            c += std::cos(z(idx, j));
        }
        z_pred[idx] = std::atan2(s, c);
    }

    Eigen::MatrixXd s_z = model.R;
    Eigen::MatrixXd p_xz = Eigen::MatrixXd::Zero(n, m);
    for (Eigen::Index j = 0; j < 2 * n; ++j) {
        Eigen::VectorXd dz = z.col(j) - z_pred;
        wrap_components(dz, model.angle_components);
        const Eigen::VectorXd dx = points.col(j) - predicted.mean();
        s_z += (1.0 / (2.0 * n)) * dz * dz.transpose();
        p_xz += (1.0 / (2.0 * n)) * dx * dz.transpose();
    }

    Eigen::LLT<Eigen::MatrixXd> llt(s_z);
    if (llt.info() != Eigen::Success) {
        throw invariant_error("ckf_update: innovation covariance is not positive definite");
    }
    const Eigen::MatrixXd gain = llt.solve(p_xz.transpose()).transpose();
    Eigen::VectorXd innovation = y - z_pred;
    wrap_components(innovation, model.angle_components);
    Eigen::VectorXd mean = predicted.mean() + gain * innovation;
    Eigen::MatrixXd cov = predicted.cov() - gain * s_z * gain.transpose();
    cov = 0.5 * (cov + cov.transpose());
    return GaussianDensity(std::move(mean), cov);
}

GaussianDensity ckf_step(const GaussianDensity& prior, const NonlinearModel& model,
                         const Eigen::VectorXd& y) {
    return ckf_update(ckf_predict(prior, model), model, y);
}

GaussianDensity ic_update(const GaussianDensity& prior, const LinearGaussianModel& model1,
                          const LinearGaussianModel& model2, const Eigen::VectorXd& y1,
                          const Eigen::VectorXd& y2) {
    return kf_update(kf_update(kf_predict(prior, model1), model1, y1), model2, y2);
}

GaussianDensity ic_update(const GaussianDensity& prior, const NonlinearModel& model1,
                          const NonlinearModel& model2, const Eigen::VectorXd& y1,
                          const Eigen::VectorXd& y2) {
    return ckf_update(ckf_update(ckf_predict(prior, model1), model1, y1), model2, y2);
}

ParticleSet sir_propagate_reweight(const ParticleSet& prior, const NonlinearModel& model,
                                   const Eigen::VectorXd& y, RandomStream& rng) {
    prior.check();
    ParticleSet out = propagate(prior, model, rng);
    const MeasurementLoglik loglik(model);
    Eigen::VectorXd ll(out.count());
    for (Eigen::Index j = 0; j < out.count(); ++j) {
        ll[j] = loglik(out.states.col(j), y);
    }
    reweight(out, ll);
    return out;
}

ParticleSet sir_propagate_reweight_joint(const ParticleSet& prior, const NonlinearModel& model1,
                                         const NonlinearModel& model2, const Eigen::VectorXd& y1,
                                         const Eigen::VectorXd& y2, RandomStream& rng) {
    prior.check();
    ParticleSet out = propagate(prior, model1, rng);
    const MeasurementLoglik loglik1(model1);
    const MeasurementLoglik loglik2(model2);
    Eigen::VectorXd ll(out.count());
    for (Eigen::Index j = 0; j < out.count(); ++j) {
        ll[j] = loglik1(out.states.col(j), y1) + loglik2(out.states.col(j), y2);
    }
    reweight(out, ll);
    return out;
}

ParticleSet systematic_resample(const ParticleSet& p, RandomStream& rng) {
    p.check();
    const Eigen::Index count = p.count();
    const double u = rng.uniform();
    ParticleSet out;
    out.states.resize(p.dim(), count);
    out.weights = Eigen::VectorXd::Constant(count, 1.0 / static_cast<double>(count));
    out.weights[count - 1] = 1.0 - out.weights.head(count - 1).sum();
    Eigen::Index i = 0;
    double cumulative = p.weights[0];
    for (Eigen::Index k = 0; k < count; ++k) {
        const double pointer = (static_cast<double>(k) + u) / static_cast<double>(count);
        while (cumulative < pointer && i + 1 < count) {
            ++i;
            cumulative += p.weights[i];
        }
        out.states.col(k) = p.states.col(i);
    }
    return out;
}

ParticleSet sir_step(const ParticleSet& prior, const NonlinearModel& model,
                     const Eigen::VectorXd& y, RandomStream& rng) {
    return systematic_resample(sir_propagate_reweight(prior, model, y, rng), rng);
}

ParticleSet sir_step(const ParticleSet& prior, const LinearGaussianModel& model,
                     const Eigen::VectorXd& y, RandomStream& rng) {
    return sir_step(prior, as_nonlinear(model), y, rng);
}

ParticleSet ic_update(const ParticleSet& prior, const NonlinearModel& model1,
                      const NonlinearModel& model2, const Eigen::VectorXd& y1,
                      const Eigen::VectorXd& y2, RandomStream& rng) {
    return systematic_resample(
        sir_propagate_reweight_joint(prior, model1, model2, y1, y2, rng), rng);
}

Eigen::VectorXd weighted_mean(const ParticleSet& p) {
    p.check();
    return p.states * p.weights;
}

ParticleGaussian particles_to_gaussian(const ParticleSet& p) {
    p.check();
    const Eigen::VectorXd mean = p.states * p.weights;
    const Eigen::MatrixXd centered = p.states.colwise() - mean;
    const Eigen::MatrixXd cov =
        centered * p.weights.asDiagonal() * centered.transpose();
    const bool degenerate = cov.trace() <= 1e-12 * std::max(1.0, mean.squaredNorm());
    return {GaussianDensity(mean, 0.5 * (cov + cov.transpose())), degenerate};
}

ParticleSet gaussian_to_particles(const GaussianDensity& g, Eigen::Index count,
                                  RandomStream& rng) {
    if (count < 1) {
        throw invariant_error("gaussian_to_particles: count must be at least 1");
    }
    const Eigen::Index n = g.dim();
    const Eigen::MatrixXd s = matrix_sqrt_psd(g.cov());
    ParticleSet out;
    out.states.resize(n, count);
    out.weights = Eigen::VectorXd::Constant(count, 1.0 / static_cast<double>(count));
    out.weights[count - 1] = 1.0 - out.weights.head(count - 1).sum();
    Eigen::VectorXd noise(n);
    for (Eigen::Index j = 0; j < count; ++j) {
        for (Eigen::Index d = 0; d < n; ++d) {
            noise[d] = rng.normal();
        }
        out.states.col(j) = g.mean() + s * noise;
    }
    return out;
}

}  // namespace fusionlab
