#pragma once

#include "fusionlab/gaussian.hpp"
#include "fusionlab/models.hpp"
#include "fusionlab/rng.hpp"

namespace fusionlab {

/// Kalman filter. kf_step = kf_predict then kf_update; the update uses the
/// Joseph form so the posterior covariance stays symmetric PSD.
GaussianDensity kf_predict(const GaussianDensity& prior, const LinearGaussianModel& model);
GaussianDensity kf_update(const GaussianDensity& predicted, const LinearGaussianModel& model,
                          const Eigen::VectorXd& y);
GaussianDensity kf_step(const GaussianDensity& prior, const LinearGaussianModel& model,
                        const Eigen::VectorXd& y);

/// Cubature Kalman filter (third-degree spherical-radial rule, 2n
/// equal-weight points, symmetric eigendecomposition square root).
/// Innovations and measurement-point deviations are wrapped to (-pi, pi] on
/// the model's angle components; the predicted measurement of an angle
/// component is the circular mean of the propagated points.
GaussianDensity ckf_predict(const GaussianDensity& prior, const NonlinearModel& model);
GaussianDensity ckf_update(const GaussianDensity& predicted, const NonlinearModel& model,
                           const Eigen::VectorXd& y);
GaussianDensity ckf_step(const GaussianDensity& prior, const NonlinearModel& model,
                         const Eigen::VectorXd& y);

/// Iterated corrector: one prediction (the shared dynamics of model1)
/// followed by the sensor-1 update and then the sensor-2 update. For
/// linear-Gaussian models this equals the batch stacked-measurement update.
GaussianDensity ic_update(const GaussianDensity& prior, const LinearGaussianModel& model1,
                          const LinearGaussianModel& model2, const Eigen::VectorXd& y1,
                          const Eigen::VectorXd& y2);
GaussianDensity ic_update(const GaussianDensity& prior, const NonlinearModel& model1,
                          const NonlinearModel& model2, const Eigen::VectorXd& y1,
                          const Eigen::VectorXd& y2);

/// Propagates every particle through the dynamics with fresh process noise
/// and reweights by the measurement likelihood (computed in log space).
/// Throws invariant_error when every likelihood vanishes.
ParticleSet sir_propagate_reweight(const ParticleSet& prior, const NonlinearModel& model,
                                   const Eigen::VectorXd& y, RandomStream& rng);

/// Same, weighting by the product of two sensors' likelihoods.
ParticleSet sir_propagate_reweight_joint(const ParticleSet& prior, const NonlinearModel& model1,
                                         const NonlinearModel& model2, const Eigen::VectorXd& y1,
                                         const Eigen::VectorXd& y2, RandomStream& rng);

/// Systematic resampling to the same particle count; output weights uniform.
ParticleSet systematic_resample(const ParticleSet& p, RandomStream& rng);

/// Full SIR step: propagate, reweight, systematic resample.
ParticleSet sir_step(const ParticleSet& prior, const NonlinearModel& model,
                     const Eigen::VectorXd& y, RandomStream& rng);
ParticleSet sir_step(const ParticleSet& prior, const LinearGaussianModel& model,
                     const Eigen::VectorXd& y, RandomStream& rng);

/// Particle-cloud iterated corrector: propagate once, weight by the joint
/// likelihood, resample.
ParticleSet ic_update(const ParticleSet& prior, const NonlinearModel& model1,
                      const NonlinearModel& model2, const Eigen::VectorXd& y1,
                      const Eigen::VectorXd& y2, RandomStream& rng);

Eigen::VectorXd weighted_mean(const ParticleSet& p);

/// Gaussian fitted to a weighted cloud (normalized-weight population
/// moments). `degenerate` reports a collapsed spread, in which case the
/// covariance has been floored to a tiny positive multiple of identity.
struct ParticleGaussian {
    GaussianDensity density;
    bool degenerate;
};

ParticleGaussian particles_to_gaussian(const ParticleSet& p);

/// Draws `count` particles from the density with uniform weights.
ParticleSet gaussian_to_particles(const GaussianDensity& g, Eigen::Index count, RandomStream& rng);

}  // namespace fusionlab
