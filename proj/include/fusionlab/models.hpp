#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "fusionlab/common.hpp"

namespace fusionlab {

/// x_k = F x_{k-1} + G u_k with u ~ N(0, Q_u); y_k = H x_k + v with
/// v ~ N(0, R).
struct LinearGaussianModel {
    Eigen::MatrixXd F;
    Eigen::MatrixXd G;
    Eigen::MatrixXd Qu;
    Eigen::MatrixXd H;
    Eigen::MatrixXd R;

    Eigen::Index state_dim() const { return F.rows(); }
    Eigen::Index meas_dim() const { return H.rows(); }

    /// Throws invariant_error on dimension mismatch or non-PD noise.
    void check() const;
};

/// x_k = transition(x_{k-1}) + w with w ~ N(0, Q); y_k = measurement(x_k) + v
/// with v ~ N(0, R). Measurement coordinates listed in angle_components are
/// treated as angles: innovations are wrapped to (-pi, pi]. Q may be merely
/// positive semidefinite (a linear model pushed through as_nonlinear has
/// singular G Q_u G^T); R must be positive definite.
struct NonlinearModel {
    std::function<Eigen::VectorXd(const Eigen::VectorXd&)> transition;
    Eigen::MatrixXd Q;
    std::function<Eigen::VectorXd(const Eigen::VectorXd&)> measurement;
    Eigen::MatrixXd R;
    std::vector<Eigen::Index> angle_components;

    Eigen::Index state_dim() const { return Q.rows(); }
    Eigen::Index meas_dim() const { return R.rows(); }

    void check() const;
};

/// Wraps a linear-Gaussian model in the nonlinear interface (Q = G Q_u G^T,
/// no angle components).
NonlinearModel as_nonlinear(const LinearGaussianModel& model);

/// Weighted sample cloud; one particle per column.
struct ParticleSet {
    Eigen::MatrixXd states;
    Eigen::VectorXd weights;

    Eigen::Index dim() const { return states.rows(); }
    Eigen::Index count() const { return states.cols(); }

    /// Throws invariant_error when empty, weights negative, or the weight
    /// sum strays from one by more than 1e-12.
    void check() const;
};

}  // namespace fusionlab
