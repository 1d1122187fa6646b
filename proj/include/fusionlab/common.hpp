#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace fusionlab {

/// Raised when a value violates a documented data invariant.
class invariant_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Relative Frobenius asymmetry tolerated on ingested covariance matrices.
inline constexpr double kSymmetryTol = 1e-9;

/// Eigenvalues below this fraction of the largest one are floored to it.
inline constexpr double kEigenFloorRel = 1e-12;

/// Matrices whose smallest eigenvalue undercuts this fraction of the largest
/// one are rejected as indefinite.
inline constexpr double kEigenRejectRel = -1e-10;

/// Wraps an angle to (-pi, pi].
double wrap_angle(double theta);

/// Validates and repairs a covariance matrix: checks symmetry within
/// kSymmetryTol (relative, Frobenius), symmetrizes, floors the spectrum at
/// kEigenFloorRel times the largest eigenvalue and rejects matrices that are
/// indefinite beyond kEigenRejectRel. `context` names the offending value in
/// error messages.
Eigen::MatrixXd repair_covariance(const Eigen::MatrixXd& cov, const std::string& context);

/// Symmetric PSD square root via eigendecomposition; negative eigenvalues are
/// clamped to zero.
Eigen::MatrixXd matrix_sqrt_psd(const Eigen::MatrixXd& m);

/// log(det M) for symmetric positive-definite M, via Cholesky.
double logdet_spd(const Eigen::MatrixXd& m);

/// True when every entry of `v` is finite.
bool all_finite(const Eigen::VectorXd& v);

}  // namespace fusionlab
