#include "fusionlab/common.hpp"

#include <cmath>
#include <numbers>

namespace fusionlab {

double wrap_angle(double theta) {
    double r = std::remainder(theta, 2.0 * std::numbers::pi);
    if (r <= -std::numbers::pi) {
        r += 2.0 * std::numbers::pi;
    }
    return r;
}

Eigen::MatrixXd repair_covariance(const Eigen::MatrixXd& cov, const std::string& context) {
    if (cov.rows() != cov.cols()) {
        throw invariant_error(context + ": covariance must be square, got " +
                              std::to_string(cov.rows()) + "x" + std::to_string(cov.cols()));
    }
    if (!cov.allFinite()) {
        throw invariant_error(context + ": covariance has non-finite entries");
    }
    const double asym = (cov - cov.transpose()).norm();
    const double scale = std::max(cov.norm(), 1e-300);
    if (asym > kSymmetryTol * scale) {
        throw invariant_error(context + ": covariance asymmetry " + std::to_string(asym / scale) +
                              " exceeds relative tolerance");
    }
    Eigen::MatrixXd sym = 0.5 * (cov + cov.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
    if (es.info() != Eigen::Success) {
        throw invariant_error(context + ": eigendecomposition failed");
    }
    Eigen::VectorXd lambda = es.eigenvalues();
    const double lmax = lambda.maxCoeff();
    if (lambda.minCoeff() < kEigenRejectRel * std::max(lmax, 0.0)) {
        throw invariant_error(context + ": covariance is not positive semidefinite (min eig " +
                              std::to_string(lambda.minCoeff()) + ", max eig " +
                              std::to_string(lmax) + ")");
    }
    // A fully collapsed spectrum still gets a strictly positive floor so the
    // result is factorizable downstream.
    const double floor = lmax > 0.0 ? kEigenFloorRel * lmax : kEigenFloorRel;
    for (Eigen::Index i = 0; i < lambda.size(); ++i) {
        lambda[i] = std::max(lambda[i], floor);
    }
    Eigen::MatrixXd repaired =
        es.eigenvectors() * lambda.asDiagonal() * es.eigenvectors().transpose();
    return 0.5 * (repaired + repaired.transpose());
}

Eigen::MatrixXd matrix_sqrt_psd(const Eigen::MatrixXd& m) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (m + m.transpose()));
    Eigen::VectorXd lambda = es.eigenvalues().cwiseMax(0.0);
    return es.eigenvectors() * lambda.cwiseSqrt().asDiagonal() * es.eigenvectors().transpose();
}

double logdet_spd(const Eigen::MatrixXd& m) {
    Eigen::LLT<Eigen::MatrixXd> llt(m);
    if (llt.info() != Eigen::Success) {
        throw invariant_error("logdet_spd: matrix is not positive definite");
    }
    return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

bool all_finite(const Eigen::VectorXd& v) {
    return v.allFinite();
}

}  // namespace fusionlab
