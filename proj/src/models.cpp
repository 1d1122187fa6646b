#include "fusionlab/models.hpp"

#include <cmath>

namespace fusionlab {

namespace {

void check_spd(const Eigen::MatrixXd& m, const char* what, bool allow_semidefinite) {
    if (m.rows() != m.cols()) {
        throw invariant_error(std::string(what) + " must be square");
    }
    if (!m.allFinite()) {
        throw invariant_error(std::string(what) + " has non-finite entries");
    }
    if ((m - m.transpose()).norm() > kSymmetryTol * std::max(m.norm(), 1e-300)) {
        throw invariant_error(std::string(what) + " is not symmetric");
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (m + m.transpose()),
                                                      Eigen::EigenvaluesOnly);
    const double lmax = es.eigenvalues().maxCoeff();
    const double lmin = es.eigenvalues().minCoeff();
    if (allow_semidefinite ? lmin < kEigenRejectRel * std::max(lmax, 0.0) : lmin <= 0.0) {
        throw invariant_error(std::string(what) + " is not positive " +
                              (allow_semidefinite ? "semidefinite" : "definite"));
    }
}

}  // namespace

void LinearGaussianModel::check() const {
    const Eigen::Index n = F.rows();
    if (F.cols() != n) {
        throw invariant_error("LinearGaussianModel: F must be square");
    }
    if (G.rows() != n || G.cols() != Qu.rows()) {
        throw invariant_error("LinearGaussianModel: G dimensions inconsistent with F and Q_u");
    }
    if (H.cols() != n || R.rows() != H.rows()) {
        throw invariant_error("LinearGaussianModel: H/R dimensions inconsistent");
    }
    check_spd(Qu, "LinearGaussianModel: Q_u", /*allow_semidefinite=*/false);
    check_spd(R, "LinearGaussianModel: R", /*allow_semidefinite=*/false);
}

void NonlinearModel::check() const {
    if (!transition || !measurement) {
        throw invariant_error("NonlinearModel: transition and measurement must be set");
    }
    check_spd(Q, "NonlinearModel: Q", /*allow_semidefinite=*/true);
    check_spd(R, "NonlinearModel: R", /*allow_semidefinite=*/false);
    for (Eigen::Index idx : angle_components) {
        if (idx < 0 || idx >= R.rows()) {
            throw invariant_error("NonlinearModel: angle component index out of range");
        }
    }
}

NonlinearModel as_nonlinear(const LinearGaussianModel& model) {
    model.check();
    NonlinearModel nl;
    const Eigen::MatrixXd F = model.F;
    const Eigen::MatrixXd H = model.H;
    nl.transition = [F](const Eigen::VectorXd& x) { return F * x; };
    nl.Q = model.G * model.Qu * model.G.transpose();
    nl.measurement = [H](const Eigen::VectorXd& x) { return H * x; };
    nl.R = model.R;
    return nl;
}

void ParticleSet::check() const {
    if (states.cols() == 0 || states.rows() == 0) {
        throw invariant_error("ParticleSet: empty");
    }
    if (weights.size() != states.cols()) {
        throw invariant_error("ParticleSet: weight count does not match particle count");
    }
    double sum = 0.0;
    for (Eigen::Index i = 0; i < weights.size(); ++i) {
        if (!(weights[i] >= 0.0)) {
            throw invariant_error("ParticleSet: weights must be nonnegative");
        }
        sum += weights[i];
    }
    if (std::abs(sum - 1.0) > 1e-12) {
        throw invariant_error("ParticleSet: weights sum to " + std::to_string(sum) +
                              ", expected 1");
    }
}

}  // namespace fusionlab
