#include "fusionlab/random_instances.hpp"

namespace fusionlab {

GaussianDensity random_gaussian(RandomStream& rng, Eigen::Index dim, double mean_scale) {
    Eigen::VectorXd mean = mean_scale * rng.normal_vector(dim);
    Eigen::MatrixXd a(dim, dim);
    for (Eigen::Index i = 0; i < dim; ++i) {
        a.col(i) = rng.normal_vector(dim);
    }
    const Eigen::MatrixXd cov =
        0.5 * Eigen::MatrixXd::Identity(dim, dim) + a * a.transpose();
    return GaussianDensity(std::move(mean), cov);
}

std::vector<GaussianDensity> random_gaussian_set(RandomStream& rng, Eigen::Index dim,
                                                 std::size_t count, double mean_scale) {
    std::vector<GaussianDensity> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        out.push_back(random_gaussian(rng, dim, mean_scale));
    }
    return out;
}

SimplexWeights random_interior_weights(RandomStream& rng, Eigen::Index count) {
    Eigen::VectorXd w(count);
    double sum = 0.0;
    for (Eigen::Index i = 0; i < count; ++i) {
        w[i] = 0.05 + rng.uniform();
        sum += w[i];
    }
    w /= sum;
    w[count - 1] = 1.0 - w.head(count - 1).sum();
    return SimplexWeights(std::move(w));
}

}  // namespace fusionlab
