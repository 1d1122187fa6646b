#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "fusionlab/common.hpp"
#include "fusionlab/gaussian.hpp"
#include "fusionlab/quadrature.hpp"
#include "fusionlab/random_instances.hpp"
#include "fusionlab/rng.hpp"

namespace {

using namespace fusionlab;

constexpr double kPi = 3.14159265358979323846;

GaussianDensity scalar_density(double mean, double var) {
    Eigen::VectorXd mu(1);
    mu << mean;
    Eigen::MatrixXd cov(1, 1);
    cov << var;
    return GaussianDensity(mu, cov);
}

GaussianMixture scalar_mixture(const std::vector<double>& w, const std::vector<double>& means,
                               const std::vector<double>& vars) {
    std::vector<MixtureComponent> components;
    for (std::size_t i = 0; i < w.size(); ++i) {
        components.push_back({w[i], scalar_density(means[i], vars[i])});
    }
    return GaussianMixture(std::move(components));
}

}  // namespace

TEST_CASE("kl_gaussian closed-form values") {
    CHECK(kl_gaussian(scalar_density(0, 1), scalar_density(0, 1)) == doctest::Approx(0.0).epsilon(1e-14));
    // 0.5 * (mu1 - mu2)^2 / P2 with equal unit covariances.
    CHECK(kl_gaussian(scalar_density(1, 1), scalar_density(0, 1)) == doctest::Approx(0.5).epsilon(1e-12));
    // 0.5 * (P1/P2 - 1 + ln(P2/P1)) = 0.5 * (1 - ln 2).
    CHECK(kl_gaussian(scalar_density(0, 2), scalar_density(0, 1)) ==
          doctest::Approx(0.15342640972002736).epsilon(1e-12));
}

TEST_CASE("kl_gaussian nonnegative, zero only at equality") {
    RandomStream rng = RandomStream::derive(11, "kl-pairs");
    for (int i = 0; i < 50; ++i) {
        const GaussianDensity a = random_gaussian(rng, 2);
        const GaussianDensity b = random_gaussian(rng, 2);
        const double d = kl_gaussian(a, b);
        CHECK(d >= 0.0);
        CHECK(kl_gaussian(a, a) == doctest::Approx(0.0).epsilon(1e-12));
        if ((a.mean() - b.mean()).norm() > 1e-6) CHECK(d > 0.0);
    }
}

TEST_CASE("kl_gaussian rejects dimension mismatch") {
    Eigen::VectorXd mu2 = Eigen::VectorXd::Zero(2);
    const GaussianDensity a = scalar_density(0, 1);
    const GaussianDensity b(mu2, Eigen::MatrixXd::Identity(2, 2));
    CHECK_THROWS_AS(kl_gaussian(a, b), invariant_error);
}

TEST_CASE("gaussian_product_integral closed-form values and symmetry") {
    CHECK(gaussian_product_integral(scalar_density(0, 1), scalar_density(0, 1)) ==
          doctest::Approx(1.0 / std::sqrt(4.0 * kPi)).epsilon(1e-12));
    CHECK(gaussian_product_integral(scalar_density(3, 2), scalar_density(3, 5)) ==
          doctest::Approx(1.0 / std::sqrt(14.0 * kPi)).epsilon(1e-12));

    RandomStream rng = RandomStream::derive(12, "z-pairs");
    for (int i = 0; i < 20; ++i) {
        const GaussianDensity a = random_gaussian(rng, 2);
        const GaussianDensity b = random_gaussian(rng, 2);
        CHECK(gaussian_product_integral(a, b) ==
              doctest::Approx(gaussian_product_integral(b, a)).epsilon(1e-12));
    }
}

TEST_CASE("differential_entropy values and mean invariance") {
    CHECK(differential_entropy(scalar_density(0, 1)) ==
          doctest::Approx(0.5 * std::log(2.0 * kPi * std::exp(1.0))).epsilon(1e-12));
    CHECK(std::abs(differential_entropy(scalar_density(7, 1.0 / (2.0 * kPi * std::exp(1.0))))) < 1e-12);
    CHECK(differential_entropy(scalar_density(-3, 2)) ==
          doctest::Approx(differential_entropy(scalar_density(100, 2))).epsilon(1e-14));
}

TEST_CASE("moment_match golden values") {
    const GaussianDensity single = scalar_density(4, 9);
    const GaussianDensity matched = moment_match(GaussianMixture::single(single));
    CHECK(matched.mean()(0) == doctest::Approx(4.0).epsilon(1e-14));
    CHECK(matched.cov()(0, 0) == doctest::Approx(9.0).epsilon(1e-14));

    // Half/half merge of N(0,1) and N(2,1): mean 1, spread term adds 1.
    const GaussianDensity two = moment_match(scalar_mixture({0.5, 0.5}, {0, 2}, {1, 1}));
    CHECK(two.mean()(0) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(two.cov()(0, 0) == doctest::Approx(2.0).epsilon(1e-14));

    // Four-source merge landing exactly on N(60, 200) at rational weights.
    const GaussianDensity exact = moment_match(scalar_mixture(
        {3.0 / 117.0, 10.0 / 117.0, 100.0 / 117.0, 4.0 / 117.0}, {40, 50, 60, 100},
        {400, 200, 100, 400}));
    CHECK(exact.mean()(0) == doctest::Approx(60.0).epsilon(1e-12));
    CHECK(exact.cov()(0, 0) == doctest::Approx(200.0).epsilon(1e-12));

    // Same merge at the four-decimal rounded weights stays within rounding noise.
    const GaussianDensity rounded = moment_match(scalar_mixture(
        {0.0256, 0.0855, 0.8547, 0.0342}, {40, 50, 60, 100}, {400, 200, 100, 400}));
    CHECK(std::abs(rounded.mean()(0) - 60.0) < 0.01);
    CHECK(std::abs(rounded.cov()(0, 0) - 200.0) < 0.05);
}

TEST_CASE("moment_match is invariant under component reordering") {
    RandomStream rng = RandomStream::derive(13, "mm-perm");
    for (int i = 0; i < 20; ++i) {
        const std::vector<GaussianDensity> sources = random_gaussian_set(rng, 2, 3);
        const SimplexWeights w = random_interior_weights(rng, 3);
        const GaussianMixture forward(
            {{w[0], sources[0]}, {w[1], sources[1]}, {w[2], sources[2]}});
        const GaussianMixture reversed(
            {{w[2], sources[2]}, {w[1], sources[1]}, {w[0], sources[0]}});
        const GaussianDensity a = moment_match(forward);
        const GaussianDensity b = moment_match(reversed);
        CHECK((a.mean() - b.mean()).norm() < 1e-12 * (1.0 + a.mean().norm()));
        CHECK((a.cov() - b.cov()).norm() < 1e-12 * (1.0 + a.cov().norm()));
    }
}

TEST_CASE("moment_match determinant dominates the covariance-only average") {
    RandomStream rng = RandomStream::derive(14, "mm-det");
    for (int i = 0; i < 20; ++i) {
        const std::vector<GaussianDensity> sources = random_gaussian_set(rng, 2, 3);
        const SimplexWeights w = random_interior_weights(rng, 3);
        const GaussianMixture mix({{w[0], sources[0]}, {w[1], sources[1]}, {w[2], sources[2]}});
        Eigen::MatrixXd cov_only = Eigen::MatrixXd::Zero(2, 2);
        for (Eigen::Index k = 0; k < 3; ++k) cov_only += w[k] * sources[k].cov();
        CHECK(moment_match(mix).cov().determinant() >= cov_only.determinant() - 1e-12);
    }
}

TEST_CASE("eap_estimate") {
    CHECK(eap_estimate(GaussianMixture::single(scalar_density(5, 2)))(0) == doctest::Approx(5.0));
    CHECK(eap_estimate(scalar_mixture({0.5, 0.5}, {0, 2}, {1, 1}))(0) == doctest::Approx(1.0));

    RandomStream rng = RandomStream::derive(15, "eap");
    const std::vector<GaussianDensity> sources = random_gaussian_set(rng, 2, 3);
    const SimplexWeights w = random_interior_weights(rng, 3);
    const GaussianMixture mix({{w[0], sources[0]}, {w[1], sources[1]}, {w[2], sources[2]}});
    CHECK((eap_estimate(mix) - moment_match(mix).mean()).norm() < 1e-14);
}

TEST_CASE("map_estimate_approx picks the heaviest component, ties to lowest index") {
    CHECK(map_estimate_approx(scalar_mixture({0.9, 0.1}, {0, 5}, {1, 1}))(0) == doctest::Approx(0.0));
    CHECK(map_estimate_approx(scalar_mixture({0.5, 0.5}, {-2, 5}, {1, 1}))(0) == doctest::Approx(-2.0));
    CHECK(map_estimate_approx(scalar_mixture({0.3, 0.7}, {0, 5}, {1, 1}))(0) == doctest::Approx(5.0));
}

TEST_CASE("is_conservative") {
    const Eigen::MatrixXd one = Eigen::MatrixXd::Identity(1, 1);
    CHECK(is_conservative(scalar_density(0, 1), one));
    CHECK(is_conservative(scalar_density(0, 2), one));
    CHECK_FALSE(is_conservative(scalar_density(0, 1), 2.0 * one));

    RandomStream rng = RandomStream::derive(16, "conservative");
    for (int i = 0; i < 20; ++i) {
        const GaussianDensity a = random_gaussian(rng, 2);
        const GaussianDensity inflated(a.mean(), a.cov() + Eigen::MatrixXd::Identity(2, 2));
        CHECK(is_conservative(inflated, a.cov()));
    }
}

TEST_CASE("trace_compare") {
    Eigen::MatrixXd a(2, 2), b(2, 2);
    a << 3, 0, 0, 1;
    b << 1, 0, 0, 1;
    CHECK(trace_compare(a, a) == TraceOrdering::equal);
    CHECK(trace_compare(a, b) == TraceOrdering::greater);
    CHECK(trace_compare(b, a) == TraceOrdering::less);

    RandomStream rng = RandomStream::derive(17, "trace-loewner");
    for (int i = 0; i < 20; ++i) {
        const GaussianDensity base = random_gaussian(rng, 2);
        const GaussianDensity bigger(base.mean(),
                                     base.cov() + 0.5 * Eigen::MatrixXd::Identity(2, 2));
        CHECK(trace_compare(bigger.cov(), base.cov()) == TraceOrdering::greater);
    }
}

TEST_CASE("kl_mixture_quadrature matches the closed form on single components") {
    const GaussianMixture f = GaussianMixture::single(scalar_density(0, 1));
    const GaussianMixture g = GaussianMixture::single(scalar_density(1, 2));
    CHECK(std::abs(kl_mixture_quadrature(f, f)) < 1e-8);
    CHECK(kl_mixture_quadrature(f, g) ==
          doctest::Approx(kl_gaussian(scalar_density(0, 1), scalar_density(1, 2))).epsilon(1e-6));

    const GaussianMixture mix = scalar_mixture({0.4, 0.6}, {0, 4}, {1, 2});
    CHECK(std::abs(kl_mixture_quadrature(mix, mix)) < 1e-8);
}

TEST_CASE("kl_mixture_quadrature rejects unsupported dimension") {
    const GaussianDensity d3(Eigen::VectorXd::Zero(3), Eigen::MatrixXd::Identity(3, 3));
    const GaussianMixture m3 = GaussianMixture::single(d3);
    CHECK_THROWS_AS(kl_mixture_quadrature(m3, m3), invariant_error);
}

TEST_CASE("cross_entropy_quadrature matches Gaussian closed forms") {
    const GaussianDensity f = scalar_density(0, 1);
    const GaussianDensity g = scalar_density(1, 2);
    const GaussianMixture fm = GaussianMixture::single(f);
    const GaussianMixture gm = GaussianMixture::single(g);
    // H(f, f) = H(f); H(f, g) = KL(f||g) + H(f).
    CHECK(cross_entropy_quadrature(fm, fm) == doctest::Approx(differential_entropy(f)).epsilon(1e-6));
    CHECK(cross_entropy_quadrature(fm, gm) ==
          doctest::Approx(kl_gaussian(f, g) + differential_entropy(f)).epsilon(1e-6));
}

namespace {

struct RandomMixtureCase {
    GaussianMixture mixture;
    std::vector<GaussianDensity> components;
    Eigen::VectorXd w;
    GaussianDensity target;
};

RandomMixtureCase random_mixture_case(RandomStream& rng) {
    const int count = 2 + static_cast<int>(rng.uniform() * 3.0);  // 2..4 components
    std::vector<GaussianDensity> comps;
    std::vector<MixtureComponent> weighted;
    const SimplexWeights w = random_interior_weights(rng, count);
    for (int i = 0; i < count; ++i) {
        const double mean = 6.0 * rng.normal();
        const double var = std::exp(0.8 * rng.normal());
        comps.push_back(scalar_density(mean, var));
        weighted.push_back({w[i], comps.back()});
    }
    const GaussianDensity target = scalar_density(4.0 * rng.normal(), 2.0 * std::exp(0.5 * rng.normal()));
    return {GaussianMixture(std::move(weighted)), std::move(comps), w.values(), target};
}

}  // namespace

TEST_CASE("mixture KL identity against a Gaussian target") {
    // D(f_AA || p) = sum_i w_i [ D(f_i || p) - D(f_i || f_AA) ] exactly; both
    // sides evaluated with the quadrature oracle where no closed form exists.
    RandomStream rng = RandomStream::derive(18, "identity");
    for (int c = 0; c < 25; ++c) {
        const RandomMixtureCase rc = random_mixture_case(rng);
        const GaussianMixture target_mix = GaussianMixture::single(rc.target);
        const double lhs = kl_mixture_quadrature(rc.mixture, target_mix);
        double rhs = 0.0;
        for (std::size_t i = 0; i < rc.components.size(); ++i) {
            const double to_target = kl_gaussian(rc.components[i], rc.target);
            const double to_mix =
                kl_mixture_quadrature(GaussianMixture::single(rc.components[i]), rc.mixture);
            rhs += rc.w(static_cast<Eigen::Index>(i)) * (to_target - to_mix);
        }
        CHECK(std::abs(lhs - rhs) < 1e-5);
    }
}

TEST_CASE("mixture KL Jensen bound against a Gaussian target") {
    RandomStream rng = RandomStream::derive(19, "jensen");
    for (int c = 0; c < 25; ++c) {
        const RandomMixtureCase rc = random_mixture_case(rng);
        const double lhs = kl_mixture_quadrature(rc.mixture, GaussianMixture::single(rc.target));
        double bound = 0.0;
        for (std::size_t i = 0; i < rc.components.size(); ++i) {
            bound += rc.w(static_cast<Eigen::Index>(i)) * kl_gaussian(rc.components[i], rc.target);
        }
        CHECK(lhs <= bound + 1e-9);
    }

    // Equality for identical components; strictly positive slack otherwise.
    const GaussianMixture same = scalar_mixture({0.5, 0.5}, {1, 1}, {2, 2});
    const GaussianDensity p = scalar_density(0, 1);
    const double lhs_same = kl_mixture_quadrature(same, GaussianMixture::single(p));
    const double bound_same = kl_gaussian(scalar_density(1, 2), p);
    CHECK(std::abs(lhs_same - bound_same) < 1e-8);

    const GaussianMixture distinct = scalar_mixture({0.5, 0.5}, {-2, 3}, {1, 2});
    double bound_distinct = 0.5 * kl_gaussian(scalar_density(-2, 1), p) +
                            0.5 * kl_gaussian(scalar_density(3, 2), p);
    CHECK(bound_distinct - kl_mixture_quadrature(distinct, GaussianMixture::single(p)) > 1e-3);
}

TEST_CASE("cross-entropy Jensen bound via product integrals") {
    // H(f_i, f_AA) >= -log(sum_j w_j z_ij).
    RandomStream rng = RandomStream::derive(20, "ce-bound");
    for (int c = 0; c < 10; ++c) {
        const RandomMixtureCase rc = random_mixture_case(rng);
        for (std::size_t i = 0; i < rc.components.size(); ++i) {
            const double ce = cross_entropy_quadrature(GaussianMixture::single(rc.components[i]),
                                                       rc.mixture);
            double z_sum = 0.0;
            for (std::size_t j = 0; j < rc.components.size(); ++j) {
                z_sum += rc.w(static_cast<Eigen::Index>(j)) *
                         gaussian_product_integral(rc.components[i], rc.components[j]);
            }
            CHECK(ce >= -std::log(z_sum) - 1e-6);
        }
    }
}

TEST_CASE("GaussianDensity construction invariants") {
    Eigen::VectorXd mu = Eigen::VectorXd::Zero(2);

    Eigen::MatrixXd rect(2, 3);
    rect.setZero();
    CHECK_THROWS_AS(GaussianDensity(mu, rect), invariant_error);

    Eigen::MatrixXd asym(2, 2);
    asym << 1, 0.5, -0.5, 1;  // far beyond the symmetry tolerance
    CHECK_THROWS_AS(GaussianDensity(mu, asym), invariant_error);

    Eigen::MatrixXd indefinite(2, 2);
    indefinite << 1, 0, 0, -1;
    CHECK_THROWS_AS(GaussianDensity(mu, indefinite), invariant_error);

    Eigen::MatrixXd slightly(2, 2);
    slightly << 1.0, 0.25 + 1e-13, 0.25 - 1e-13, 1.0;
    const GaussianDensity ok(mu, slightly);
    CHECK((ok.cov() - ok.cov().transpose()).norm() == 0.0);
    CHECK(ok.cov()(0, 1) == doctest::Approx(0.25).epsilon(1e-9));
}

TEST_CASE("GaussianMixture and SimplexWeights invariants") {
    CHECK_THROWS_AS(GaussianMixture({{0.4, scalar_density(0, 1)}, {0.4, scalar_density(1, 1)}}),
                    invariant_error);
    CHECK_THROWS_AS(GaussianMixture({{-0.1, scalar_density(0, 1)}, {1.1, scalar_density(1, 1)}}),
                    invariant_error);

    Eigen::VectorXd bad(2);
    bad << -0.2, 1.2;
    CHECK_THROWS_AS(SimplexWeights{bad}, invariant_error);
    Eigen::VectorXd off(2);
    off << 0.3, 0.3;
    CHECK_THROWS_AS(SimplexWeights{off}, invariant_error);

    const SimplexWeights u = SimplexWeights::uniform(4);
    CHECK(u.values().sum() == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(u[2] == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(u.total() == 1.0);
}

TEST_CASE("pdf and logpdf agree") {
    const GaussianDensity f = scalar_density(1, 4);
    Eigen::VectorXd x(1);
    x << 2.5;
    CHECK(std::log(f.pdf(x)) == doctest::Approx(f.logpdf(x)).epsilon(1e-12));
    // Peak value of a scalar Gaussian is 1/sqrt(2 pi P).
    Eigen::VectorXd peak(1);
    peak << 1.0;
    CHECK(f.pdf(peak) == doctest::Approx(1.0 / std::sqrt(2.0 * kPi * 4.0)).epsilon(1e-12));
}
