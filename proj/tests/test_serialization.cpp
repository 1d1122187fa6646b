#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <json.hpp>
#include <vector>

#include "fusionlab/common.hpp"
#include "fusionlab/fusion.hpp"
#include "fusionlab/gaussian.hpp"
#include "fusionlab/scenarios.hpp"
#include "fusionlab/serialization.hpp"
#include "fusionlab/weights.hpp"

namespace {

using namespace fusionlab;

GaussianDensity sample_density() {
    Eigen::VectorXd mu(2);
    mu << 1.25, -3.5;
    Eigen::MatrixXd cov(2, 2);
    cov << 2.0, 0.3, 0.3, 1.5;
    return GaussianDensity(mu, cov);
}

}  // namespace

TEST_CASE("GaussianDensity JSON round trip") {
    const GaussianDensity d = sample_density();
    const nlohmann::json j = to_json(d);
    CHECK(j.at("mean").size() == 2);
    CHECK(j.at("cov").size() == 2);
    // The JSON layer itself is lossless for doubles.
    CHECK(nlohmann::json::parse(j.dump()) == j);
    const GaussianDensity back = density_from_json(j);
    CHECK(back.mean() == d.mean());
    // Construction re-factorizes the covariance, so the round trip is exact
    // only up to spectral reconstruction round-off.
    CHECK(back.cov().isApprox(d.cov(), 1e-13));
}

TEST_CASE("GaussianMixture JSON round trip") {
    const GaussianMixture mix({{0.25, sample_density()}, {0.75, sample_density()}});
    const GaussianMixture back = mixture_from_json(to_json(mix));
    REQUIRE(back.size() == 2);
    CHECK(back.components()[0].weight == 0.25);
    CHECK(back.components()[1].density.mean() == sample_density().mean());
}

TEST_CASE("SimplexWeights JSON round trip") {
    Eigen::VectorXd w(3);
    w << 0.2, 0.3, 0.5;
    const SimplexWeights weights(w);
    const nlohmann::json j = to_json(weights);
    CHECK(j.is_array());
    const SimplexWeights back = weights_from_json(j);
    CHECK(back.values() == w);

    Eigen::VectorXd under(2);
    under << 0.25, 0.25;
    const SimplexWeights ffcc = weights_from_json(to_json(SimplexWeights(under, 0.5)), 0.5);
    CHECK(ffcc.total() == 0.5);
}

TEST_CASE("FusedPair and WeightSolution JSON shapes") {
    const std::vector<GaussianDensity> sources = {sample_density(), sample_density()};
    const nlohmann::json fused = to_json(naive_fuse(sources));
    CHECK(fused.at("rule") == "naive");
    CHECK(fused.contains("estimate"));
    CHECK(fused.at("weights_used").size() == 2);

    const nlohmann::json sol = to_json(suboptimal_weights_diversity(sources));
    CHECK(sol.at("objective") == "subopt_diversity");
    CHECK(sol.contains("objective_value"));
    CHECK(sol.at("w").size() == 2);
    CHECK(sol.at("solver_trace").is_array());
    CHECK(sol.at("solver_trace").size() >= 1);
}

TEST_CASE("ChainReport JSON carries traces, links, and the verdict") {
    Eigen::VectorXd mu0 = Eigen::VectorXd::Zero(1);
    const GaussianDensity a(mu0, Eigen::MatrixXd::Constant(1, 1, 1.0));
    const GaussianDensity b(Eigen::VectorXd::Constant(1, 2.0), Eigen::MatrixXd::Constant(1, 1, 3.0));
    const ChainReport report = chain_check({a, b}, SimplexWeights::uniform(2));
    const nlohmann::json j = to_json(report);
    CHECK(j.at("traces").contains("naive"));
    CHECK(j.at("traces").contains("ffcc"));
    CHECK(j.at("links").is_array());
    CHECK(j.at("links").size() == report.links.size());
    CHECK(j.at("all_ok") == report.all_ok());
}

TEST_CASE("scenario config from minimal JSON applies kind defaults") {
    const ScenarioConfig lin = scenario_config_from_json({{"kind", "linear"}});
    CHECK(lin.kind == ScenarioKind::linear);
    CHECK(lin.horizon == 100);
    CHECK(lin.trials == 100);
    CHECK(lin.filters.size() == 12);
    CHECK(lin.linear_sensors.size() == 2);
    CHECK(lin.particle_count == 200);

    const nlohmann::json ct_json = {
        {"kind", "coordinated_turn"},
        {"trials", 5},
        {"sensors",
         nlohmann::json::array(
             {{{"position", {0.0, 0.0}}, {"range_std", 10.0}, {"bearing_std_deg", 1.0}},
              {{"position", {500.0, 0.0}}, {"range_std", 20.0}, {"bearing_std_deg", 2.0}}})}};
    const ScenarioConfig ct = scenario_config_from_json(ct_json);
    CHECK(ct.trials == 5);
    REQUIRE(ct.ct_sensors.size() == 2);
    CHECK(ct.ct_sensors[0].bearing_std == doctest::Approx(3.14159265358979 / 180.0).epsilon(1e-9));
    CHECK(ct.ct_sensors[1].bearing_std == doctest::Approx(2.0 * 3.14159265358979 / 180.0).epsilon(1e-9));
    CHECK(ct.particle_count == 500);
}

TEST_CASE("scenario config JSON round trip preserves the experiment") {
    ScenarioConfig config;
    config.kind = ScenarioKind::linear;
    config.trials = 7;
    config.seed = 42;
    config.apply_defaults();
    const ScenarioConfig back = scenario_config_from_json(to_json(config));
    CHECK(back.trials == 7);
    CHECK(back.seed == 42);
    CHECK(back.filters.size() == config.filters.size());
    CHECK(back.linear_sensors[1].noise_std == config.linear_sensors[1].noise_std);
    CHECK(back.mu0 == config.mu0);
}

TEST_CASE("scenario config errors") {
    // Missing kind is a structural error from the JSON layer.
    CHECK_THROWS_AS(scenario_config_from_json({{"horizon", 10}}), nlohmann::json::exception);
    // Bad values are domain invariant errors.
    CHECK_THROWS_AS(scenario_config_from_json({{"kind", "linear"}, {"trials", 0}}),
                    invariant_error);
    CHECK_THROWS_AS(scenario_config_from_json({{"kind", "linear"}, {"filters", {"ckf_aa"}}}),
                    invariant_error);
}

TEST_CASE("malformed density JSON fails cleanly") {
    CHECK_THROWS_AS(density_from_json({{"mean", {0.0}}, {"cov", {{1.0}, {2.0, 3.0}}}}),
                    invariant_error);
    CHECK_THROWS_AS(density_from_json({{"mean", 5}, {"cov", {{1.0}}}}), invariant_error);
    CHECK_THROWS_AS(density_from_json({{"cov", {{1.0}}}}), nlohmann::json::exception);
    // Weights off the simplex are domain errors.
    CHECK_THROWS_AS(weights_from_json(nlohmann::json::array({0.7, 0.7})), invariant_error);
}

TEST_CASE("summary JSON lists every filter with its metrics") {
    ScenarioConfig config;
    config.kind = ScenarioKind::linear;
    config.horizon = 3;
    config.trials = 2;
    config.seed = 17;
    config.filters = {{BaseFilter::kf, FusionMode::noncoop}, {BaseFilter::kf, FusionMode::ic}};
    config.apply_defaults();
    const ExperimentSummary summary = summarize(config, run_trials(config));
    const nlohmann::json j = summary_to_json(summary);
    CHECK(j.at("metrics").size() == 2);
    REQUIRE(j.at("filters").size() == 2);
    CHECK(j.at("filters")[0].at("filter") == "kf_noncoop");
    CHECK(j.at("filters")[0].contains("armse_position"));
    CHECK(j.at("filters")[0].contains("armse_velocity"));
    CHECK(j.at("filters")[0].contains("divergent_trials"));
}
