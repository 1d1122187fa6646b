#pragma once

#include <json.hpp>

#include "fusionlab/fusion.hpp"
#include "fusionlab/gaussian.hpp"
#include "fusionlab/scenarios.hpp"
#include "fusionlab/weights.hpp"

namespace fusionlab {

/// JSON wire format. Densities serialize as {"mean": [..], "cov": [[..]]}
/// (row-major), mixtures as {"components": [{"w": .., "mean": .., "cov":
/// ..}]}, weights as plain arrays. Structural problems (missing keys, wrong
/// types) surface as nlohmann::json exceptions; value problems (bad
/// covariances, weights off the simplex) as invariant_error from the domain
/// constructors.

nlohmann::json to_json(const GaussianDensity& density);
GaussianDensity density_from_json(const nlohmann::json& j);

nlohmann::json to_json(const GaussianMixture& mixture);
GaussianMixture mixture_from_json(const nlohmann::json& j);

nlohmann::json to_json(const SimplexWeights& w);
SimplexWeights weights_from_json(const nlohmann::json& j, double total = 1.0);

nlohmann::json to_json(const FusedPair& fused);
nlohmann::json to_json(const WeightSolution& solution);
nlohmann::json to_json(const ChainReport& report);

/// Scenario configs. Linear:
///   {"kind": "linear", "horizon": .., "trials": .., "seed": ..,
///    "particle_count": .., "process_noise_var": ..,
///    "sensors": [{"noise_std": ..}, ..], "filters": ["kf_aa", ..]?}
/// Coordinated turn swaps the sensor block for
///   {"position": [x, y], "range_std": .., "bearing_std_deg": ..}
/// plus "q1" and "turn_noise_var". "filters", "mu0", "p0_diag",
/// "ffcc_delta" are optional; absent fields keep kind defaults.
ScenarioConfig scenario_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ScenarioConfig& config);

nlohmann::json summary_to_json(const ExperimentSummary& summary);

}  // namespace fusionlab
