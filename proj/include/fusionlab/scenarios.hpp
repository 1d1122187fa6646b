#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "fusionlab/filters.hpp"
#include "fusionlab/gaussian.hpp"
#include "fusionlab/models.hpp"
#include "fusionlab/rng.hpp"

namespace fusionlab {

enum class ScenarioKind { linear, coordinated_turn };
enum class BaseFilter { kf, ckf, sir };
enum class FusionMode { noncoop, ic, nf, aa, ci, cu };

std::string to_string(ScenarioKind kind);
std::string to_string(BaseFilter base);
std::string to_string(FusionMode mode);
ScenarioKind parse_scenario_kind(const std::string& name);

/// One benchmarked filter: a base filter plus the fusion mode driving it.
/// Names look like "kf_aa" or "sir_noncoop".
struct FilterCombo {
    BaseFilter base;
    FusionMode fusion;

    std::string name() const;
};

FilterCombo parse_combo(const std::string& name);

struct LinearSensor {
    double noise_std = 20.0;  ///< position measurement noise std, per axis
};

struct RangeBearingSensor {
    Eigen::Vector2d position = Eigen::Vector2d::Zero();
    double range_std = 10.0;
    double bearing_std = 0.0174532925199433;  ///< radians
};

/// Full description of one tracking experiment.
struct ScenarioConfig {
    ScenarioKind kind = ScenarioKind::linear;
    int horizon = 100;
    int trials = 100;
    std::uint64_t seed = 1;
    int particle_count = 0;  ///< 0 = kind default (200 linear, 500 coordinated turn)
    double ffcc_delta = 0.8;
    std::vector<FilterCombo> filters;

    // Linear scenario: nearly-constant-velocity target, position-only
    // sensors.
    double process_noise_var = 25.0;
    std::vector<LinearSensor> linear_sensors;

    // Coordinated-turn scenario: range-bearing sensors.
    double q1 = 0.1;
    double turn_noise_var = 1e-4;
    std::vector<RangeBearingSensor> ct_sensors;

    // Initial density; filled by apply_defaults() when left empty.
    Eigen::VectorXd mu0;
    Eigen::VectorXd p0_diag;

    Eigen::Index state_dim() const { return kind == ScenarioKind::linear ? 4 : 5; }

    /// Fills kind-dependent defaults (initial density, sensors, filter set)
    /// for any field left empty.
    void apply_defaults();

    /// Throws invariant_error when the configuration is inconsistent.
    void check() const;
};

/// Truth trajectory (columns 0..horizon; column 0 is the initial state) and
/// per-sensor measurements (columns 0..horizon-1; column k-1 observes the
/// state at time k).
struct TrialData {
    Eigen::MatrixXd truth;
    std::vector<Eigen::MatrixXd> meas;
};

TrialData gen_linear_scenario(const ScenarioConfig& config, RandomStream& rng);
TrialData gen_ct_scenario(const ScenarioConfig& config, RandomStream& rng);
TrialData gen_scenario(const ScenarioConfig& config, RandomStream& rng);

/// Models the filters consume.
LinearGaussianModel linear_model(const ScenarioConfig& config, std::size_t sensor);
NonlinearModel ct_model(const ScenarioConfig& config, std::size_t sensor);
GaussianDensity initial_density(const ScenarioConfig& config);

/// Coordinated-turn transition matrix; |omega| below 1e-9 uses the
/// constant-velocity limit.
Eigen::MatrixXd ct_transition_matrix(double omega, double delta = 1.0);

/// Per-trial outcome of one filter combo.
struct ComboTrialResult {
    Eigen::MatrixXd estimates;  ///< state_dim x horizon; NaN once the filter died
    Eigen::VectorXd weight1;    ///< sensor-1 fusing weight per step (AA only, else NaN)
    int divergent_from = -1;    ///< first step marked divergent, -1 if none

    bool diverged() const { return divergent_from >= 0; }
};

struct TrialRecord {
    Eigen::MatrixXd truth;                 ///< state_dim x horizon (steps 1..horizon)
    std::vector<ComboTrialResult> combos;  ///< aligned with config.filters
};

/// Rectangular (trial x step x filter) record of one experiment.
struct TrialEnsemble {
    std::vector<std::string> combo_names;
    std::vector<TrialRecord> trials;
    Eigen::Index state_dim = 0;
};

/// Runs every configured combo on shared per-trial data. Trials execute on
/// `jobs` worker threads; per-trial substreams and an ordered reduction make
/// the result identical for any job count.
TrialEnsemble run_trials(const ScenarioConfig& config, int jobs = 1);

/// RMSE over trials per step for the chosen state components (errors scaled
/// by `scale`, e.g. rad -> deg), plus the time-averaged value.
struct RmseSeries {
    Eigen::VectorXd per_step;
    Eigen::VectorXi counts;  ///< finite estimates contributing per step
    double average = 0.0;
};

RmseSeries rmse(const TrialEnsemble& ensemble, std::size_t combo,
                const std::vector<Eigen::Index>& components, double scale = 1.0);

/// Mean and population variance across trials of the sensor-1 AA weight.
struct WeightTrace {
    Eigen::VectorXd mean;
    Eigen::VectorXd variance;
    Eigen::VectorXi counts;
};

WeightTrace weight_trace(const TrialEnsemble& ensemble, std::size_t combo);

struct ComboSummary {
    std::string name;
    std::map<std::string, double> armse;            ///< metric -> time-averaged RMSE
    std::map<std::string, Eigen::VectorXd> series;  ///< metric -> per-step RMSE
    int divergent_trials = 0;
    bool has_weight_trace = false;
    Eigen::VectorXd weight_mean;
    Eigen::VectorXd weight_variance;
};

struct ExperimentSummary {
    std::vector<std::string> metrics;  ///< "position", "velocity"[, "turn_rate_deg"]
    std::vector<ComboSummary> combos;
};

ExperimentSummary summarize(const ScenarioConfig& config, const TrialEnsemble& ensemble);

/// CSV writers (numbers formatted %.12g; stable headers).
void write_summary_csv(const ExperimentSummary& summary, std::ostream& out);
void write_per_step_csv(const ExperimentSummary& summary, std::ostream& out);
void write_weight_trace_csv(const ExperimentSummary& summary, std::ostream& out);

/// Fuses two per-sensor posteriors with the harness policy for `mode`:
/// diversity weights for AA, trace-optimized weights for CI, uniform weights
/// with the upper bound for CU, plain product for NF. Returns the fused
/// density and the sensor-1 weight used (NaN when the rule has no designed
/// weight).
std::pair<GaussianDensity, double> fuse_posteriors(FusionMode mode, const GaussianDensity& f1,
                                                   const GaussianDensity& f2);

std::string format_double(double value);  ///< %.12g, shared by all writers

}  // namespace fusionlab
