#include "fusionlab/scenarios.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <thread>
#include <utility>

#include "fusionlab/common.hpp"
#include "fusionlab/fusion.hpp"
#include "fusionlab/weights.hpp"

namespace fusionlab {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kDivergenceNorm = 1e8;
const double kNaN = std::numeric_limits<double>::quiet_NaN();

bool is_fusing(FusionMode mode) {
    return mode == FusionMode::nf || mode == FusionMode::aa || mode == FusionMode::ci ||
           mode == FusionMode::cu;
}

}  // namespace

std::string to_string(ScenarioKind kind) {
    return kind == ScenarioKind::linear ? "linear" : "coordinated_turn";
}

std::string to_string(BaseFilter base) {
    switch (base) {
        case BaseFilter::kf:
            return "kf";
        case BaseFilter::ckf:
            return "ckf";
        case BaseFilter::sir:
            return "sir";
    }
    throw invariant_error("to_string: unknown base filter");
}

std::string to_string(FusionMode mode) {
    switch (mode) {
        case FusionMode::noncoop:
            return "noncoop";
        case FusionMode::ic:
            return "ic";
        case FusionMode::nf:
            return "nf";
        case FusionMode::aa:
            return "aa";
        case FusionMode::ci:
            return "ci";
        case FusionMode::cu:
            return "cu";
    }
    throw invariant_error("to_string: unknown fusion mode");
}

ScenarioKind parse_scenario_kind(const std::string& name) {
    if (name == "linear") return ScenarioKind::linear;
    if (name == "coordinated_turn") return ScenarioKind::coordinated_turn;
    throw invariant_error("parse_scenario_kind: unknown scenario '" + name + "'");
}

std::string FilterCombo::name() const { return to_string(base) + "_" + to_string(fusion); }

FilterCombo parse_combo(const std::string& name) {
    const auto sep = name.find('_');
    if (sep == std::string::npos) {
        throw invariant_error("parse_combo: expected '<base>_<mode>', got '" + name + "'");
    }
    const std::string base = name.substr(0, sep);
    const std::string mode = name.substr(sep + 1);
    FilterCombo combo;
    if (base == "kf") {
        combo.base = BaseFilter::kf;
    } else if (base == "ckf") {
        combo.base = BaseFilter::ckf;
    } else if (base == "sir") {
        combo.base = BaseFilter::sir;
    } else {
        throw invariant_error("parse_combo: unknown base filter '" + base + "'");
    }
    if (mode == "noncoop") {
        combo.fusion = FusionMode::noncoop;
    } else if (mode == "ic") {
        combo.fusion = FusionMode::ic;
    } else if (mode == "nf") {
        combo.fusion = FusionMode::nf;
    } else if (mode == "aa") {
        combo.fusion = FusionMode::aa;
    } else if (mode == "ci") {
        combo.fusion = FusionMode::ci;
    } else if (mode == "cu") {
        combo.fusion = FusionMode::cu;
    } else {
        throw invariant_error("parse_combo: unknown fusion mode '" + mode + "'");
    }
    return combo;
}

void ScenarioConfig::apply_defaults() {
    if (particle_count == 0) {
        particle_count = kind == ScenarioKind::linear ? 200 : 500;
    }
    if (filters.empty()) {
        const BaseFilter gaussian_base =
            kind == ScenarioKind::linear ? BaseFilter::kf : BaseFilter::ckf;
        const FusionMode modes[] = {FusionMode::noncoop, FusionMode::ic, FusionMode::nf,
                                    FusionMode::aa,      FusionMode::ci, FusionMode::cu};
        for (FusionMode mode : modes) filters.push_back({gaussian_base, mode});
        for (FusionMode mode : modes) filters.push_back({BaseFilter::sir, mode});
    }
    if (kind == ScenarioKind::linear) {
        if (linear_sensors.empty()) linear_sensors = {{20.0}, {40.0}};
        if (mu0.size() == 0) {
            mu0 = (Eigen::VectorXd(4) << 1000.0, 20.0, 1000.0, 0.0).finished();
        }
        if (p0_diag.size() == 0) {
            p0_diag = (Eigen::VectorXd(4) << 500.0, 50.0, 500.0, 50.0).finished();
        }
    } else {
        if (ct_sensors.empty()) {
            RangeBearingSensor s1;
            s1.position = Eigen::Vector2d(0.0, 0.0);
            s1.range_std = 10.0;
            s1.bearing_std = kPi / 180.0;
            RangeBearingSensor s2;
            s2.position = Eigen::Vector2d(500.0, 0.0);
            s2.range_std = 20.0;
            s2.bearing_std = kPi / 90.0;
            ct_sensors = {s1, s2};
        }
        if (mu0.size() == 0) {
            mu0 = (Eigen::VectorXd(5) << 1000.0, 20.0, 1000.0, 0.0, -kPi / 60.0).finished();
        }
        if (p0_diag.size() == 0) {
            p0_diag = (Eigen::VectorXd(5) << 500.0, 50.0, 500.0, 50.0, 0.01).finished();
        }
    }
}

void ScenarioConfig::check() const {
    if (horizon < 1) throw invariant_error("ScenarioConfig: horizon must be >= 1");
    if (trials < 1) throw invariant_error("ScenarioConfig: trials must be >= 1");
    if (particle_count < 1) throw invariant_error("ScenarioConfig: particle_count must be >= 1");
    if (!(ffcc_delta > 0.0 && ffcc_delta <= 1.0)) {
        throw invariant_error("ScenarioConfig: ffcc_delta must lie in (0, 1]");
    }
    if (filters.empty()) throw invariant_error("ScenarioConfig: no filter combos configured");
    for (const FilterCombo& combo : filters) {
        const bool gaussian_matches = kind == ScenarioKind::linear
                                          ? combo.base != BaseFilter::ckf
                                          : combo.base != BaseFilter::kf;
        if (!gaussian_matches) {
            throw invariant_error("ScenarioConfig: combo '" + combo.name() +
                                  "' does not match scenario kind '" + to_string(kind) + "'");
        }
    }
    if (kind == ScenarioKind::linear) {
        if (linear_sensors.size() != 2) {
            throw invariant_error("ScenarioConfig: linear scenario needs exactly two sensors");
        }
        for (const LinearSensor& s : linear_sensors) {
            if (!(s.noise_std > 0.0)) {
                throw invariant_error("ScenarioConfig: sensor noise std must be positive");
            }
        }
        if (!(process_noise_var > 0.0)) {
            throw invariant_error("ScenarioConfig: process_noise_var must be positive");
        }
    } else {
        if (ct_sensors.size() != 2) {
            throw invariant_error(
                "ScenarioConfig: coordinated-turn scenario needs exactly two sensors");
        }
        for (const RangeBearingSensor& s : ct_sensors) {
            if (!(s.range_std > 0.0 && s.bearing_std > 0.0)) {
                throw invariant_error("ScenarioConfig: sensor noise stds must be positive");
            }
        }
        if (!(q1 > 0.0)) throw invariant_error("ScenarioConfig: q1 must be positive");
        if (!(turn_noise_var > 0.0)) {
            throw invariant_error("ScenarioConfig: turn_noise_var must be positive");
        }
    }
    const Eigen::Index n = state_dim();
    if (mu0.size() != n || p0_diag.size() != n) {
        throw invariant_error("ScenarioConfig: initial density does not match the state dimension");
    }
    if (!all_finite(mu0) || !all_finite(p0_diag)) {
        throw invariant_error("ScenarioConfig: initial density has non-finite entries");
    }
    if ((p0_diag.array() <= 0.0).any()) {
        throw invariant_error("ScenarioConfig: initial variances must be positive");
    }
}

Eigen::MatrixXd ct_transition_matrix(double omega, double delta) {
    Eigen::MatrixXd f = Eigen::MatrixXd::Identity(5, 5);
    if (std::abs(omega) < 1e-9) {
        f(0, 1) = delta;
        f(2, 3) = delta;
        return f;
    }
    const double s = std::sin(omega * delta);
    const double c = std::cos(omega * delta);
    f(0, 1) = s / omega;
    f(0, 3) = -(1.0 - c) / omega;
    f(1, 1) = c;
    f(1, 3) = -s;
    f(2, 1) = (1.0 - c) / omega;
    f(2, 3) = s / omega;
    f(3, 1) = s;
    f(3, 3) = c;
    return f;
}

LinearGaussianModel linear_model(const ScenarioConfig& config, std::size_t sensor) {
    if (config.kind != ScenarioKind::linear) {
        throw invariant_error("linear_model: config is not a linear scenario");
    }
    if (sensor >= config.linear_sensors.size()) {
        throw invariant_error("linear_model: sensor index out of range");
    }
    const double delta = 1.0;
    LinearGaussianModel m;
    m.F = Eigen::MatrixXd::Identity(4, 4);
    m.F(0, 1) = delta;
    m.F(2, 3) = delta;
    m.G = Eigen::MatrixXd::Zero(4, 2);
    m.G(0, 0) = 0.5 * delta * delta;
    m.G(1, 0) = delta;
    m.G(2, 1) = 0.5 * delta * delta;
    m.G(3, 1) = delta;
    m.Qu = config.process_noise_var * Eigen::MatrixXd::Identity(2, 2);
    m.H = Eigen::MatrixXd::Zero(2, 4);
    m.H(0, 0) = 1.0;
    m.H(1, 2) = 1.0;
    const double std = config.linear_sensors[sensor].noise_std;
    m.R = std * std * Eigen::MatrixXd::Identity(2, 2);
    m.check();
    return m;
}

NonlinearModel ct_model(const ScenarioConfig& config, std::size_t sensor) {
    if (config.kind != ScenarioKind::coordinated_turn) {
        throw invariant_error("ct_model: config is not a coordinated-turn scenario");
    }
    if (sensor >= config.ct_sensors.size()) {
        throw invariant_error("ct_model: sensor index out of range");
    }
    const double delta = 1.0;
    Eigen::Matrix2d g2;
    g2 << delta * delta * delta / 3.0, delta * delta / 2.0,  //
        delta * delta / 2.0, delta;
    g2 *= config.q1;
    NonlinearModel m;
    m.Q = Eigen::MatrixXd::Zero(5, 5);
    m.Q.block<2, 2>(0, 0) = g2;
    m.Q.block<2, 2>(2, 2) = g2;
    m.Q(4, 4) = config.turn_noise_var;
    m.transition = [delta](const Eigen::VectorXd& x) -> Eigen::VectorXd {
        return ct_transition_matrix(x(4), delta) * x;
    };
    const Eigen::Vector2d pos = config.ct_sensors[sensor].position;
    m.measurement = [pos](const Eigen::VectorXd& x) -> Eigen::VectorXd {
        const double dx = x(0) - pos(0);
        const double dy = x(2) - pos(1);
        Eigen::VectorXd y(2);
        y(0) = std::sqrt(dx * dx + dy * dy);
        y(1) = std::atan2(dx, dy);
        return y;
    };
    const double sr = config.ct_sensors[sensor].range_std;
    const double sb = config.ct_sensors[sensor].bearing_std;
    m.R = Eigen::MatrixXd::Zero(2, 2);
    m.R(0, 0) = sr * sr;
    m.R(1, 1) = sb * sb;
    m.angle_components = {1};
    m.check();
    return m;
}

GaussianDensity initial_density(const ScenarioConfig& config) {
    return GaussianDensity(config.mu0, config.p0_diag.asDiagonal());
}

TrialData gen_linear_scenario(const ScenarioConfig& config, RandomStream& rng) {
    if (config.kind != ScenarioKind::linear) {
        throw invariant_error("gen_linear_scenario: config is not a linear scenario");
    }
    const LinearGaussianModel base = linear_model(config, 0);
    const double process_std = std::sqrt(config.process_noise_var);
    const int horizon = config.horizon;

    TrialData data;
    data.truth.resize(4, horizon + 1);
    data.truth.col(0) =
        config.mu0 + (config.p0_diag.array().sqrt() * rng.normal_vector(4).array()).matrix();
    data.meas.assign(config.linear_sensors.size(), Eigen::MatrixXd(2, horizon));
    for (int k = 1; k <= horizon; ++k) {
        const Eigen::VectorXd u = process_std * rng.normal_vector(2);
        data.truth.col(k) = base.F * data.truth.col(k - 1) + base.G * u;
        for (std::size_t s = 0; s < config.linear_sensors.size(); ++s) {
            data.meas[s].col(k - 1) = base.H * data.truth.col(k) +
                                      config.linear_sensors[s].noise_std * rng.normal_vector(2);
        }
    }
    return data;
}

TrialData gen_ct_scenario(const ScenarioConfig& config, RandomStream& rng) {
    if (config.kind != ScenarioKind::coordinated_turn) {
        throw invariant_error("gen_ct_scenario: config is not a coordinated-turn scenario");
    }
    const NonlinearModel base = ct_model(config, 0);
    const Eigen::MatrixXd sqrt_q = matrix_sqrt_psd(base.Q);
    const int horizon = config.horizon;

    TrialData data;
    data.truth.resize(5, horizon + 1);
    data.truth.col(0) =
        config.mu0 + (config.p0_diag.array().sqrt() * rng.normal_vector(5).array()).matrix();
    data.meas.assign(config.ct_sensors.size(), Eigen::MatrixXd(2, horizon));
    for (int k = 1; k <= horizon; ++k) {
        data.truth.col(k) = base.transition(data.truth.col(k - 1)) + sqrt_q * rng.normal_vector(5);
        for (std::size_t s = 0; s < config.ct_sensors.size(); ++s) {
            const RangeBearingSensor& sensor = config.ct_sensors[s];
            const double dx = data.truth(0, k) - sensor.position(0);
            const double dy = data.truth(2, k) - sensor.position(1);
            data.meas[s](0, k - 1) = std::sqrt(dx * dx + dy * dy) +
                                     sensor.range_std * rng.normal();
            data.meas[s](1, k - 1) =
                wrap_angle(std::atan2(dx, dy) + sensor.bearing_std * rng.normal());
        }
    }
    return data;
}

TrialData gen_scenario(const ScenarioConfig& config, RandomStream& rng) {
    return config.kind == ScenarioKind::linear ? gen_linear_scenario(config, rng)
                                               : gen_ct_scenario(config, rng);
}

std::pair<GaussianDensity, double> fuse_posteriors(FusionMode mode, const GaussianDensity& f1,
                                                   const GaussianDensity& f2) {
    const std::vector<GaussianDensity> sources{f1, f2};
    switch (mode) {
        case FusionMode::nf:
            return {naive_fuse(sources).estimate, kNaN};
        case FusionMode::aa: {
            const WeightSolution sol = suboptimal_weights_diversity(sources);
            return {aa_fuse_pairs(sources, sol.w).estimate, sol.w[0]};
        }
        case FusionMode::ci: {
            // Trace-optimal weights live on the open simplex (every w_i > 0);
            // with nested covariances (one posterior dominating) the closed
            // search collapses to a vertex, i.e. to discarding one sensor
            // outright. Guard that collapse by falling back to the
            // un-weighted geometric average, the canonical interior point.
            const FusedPair ci = ci_fuse(sources);
            if (ci.weights_used.values().maxCoeff() >= 1.0 - 1e-9) {
                return {ga_fuse(sources, SimplexWeights::uniform(2)).estimate, kNaN};
            }
            return {ci.estimate, kNaN};
        }
        case FusionMode::cu:
            return {cu_fuse(sources, SimplexWeights::uniform(2), CuBound::max).estimate, kNaN};
        default:
            throw invariant_error("fuse_posteriors: mode '" + to_string(mode) +
                                  "' has no fusion rule");
    }
}

namespace {

/// Type-erased per-sensor Gaussian filter steps for one scenario kind.
struct GaussianFilterOps {
    std::function<GaussianDensity(const GaussianDensity&, std::size_t, const Eigen::VectorXd&)>
        step;
    std::function<GaussianDensity(const GaussianDensity&, const Eigen::VectorXd&,
                                  const Eigen::VectorXd&)>
        ic;
};

GaussianFilterOps make_gaussian_ops(const ScenarioConfig& config) {
    GaussianFilterOps ops;
    if (config.kind == ScenarioKind::linear) {
        const LinearGaussianModel m1 = linear_model(config, 0);
        const LinearGaussianModel m2 = linear_model(config, 1);
        ops.step = [m1, m2](const GaussianDensity& prior, std::size_t sensor,
                            const Eigen::VectorXd& y) {
            return kf_step(prior, sensor == 0 ? m1 : m2, y);
        };
        ops.ic = [m1, m2](const GaussianDensity& prior, const Eigen::VectorXd& y1,
                          const Eigen::VectorXd& y2) { return ic_update(prior, m1, m2, y1, y2); };
    } else {
        const NonlinearModel m1 = ct_model(config, 0);
        const NonlinearModel m2 = ct_model(config, 1);
        ops.step = [m1, m2](const GaussianDensity& prior, std::size_t sensor,
                            const Eigen::VectorXd& y) {
            return ckf_step(prior, sensor == 0 ? m1 : m2, y);
        };
        ops.ic = [m1, m2](const GaussianDensity& prior, const Eigen::VectorXd& y1,
                          const Eigen::VectorXd& y2) { return ic_update(prior, m1, m2, y1, y2); };
    }
    return ops;
}

/// Marks step k divergent (first failure only) in `result`.
void mark_divergent(ComboTrialResult& result, int k) {
    if (result.divergent_from < 0) result.divergent_from = k;
}

ComboTrialResult run_gaussian_combo(const GaussianFilterOps& ops, FusionMode mode,
                                    const GaussianDensity& init, const TrialData& data) {
    const Eigen::Index n = init.dim();
    const int horizon = static_cast<int>(data.meas.front().cols());
    ComboTrialResult result;
    result.estimates = Eigen::MatrixXd::Constant(n, horizon, kNaN);
    result.weight1 = Eigen::VectorXd::Constant(horizon, kNaN);

    GaussianDensity local1 = init;
    GaussianDensity local2 = init;
    for (int k = 0; k < horizon; ++k) {
        const Eigen::VectorXd y1 = data.meas[0].col(k);
        const Eigen::VectorXd y2 = data.meas[1].col(k);
        try {
            Eigen::VectorXd estimate;
            if (mode == FusionMode::noncoop) {
                local1 = ops.step(local1, 0, y1);
                estimate = local1.mean();
            } else if (mode == FusionMode::ic) {
                local1 = ops.ic(local1, y1, y2);
                estimate = local1.mean();
            } else {
                const GaussianDensity post1 = ops.step(local1, 0, y1);
                const GaussianDensity post2 = ops.step(local2, 1, y2);
                auto [fused, w1] = fuse_posteriors(mode, post1, post2);
                estimate = fused.mean();
                result.weight1(k) = w1;
                local1 = fused;
                local2 = fused;
            }
            if (!all_finite(estimate)) {
                mark_divergent(result, k);
                break;
            }
            result.estimates.col(k) = estimate;
            if (estimate.norm() > kDivergenceNorm) mark_divergent(result, k);
        } catch (const invariant_error&) {
            mark_divergent(result, k);
            break;
        }
    }
    return result;
}

ComboTrialResult run_sir_combo(const std::vector<NonlinearModel>& models, FusionMode mode,
                               const GaussianDensity& init, Eigen::Index particle_count,
                               const TrialData& data, RandomStream& rng) {
    const Eigen::Index n = init.dim();
    const int horizon = static_cast<int>(data.meas.front().cols());
    ComboTrialResult result;
    result.estimates = Eigen::MatrixXd::Constant(n, horizon, kNaN);
    result.weight1 = Eigen::VectorXd::Constant(horizon, kNaN);

    ParticleSet p1 = gaussian_to_particles(init, particle_count, rng);
    ParticleSet p2;
    if (is_fusing(mode)) p2 = gaussian_to_particles(init, particle_count, rng);
    for (int k = 0; k < horizon; ++k) {
        const Eigen::VectorXd y1 = data.meas[0].col(k);
        const Eigen::VectorXd y2 = data.meas[1].col(k);
        try {
            Eigen::VectorXd estimate;
            if (mode == FusionMode::noncoop) {
                const ParticleSet weighted = sir_propagate_reweight(p1, models[0], y1, rng);
                estimate = weighted_mean(weighted);
                p1 = systematic_resample(weighted, rng);
            } else if (mode == FusionMode::ic) {
                const ParticleSet weighted =
                    sir_propagate_reweight_joint(p1, models[0], models[1], y1, y2, rng);
                estimate = weighted_mean(weighted);
                p1 = systematic_resample(weighted, rng);
            } else {
                const ParticleSet w1set = sir_propagate_reweight(p1, models[0], y1, rng);
                const ParticleSet w2set = sir_propagate_reweight(p2, models[1], y2, rng);
                const GaussianDensity g1 = particles_to_gaussian(w1set).density;
                const GaussianDensity g2 = particles_to_gaussian(w2set).density;
                auto [fused, w1] = fuse_posteriors(mode, g1, g2);
                estimate = fused.mean();
                result.weight1(k) = w1;
                p1 = gaussian_to_particles(fused, particle_count, rng);
                p2 = gaussian_to_particles(fused, particle_count, rng);
            }
            if (!all_finite(estimate)) {
                mark_divergent(result, k);
                break;
            }
            result.estimates.col(k) = estimate;
            if (estimate.norm() > kDivergenceNorm) mark_divergent(result, k);
        } catch (const invariant_error&) {
            mark_divergent(result, k);
            break;
        }
    }
    return result;
}

}  // namespace

TrialEnsemble run_trials(const ScenarioConfig& config_in, int jobs) {
    if (jobs < 1) throw invariant_error("run_trials: jobs must be >= 1");
    ScenarioConfig config = config_in;
    config.apply_defaults();
    config.check();

    const GaussianDensity init = initial_density(config);
    const GaussianFilterOps gaussian_ops = make_gaussian_ops(config);
    std::vector<NonlinearModel> sir_models;
    for (std::size_t s = 0; s < 2; ++s) {
        sir_models.push_back(config.kind == ScenarioKind::linear
                                 ? as_nonlinear(linear_model(config, s))
                                 : ct_model(config, s));
    }

    TrialEnsemble ensemble;
    ensemble.state_dim = config.state_dim();
    for (const FilterCombo& combo : config.filters) ensemble.combo_names.push_back(combo.name());
    ensemble.trials.resize(static_cast<std::size_t>(config.trials));

    std::atomic<int> next_trial{0};
    const auto worker = [&]() {
        while (true) {
            const int t = next_trial.fetch_add(1);
            if (t >= config.trials) break;
            RandomStream truth_rng =
                RandomStream::derive(config.seed, "truth", static_cast<std::uint64_t>(t));
            const TrialData data = gen_scenario(config, truth_rng);

            TrialRecord record;
            record.truth = data.truth.rightCols(config.horizon);
            record.combos.reserve(config.filters.size());
            for (const FilterCombo& combo : config.filters) {
                if (combo.base == BaseFilter::sir) {
                    RandomStream combo_rng = RandomStream::derive(config.seed, combo.name(),
                                                                  static_cast<std::uint64_t>(t));
                    record.combos.push_back(run_sir_combo(sir_models, combo.fusion, init,
                                                          config.particle_count, data, combo_rng));
                } else {
                    record.combos.push_back(
                        run_gaussian_combo(gaussian_ops, combo.fusion, init, data));
                }
            }
            ensemble.trials[static_cast<std::size_t>(t)] = std::move(record);
        }
    };

    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(jobs));
        for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
        for (std::thread& th : pool) th.join();
    }
    return ensemble;
}

RmseSeries rmse(const TrialEnsemble& ensemble, std::size_t combo,
                const std::vector<Eigen::Index>& components, double scale) {
    if (combo >= ensemble.combo_names.size()) {
        throw invariant_error("rmse: combo index out of range");
    }
    if (components.empty()) throw invariant_error("rmse: no state components selected");
    if (ensemble.trials.empty()) throw invariant_error("rmse: ensemble holds no trials");
    const Eigen::Index horizon = ensemble.trials.front().truth.cols();
    for (Eigen::Index c : components) {
        if (c < 0 || c >= ensemble.state_dim) {
            throw invariant_error("rmse: state component out of range");
        }
    }

    RmseSeries series;
    series.per_step = Eigen::VectorXd::Constant(horizon, kNaN);
    series.counts = Eigen::VectorXi::Zero(horizon);
    for (Eigen::Index k = 0; k < horizon; ++k) {
        double sum = 0.0;
        int count = 0;
        for (const TrialRecord& trial : ensemble.trials) {
            const Eigen::MatrixXd& est = trial.combos[combo].estimates;
            double err2 = 0.0;
            bool finite = true;
            for (Eigen::Index c : components) {
                const double d = scale * (est(c, k) - trial.truth(c, k));
                if (!std::isfinite(d)) {
                    finite = false;
                    break;
                }
                err2 += d * d;
            }
            if (finite) {
                sum += err2;
                ++count;
            }
        }
        series.counts(k) = count;
        if (count > 0) series.per_step(k) = std::sqrt(sum / count);
    }

    double total = 0.0;
    int steps = 0;
    for (Eigen::Index k = 0; k < horizon; ++k) {
        if (series.counts(k) > 0) {
            total += series.per_step(k);
            ++steps;
        }
    }
    series.average = steps > 0 ? total / steps : kNaN;
    return series;
}

WeightTrace weight_trace(const TrialEnsemble& ensemble, std::size_t combo) {
    if (combo >= ensemble.combo_names.size()) {
        throw invariant_error("weight_trace: combo index out of range");
    }
    if (ensemble.trials.empty()) throw invariant_error("weight_trace: ensemble holds no trials");
    const Eigen::Index horizon = ensemble.trials.front().truth.cols();

    WeightTrace trace;
    trace.mean = Eigen::VectorXd::Constant(horizon, kNaN);
    trace.variance = Eigen::VectorXd::Constant(horizon, kNaN);
    trace.counts = Eigen::VectorXi::Zero(horizon);
    for (Eigen::Index k = 0; k < horizon; ++k) {
        double sum = 0.0;
        int count = 0;
        for (const TrialRecord& trial : ensemble.trials) {
            const double w = trial.combos[combo].weight1(k);
            if (std::isfinite(w)) {
                sum += w;
                ++count;
            }
        }
        if (count == 0) continue;
        const double mean = sum / count;
        double ss = 0.0;
        for (const TrialRecord& trial : ensemble.trials) {
            const double w = trial.combos[combo].weight1(k);
            if (std::isfinite(w)) ss += (w - mean) * (w - mean);
        }
        trace.mean(k) = mean;
        trace.variance(k) = ss / count;
        trace.counts(k) = count;
    }
    return trace;
}

ExperimentSummary summarize(const ScenarioConfig& config, const TrialEnsemble& ensemble) {
    struct Metric {
        std::string name;
        std::vector<Eigen::Index> components;
        double scale;
    };
    std::vector<Metric> metrics = {{"position", {0, 2}, 1.0}, {"velocity", {1, 3}, 1.0}};
    if (ensemble.state_dim == 5) metrics.push_back({"turn_rate_deg", {4}, 180.0 / kPi});
    (void)config;

    ExperimentSummary summary;
    for (const Metric& m : metrics) summary.metrics.push_back(m.name);
    for (std::size_t i = 0; i < ensemble.combo_names.size(); ++i) {
        ComboSummary cs;
        cs.name = ensemble.combo_names[i];
        for (const Metric& m : metrics) {
            const RmseSeries series = rmse(ensemble, i, m.components, m.scale);
            cs.armse[m.name] = series.average;
            cs.series[m.name] = series.per_step;
        }
        for (const TrialRecord& trial : ensemble.trials) {
            if (trial.combos[i].diverged()) ++cs.divergent_trials;
        }
        if (parse_combo(cs.name).fusion == FusionMode::aa) {
            const WeightTrace trace = weight_trace(ensemble, i);
            cs.has_weight_trace = true;
            cs.weight_mean = trace.mean;
            cs.weight_variance = trace.variance;
        }
        summary.combos.push_back(std::move(cs));
    }
    return summary;
}

std::string format_double(double value) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.12g", value);
    return std::string(buf);
}

void write_summary_csv(const ExperimentSummary& summary, std::ostream& out) {
    out << "filter,metric,value\n";
    for (const ComboSummary& combo : summary.combos) {
        for (const std::string& metric : summary.metrics) {
            out << combo.name << ",armse_" << metric << "," << format_double(combo.armse.at(metric))
                << "\n";
        }
        out << combo.name << ",divergent_trials," << combo.divergent_trials << "\n";
    }
}

void write_per_step_csv(const ExperimentSummary& summary, std::ostream& out) {
    out << "filter,metric,step,value\n";
    for (const ComboSummary& combo : summary.combos) {
        for (const std::string& metric : summary.metrics) {
            const Eigen::VectorXd& series = combo.series.at(metric);
            for (Eigen::Index k = 0; k < series.size(); ++k) {
                out << combo.name << ",rmse_" << metric << "," << (k + 1) << ","
                    << format_double(series(k)) << "\n";
            }
        }
    }
}

void write_weight_trace_csv(const ExperimentSummary& summary, std::ostream& out) {
    out << "filter,step,mean,variance\n";
    for (const ComboSummary& combo : summary.combos) {
        if (!combo.has_weight_trace) continue;
        for (Eigen::Index k = 0; k < combo.weight_mean.size(); ++k) {
            out << combo.name << "," << (k + 1) << "," << format_double(combo.weight_mean(k)) << ","
                << format_double(combo.weight_variance(k)) << "\n";
        }
    }
}

}  // namespace fusionlab
