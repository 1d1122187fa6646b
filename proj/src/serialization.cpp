#include "fusionlab/serialization.hpp"

#include <cmath>

#include "fusionlab/common.hpp"

namespace fusionlab {

namespace {

constexpr double kDegToRad = 3.14159265358979323846 / 180.0;

nlohmann::json vector_to_json(const Eigen::VectorXd& v) {
    nlohmann::json arr = nlohmann::json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
    return arr;
}

nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        nlohmann::json row = nlohmann::json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

Eigen::VectorXd vector_from_json(const nlohmann::json& j) {
    if (!j.is_array()) throw invariant_error("JSON vector: expected an array");
    Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
    Eigen::Index i = 0;
    for (const nlohmann::json& x : j) v(i++) = x.get<double>();
    return v;
}

Eigen::MatrixXd matrix_from_json(const nlohmann::json& j) {
    if (!j.is_array() || j.empty()) throw invariant_error("JSON matrix: expected rows");
    const Eigen::Index rows = static_cast<Eigen::Index>(j.size());
    const Eigen::Index cols = static_cast<Eigen::Index>(j.front().size());
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        const nlohmann::json& row = j.at(static_cast<std::size_t>(r));
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
            throw invariant_error("JSON matrix: ragged rows");
        }
        for (Eigen::Index c = 0; c < cols; ++c) {
            m(r, c) = row.at(static_cast<std::size_t>(c)).get<double>();
        }
    }
    return m;
}

}  // namespace

nlohmann::json to_json(const GaussianDensity& density) {
    return {{"mean", vector_to_json(density.mean())}, {"cov", matrix_to_json(density.cov())}};
}

GaussianDensity density_from_json(const nlohmann::json& j) {
    return GaussianDensity(vector_from_json(j.at("mean")), matrix_from_json(j.at("cov")));
}

nlohmann::json to_json(const GaussianMixture& mixture) {
    nlohmann::json comps = nlohmann::json::array();
    for (const MixtureComponent& c : mixture.components()) {
        nlohmann::json entry = to_json(c.density);
        entry["w"] = c.weight;
        comps.push_back(std::move(entry));
    }
    return {{"components", std::move(comps)}};
}

GaussianMixture mixture_from_json(const nlohmann::json& j) {
    std::vector<MixtureComponent> comps;
    for (const nlohmann::json& entry : j.at("components")) {
        comps.push_back({entry.at("w").get<double>(), density_from_json(entry)});
    }
    return GaussianMixture(std::move(comps));
}

nlohmann::json to_json(const SimplexWeights& w) { return vector_to_json(w.values()); }

SimplexWeights weights_from_json(const nlohmann::json& j, double total) {
    return SimplexWeights(vector_from_json(j), total);
}

nlohmann::json to_json(const FusedPair& fused) {
    return {{"rule", to_string(fused.rule)},
            {"estimate", to_json(fused.estimate)},
            {"weights_used", to_json(fused.weights_used)}};
}

nlohmann::json to_json(const WeightSolution& solution) {
    nlohmann::json trace = nlohmann::json::array();
    for (const auto& [w, value] : solution.solver_trace) {
        trace.push_back({{"w", vector_to_json(w)}, {"value", value}});
    }
    return {{"objective", to_string(solution.objective_kind)},
            {"w", to_json(solution.w)},
            {"objective_value", solution.objective_value},
            {"solver_trace", std::move(trace)}};
}

nlohmann::json to_json(const ChainReport& report) {
    nlohmann::json links = nlohmann::json::array();
    for (const ChainLink& link : report.links) {
        links.push_back(
            {{"name", link.name}, {"lhs", link.lhs}, {"rhs", link.rhs}, {"ok", link.ok}});
    }
    return {{"traces",
             {{"naive", report.tr_naive},
              {"min_source", report.tr_min_source},
              {"cu_min", report.tr_cu_min},
              {"aa", report.tr_aa},
              {"cu_max", report.tr_cu_max},
              {"ci", report.tr_ci},
              {"ffcc", report.tr_ffcc}}},
            {"links", std::move(links)},
            {"all_ok", report.all_ok()}};
}

ScenarioConfig scenario_config_from_json(const nlohmann::json& j) {
    ScenarioConfig config;
    config.kind = parse_scenario_kind(j.at("kind").get<std::string>());
    if (j.contains("horizon")) config.horizon = j.at("horizon").get<int>();
    if (j.contains("trials")) config.trials = j.at("trials").get<int>();
    if (j.contains("seed")) config.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("particle_count")) config.particle_count = j.at("particle_count").get<int>();
    if (j.contains("ffcc_delta")) config.ffcc_delta = j.at("ffcc_delta").get<double>();
    if (j.contains("filters")) {
        for (const nlohmann::json& name : j.at("filters")) {
            config.filters.push_back(parse_combo(name.get<std::string>()));
        }
    }
    if (config.kind == ScenarioKind::linear) {
        if (j.contains("process_noise_var")) {
            config.process_noise_var = j.at("process_noise_var").get<double>();
        }
        if (j.contains("sensors")) {
            for (const nlohmann::json& s : j.at("sensors")) {
                config.linear_sensors.push_back({s.at("noise_std").get<double>()});
            }
        }
    } else {
        if (j.contains("q1")) config.q1 = j.at("q1").get<double>();
        if (j.contains("turn_noise_var")) {
            config.turn_noise_var = j.at("turn_noise_var").get<double>();
        }
        if (j.contains("sensors")) {
            for (const nlohmann::json& s : j.at("sensors")) {
                RangeBearingSensor sensor;
                const Eigen::VectorXd pos = vector_from_json(s.at("position"));
                if (pos.size() != 2) {
                    throw invariant_error("scenario config: sensor position must have 2 entries");
                }
                sensor.position = pos;
                sensor.range_std = s.at("range_std").get<double>();
                sensor.bearing_std = s.at("bearing_std_deg").get<double>() * kDegToRad;
                config.ct_sensors.push_back(sensor);
            }
        }
    }
    if (j.contains("mu0")) config.mu0 = vector_from_json(j.at("mu0"));
    if (j.contains("p0_diag")) config.p0_diag = vector_from_json(j.at("p0_diag"));
    config.apply_defaults();
    config.check();
    return config;
}

nlohmann::json to_json(const ScenarioConfig& config) {
    nlohmann::json j;
    j["kind"] = to_string(config.kind);
    j["horizon"] = config.horizon;
    j["trials"] = config.trials;
    j["seed"] = config.seed;
    j["particle_count"] = config.particle_count;
    j["ffcc_delta"] = config.ffcc_delta;
    nlohmann::json filters = nlohmann::json::array();
    for (const FilterCombo& combo : config.filters) filters.push_back(combo.name());
    j["filters"] = std::move(filters);
    nlohmann::json sensors = nlohmann::json::array();
    if (config.kind == ScenarioKind::linear) {
        j["process_noise_var"] = config.process_noise_var;
        for (const LinearSensor& s : config.linear_sensors) {
            sensors.push_back({{"noise_std", s.noise_std}});
        }
    } else {
        j["q1"] = config.q1;
        j["turn_noise_var"] = config.turn_noise_var;
        for (const RangeBearingSensor& s : config.ct_sensors) {
            sensors.push_back({{"position", vector_to_json(s.position)},
                               {"range_std", s.range_std},
                               {"bearing_std_deg", s.bearing_std / kDegToRad}});
        }
    }
    j["sensors"] = std::move(sensors);
    j["mu0"] = vector_to_json(config.mu0);
    j["p0_diag"] = vector_to_json(config.p0_diag);
    return j;
}

nlohmann::json summary_to_json(const ExperimentSummary& summary) {
    nlohmann::json combos = nlohmann::json::array();
    for (const ComboSummary& combo : summary.combos) {
        nlohmann::json entry;
        entry["filter"] = combo.name;
        for (const std::string& metric : summary.metrics) {
            entry["armse_" + metric] = combo.armse.at(metric);
        }
        entry["divergent_trials"] = combo.divergent_trials;
        combos.push_back(std::move(entry));
    }
    return {{"metrics", summary.metrics}, {"filters", std::move(combos)}};
}

}  // namespace fusionlab
