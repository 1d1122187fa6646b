#include <CLI11.hpp>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "fusionlab/common.hpp"
#include "fusionlab/fusion.hpp"
#include "fusionlab/random_instances.hpp"
#include "fusionlab/scenarios.hpp"
#include "fusionlab/serialization.hpp"
#include "fusionlab/weights.hpp"

namespace {

constexpr const char* kVersion = "fusionlab 1.0.0";

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitInvariant = 3;
constexpr int kExitHealth = 4;

/// Usage-level problem (bad flag combinations, unreadable files, schema
/// violations): exit 2, as opposed to invariant_error's exit 3.
struct usage_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Experiment-health problem (divergence rate too high): exit 4.
struct health_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class LogLevel { error = 0, info = 1, debug = 2 };

LogLevel log_level() {
    static const LogLevel level = [] {
        const char* env = std::getenv("FUSIONLAB_LOG");
        if (env == nullptr) return LogLevel::error;
        const std::string value(env);
        if (value == "error") return LogLevel::error;
        if (value == "info") return LogLevel::info;
        if (value == "debug") return LogLevel::debug;
        std::cerr << "fusionlab: ignoring unknown FUSIONLAB_LOG value '" << value
                  << "' (expected error|info|debug)\n";
        return LogLevel::error;
    }();
    return level;
}

void log_info(const std::string& msg) {
    if (log_level() >= LogLevel::info) std::cerr << "[info] " << msg << "\n";
}

void log_debug(const std::string& msg) {
    if (log_level() >= LogLevel::debug) std::cerr << "[debug] " << msg << "\n";
}

nlohmann::json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw usage_error("cannot open input file '" + path + "'");
    return nlohmann::json::parse(in);
}

std::vector<fusionlab::GaussianDensity> sources_from_json(const nlohmann::json& j) {
    if (!j.contains("sources")) throw usage_error("input is missing the \"sources\" array");
    std::vector<fusionlab::GaussianDensity> sources;
    for (const nlohmann::json& entry : j.at("sources")) {
        sources.push_back(fusionlab::density_from_json(entry));
    }
    return sources;
}

std::string utc_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return std::string(buf);
}

// ---------------------------------------------------------------------------
// fuse
// ---------------------------------------------------------------------------

struct FuseArgs {
    std::string input;
    std::string rule;
    double delta = -1.0;  // <0 = unset
};

int cmd_fuse(const FuseArgs& args) {
    using namespace fusionlab;
    const nlohmann::json in = load_json_file(args.input);
    const std::vector<GaussianDensity> sources = sources_from_json(in);

    std::string rule = args.rule;
    if (rule.empty() && in.contains("rule")) rule = in.at("rule").get<std::string>();
    if (rule.empty()) throw usage_error("no fusion rule given (--rule flag or \"rule\" field)");

    double delta = args.delta;
    if (delta < 0.0 && in.contains("delta")) delta = in.at("delta").get<double>();

    const auto weights = [&](double total) -> SimplexWeights {
        if (in.contains("weights")) return weights_from_json(in.at("weights"), total);
        Eigen::VectorXd w = Eigen::VectorXd::Constant(
            static_cast<Eigen::Index>(sources.size()),
            total / static_cast<double>(sources.size()));
        return SimplexWeights(std::move(w), total);
    };

    FusedPair fused = [&] {
        if (rule == "naive") return naive_fuse(sources);
        if (rule == "ga") return ga_fuse(sources, weights(1.0));
        if (rule == "ci") return ci_fuse(sources);
        if (rule == "ffcc") {
            if (delta < 0.0) throw usage_error("rule 'ffcc' requires --delta (or a \"delta\" field)");
            return ffcc_fuse(sources, weights(delta));
        }
        if (rule == "cu" || rule == "cu_max") return cu_fuse(sources, weights(1.0), CuBound::max);
        if (rule == "cu_min") return cu_fuse(sources, weights(1.0), CuBound::min);
        if (rule == "aa" || rule == "aa_merged") return aa_fuse_pairs(sources, weights(1.0));
        throw usage_error("unknown fusion rule '" + rule + "'");
    }();

    std::cout << to_json(fused).dump(2) << "\n";
    return kExitOk;
}

// ---------------------------------------------------------------------------
// weights
// ---------------------------------------------------------------------------

struct WeightsArgs {
    std::string input;
    std::string objective;
    bool fig2 = false;
};

int run_fig2_table() {
    using namespace fusionlab;
    const std::vector<GaussianDensity> sources = {
        GaussianDensity((Eigen::VectorXd(1) << 40.0).finished(),
                        (Eigen::MatrixXd(1, 1) << 400.0).finished()),
        GaussianDensity((Eigen::VectorXd(1) << 50.0).finished(),
                        (Eigen::MatrixXd(1, 1) << 200.0).finished()),
        GaussianDensity((Eigen::VectorXd(1) << 60.0).finished(),
                        (Eigen::MatrixXd(1, 1) << 100.0).finished()),
        GaussianDensity((Eigen::VectorXd(1) << 100.0).finished(),
                        (Eigen::MatrixXd(1, 1) << 400.0).finished())};
    const std::vector<std::pair<double, double>> targets = {
        {60.0, 200.0}, {70.0, 100.0}, {85.0, 150.0}, {110.0, 300.0}};

    std::printf("%-14s %-38s %-22s\n", "target", "weights", "merged");
    for (const auto& [mean, var] : targets) {
        const GaussianDensity target((Eigen::VectorXd(1) << mean).finished(),
                                     (Eigen::MatrixXd(1, 1) << var).finished());
        const WeightSolution sol = optimal_weights_gaussian(sources, target);
        const GaussianDensity merged = merged_moments(sources, sol.w.values());
        std::printf("N(%.0f, %.0f)   [%6.4f %6.4f %6.4f %6.4f]        N(%.2f, %.2f)\n", mean, var,
                    sol.w[0], sol.w[1], sol.w[2], sol.w[3], merged.mean()(0), merged.cov()(0, 0));
    }
    return kExitOk;
}

int cmd_weights(const WeightsArgs& args) {
    using namespace fusionlab;
    if (args.fig2) return run_fig2_table();
    if (args.input.empty()) throw usage_error("weights needs an input file (or --fig2)");

    const nlohmann::json in = load_json_file(args.input);
    const std::vector<GaussianDensity> sources = sources_from_json(in);

    std::string objective = args.objective;
    if (objective.empty() && in.contains("objective")) {
        objective = in.at("objective").get<std::string>();
    }
    if (objective.empty()) {
        throw usage_error("no objective given (--objective flag or \"objective\" field)");
    }

    WeightSolution solution = [&] {
        if (objective == "opt") {
            if (!in.contains("target")) throw usage_error("objective 'opt' requires a \"target\"");
            return optimal_weights_gaussian(sources, density_from_json(in.at("target")));
        }
        if (sources.size() < 2) {
            throw usage_error("objective '" + objective + "' needs at least 2 sources");
        }
        if (objective == "diversity") return suboptimal_weights_diversity(sources);
        if (objective == "bound") return bound_weights(sources);
        throw usage_error("unknown objective '" + objective + "' (expected opt|diversity|bound)");
    }();

    std::cout << to_json(solution).dump(2) << "\n";
    return kExitOk;
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

struct SimulateArgs {
    std::string config_path;
    std::string out_dir;
    std::uint64_t seed = 0;
    bool seed_set = false;
    int jobs = 1;
    std::string format = "csv";
};

void write_text_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw usage_error("cannot open output file '" + path.string() + "'");
    out << content;
    if (!out) throw usage_error("failed writing output file '" + path.string() + "'");
}

int cmd_simulate(const SimulateArgs& args) {
    using namespace fusionlab;
    ScenarioConfig config = [&] {
        try {
            return scenario_config_from_json(load_json_file(args.config_path));
        } catch (const invariant_error& e) {
            // Invalid configs are a usage problem, not a data invariant one.
            throw usage_error(std::string("invalid config: ") + e.what());
        }
    }();
    if (args.seed_set) config.seed = args.seed;
    log_info("scenario '" + to_string(config.kind) + "': " + std::to_string(config.trials) +
             " trials x " + std::to_string(config.horizon) + " steps, seed " +
             std::to_string(config.seed) + ", jobs " + std::to_string(args.jobs));

    const std::string started = utc_timestamp();
    const TrialEnsemble ensemble = run_trials(config, args.jobs);
    const ExperimentSummary summary = summarize(config, ensemble);
    log_debug("trials complete; writing outputs");

    const std::filesystem::path out_dir(args.out_dir);
    std::filesystem::create_directories(out_dir);

    std::ostringstream summary_csv;
    write_summary_csv(summary, summary_csv);
    std::ostringstream per_step_csv;
    write_per_step_csv(summary, per_step_csv);
    std::ostringstream weight_csv;
    write_weight_trace_csv(summary, weight_csv);

    const std::vector<std::pair<std::string, std::string>> outputs = {
        {"summary.csv", summary_csv.str()},
        {"summary.json", summary_to_json(summary).dump(2) + "\n"},
        {"per_step_rmse.csv", per_step_csv.str()},
        {"weight_trace.csv", weight_csv.str()},
    };
    for (const auto& [name, content] : outputs) write_text_file(out_dir / name, content);

    nlohmann::json manifest;
    manifest["artifact_version"] = kVersion;
    manifest["seed"] = config.seed;
    manifest["started_utc"] = started;
    manifest["finished_utc"] = utc_timestamp();
    manifest["config"] = to_json(config);
    nlohmann::json output_list = nlohmann::json::array();
    for (const auto& [name, content] : outputs) output_list.push_back(name);
    manifest["outputs"] = std::move(output_list);
    write_text_file(out_dir / "manifest.json", manifest.dump(2) + "\n");

    for (const auto& [name, content] : outputs) {
        std::error_code ec;
        const auto size = std::filesystem::file_size(out_dir / name, ec);
        if (ec || size == 0) {
            throw invariant_error("output file '" + name + "' missing or empty after write");
        }
    }

    if (args.format == "json") {
        std::cout << summary_to_json(summary).dump(2) << "\n";
    } else {
        std::cout << summary_csv.str();
    }

    // Health gate: fusion is supposed to keep filters alive; naive fusion is
    // the known-fragile baseline and is exempt.
    std::vector<std::string> sick;
    for (const ComboSummary& combo : summary.combos) {
        if (parse_combo(combo.name).fusion == FusionMode::nf) continue;
        if (2 * combo.divergent_trials > config.trials) {
            sick.push_back(combo.name + " diverged in " + std::to_string(combo.divergent_trials) +
                           "/" + std::to_string(config.trials) + " trials");
        }
    }
    if (!sick.empty()) {
        std::string report = "experiment health failure:";
        for (const std::string& line : sick) report += "\n  " + line;
        throw health_error(report);
    }
    return kExitOk;
}

// ---------------------------------------------------------------------------
// chain
// ---------------------------------------------------------------------------

struct ChainArgs {
    int n = 1000;
    int dim = 2;
    std::uint64_t seed = 1;
    std::string format = "text";
};

int cmd_chain(const ChainArgs& args) {
    using namespace fusionlab;
    if (args.n < 1) throw usage_error("chain needs n >= 1");

    std::vector<std::string> link_names;
    std::vector<int> passes;
    for (int i = 0; i < args.n; ++i) {
        RandomStream rng = RandomStream::derive(args.seed, "chain", static_cast<std::uint64_t>(i));
        const std::size_t count = 2 + static_cast<std::size_t>(i % 3);
        const std::vector<GaussianDensity> sources = random_gaussian_set(rng, args.dim, count);
        const SimplexWeights w = random_interior_weights(rng, static_cast<Eigen::Index>(count));
        const ChainReport report = chain_check(sources, w);
        if (link_names.empty()) {
            for (const ChainLink& link : report.links) link_names.push_back(link.name);
            passes.assign(link_names.size(), 0);
        }
        for (std::size_t l = 0; l < report.links.size(); ++l) {
            if (report.links[l].ok) ++passes[l];
        }
    }

    bool all_pass = true;
    for (std::size_t l = 0; l < link_names.size(); ++l) {
        if (passes[l] != args.n) all_pass = false;
    }

    if (args.format == "json") {
        nlohmann::json links = nlohmann::json::array();
        for (std::size_t l = 0; l < link_names.size(); ++l) {
            links.push_back({{"name", link_names[l]}, {"passes", passes[l]}});
        }
        const nlohmann::json out = {
            {"n", args.n}, {"dim", args.dim}, {"links", std::move(links)}, {"all_pass", all_pass}};
        std::cout << out.dump(2) << "\n";
    } else {
        for (std::size_t l = 0; l < link_names.size(); ++l) {
            std::printf("%-22s %d/%d\n", link_names[l].c_str(), passes[l], args.n);
        }
        std::printf("all links: %s\n", all_pass ? "pass" : "FAIL");
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    log_level();  // surface FUSIONLAB_LOG problems once, on every command path

    CLI::App app{"Conservative density fusion: rules, fusing-weight design, and the two-sensor "
                 "tracking benchmark"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kVersion);

    FuseArgs fuse_args;
    CLI::App* fuse = app.add_subcommand("fuse", "Fuse Gaussian sources read from a JSON file");
    fuse->add_option("input", fuse_args.input, "JSON file: {sources, weights?, rule?, delta?}")
        ->required();
    fuse->add_option("--rule", fuse_args.rule,
                     "naive|ga|ci|ffcc|cu|cu_max|cu_min|aa (overrides the input's \"rule\")");
    fuse->add_option("--delta", fuse_args.delta, "FFCC total weight in (0, 1]");

    WeightsArgs weights_args;
    CLI::App* weights =
        app.add_subcommand("weights", "Design fusing weights for Gaussian sources");
    weights->add_option("input", weights_args.input,
                        "JSON file: {sources, target?, objective?}");
    weights->add_option("--objective", weights_args.objective, "opt|diversity|bound");
    weights->add_flag("--fig2", weights_args.fig2,
                      "Print the four bundled weight-design cases as a table");

    SimulateArgs sim_args;
    CLI::App* simulate =
        app.add_subcommand("simulate", "Run a tracking experiment from a scenario config");
    simulate->add_option("config", sim_args.config_path, "Scenario config JSON")->required();
    simulate->add_option("--out", sim_args.out_dir, "Output directory")->required();
    simulate->add_option("--seed", sim_args.seed, "Master seed (overrides the config)")
        ->each([&](const std::string&) { sim_args.seed_set = true; });
    simulate->add_option("--jobs", sim_args.jobs, "Worker threads for trials")
        ->check(CLI::Range(1, 256));
    simulate->add_option("--format", sim_args.format, "Stdout summary format")
        ->check(CLI::IsMember({"csv", "json"}));

    ChainArgs chain_args;
    CLI::App* chain =
        app.add_subcommand("chain", "Verify conservative fusion chains on random instances");
    chain->add_option("--n", chain_args.n, "Number of random instances")->check(CLI::Range(1, 1000000));
    chain->add_option("--dim", chain_args.dim, "State dimension")
        ->required()
        ->check(CLI::IsMember({1, 2, 4}));
    chain->add_option("--seed", chain_args.seed, "Master seed");
    chain->add_option("--format", chain_args.format, "Report format")
        ->check(CLI::IsMember({"text", "json"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (fuse->parsed()) return cmd_fuse(fuse_args);
        if (weights->parsed()) return cmd_weights(weights_args);
        if (simulate->parsed()) return cmd_simulate(sim_args);
        if (chain->parsed()) return cmd_chain(chain_args);
        return kExitUsage;
    } catch (const usage_error& e) {
        std::cerr << "fusionlab: " << e.what() << "\n";
        return kExitUsage;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "fusionlab: JSON error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const health_error& e) {
        std::cerr << "fusionlab: " << e.what() << "\n";
        return kExitHealth;
    } catch (const fusionlab::invariant_error& e) {
        std::cerr << "fusionlab: invariant violation: " << e.what() << "\n";
        return kExitInvariant;
    } catch (const std::exception& e) {
        std::cerr << "fusionlab: " << e.what() << "\n";
        return kExitInvariant;
    }
}
