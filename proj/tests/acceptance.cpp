// Acceptance harness: one PASS/FAIL line per shipped guarantee, exit 0 only
// if every criterion holds. Invoked as:
//   fusionlab_acceptance <path-to-fusionlab-cli> <path-to-configs-dir>
#include <sys/wait.h>

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <json.hpp>
#include <sstream>
#include <string>
#include <vector>

#include "fusionlab/common.hpp"
#include "fusionlab/filters.hpp"
#include "fusionlab/fusion.hpp"
#include "fusionlab/gaussian.hpp"
#include "fusionlab/models.hpp"
#include "fusionlab/quadrature.hpp"
#include "fusionlab/random_instances.hpp"
#include "fusionlab/rng.hpp"
#include "fusionlab/scenarios.hpp"
#include "fusionlab/serialization.hpp"
#include "fusionlab/weights.hpp"

namespace {

using namespace fusionlab;

std::string g_cli;
std::string g_configs;

GaussianDensity g1(double mean, double var) {
    return GaussianDensity((Eigen::VectorXd(1) << mean).finished(),
                           (Eigen::MatrixXd(1, 1) << var).finished());
}

std::string fmt(double x) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6g", x);
    return buf;
}

/// Runs one criterion; the body returns an empty string on success and a
/// failure description otherwise. Prints the PASS/FAIL line immediately so
/// progress is visible while the long benchmarks run.
bool run_criterion(const std::string& name, double budget_seconds,
                   const std::function<std::string()>& body) {
    const auto t0 = std::chrono::steady_clock::now();
    std::string detail;
    try {
        detail = body();
    } catch (const std::exception& e) {
        detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (detail.empty() && budget_seconds > 0.0 && secs > budget_seconds) {
        detail = "runtime " + fmt(secs) + " s exceeds budget " + fmt(budget_seconds) + " s";
    }
    if (detail.empty()) {
        std::printf("[PASS] %-46s (%7.2f s)\n", name.c_str(), secs);
    } else {
        std::printf("[FAIL] %-46s (%7.2f s): %s\n", name.c_str(), secs, detail.c_str());
    }
    std::fflush(stdout);
    return detail.empty();
}

// ---------------------------------------------------------------------------
// 1. Four-source optimal weight recovery
// ---------------------------------------------------------------------------

std::string criterion_weight_recovery() {
    const std::vector<GaussianDensity> sources = {g1(40, 400), g1(50, 200), g1(60, 100),
                                                  g1(100, 400)};
    struct Case {
        double target_mean, target_var;
        std::array<double, 4> w;
        double merged_mean, merged_var;
    };
    const std::vector<Case> cases = {
        {60, 200, {0.0256, 0.0855, 0.8547, 0.0342}, 60.00, 200.00},
        {70, 100, {0.0, 0.0, 0.9660, 0.0340}, 61.36, 162.82},
        {85, 150, {0.0, 0.0, 0.2738, 0.7262}, 89.05, 635.98},
        {110, 300, {0.0, 0.0, 0.0, 1.0}, 100.00, 400.00},
    };
    std::ostringstream fail;
    for (const Case& c : cases) {
        const WeightSolution sol = optimal_weights_gaussian(sources, g1(c.target_mean, c.target_var));
        for (int i = 0; i < 4; ++i) {
            if (std::abs(sol.w[i] - c.w[i]) > 0.02) {
                fail << "target N(" << c.target_mean << "," << c.target_var << ") w" << i << "="
                     << fmt(sol.w[i]) << " expected " << fmt(c.w[i]) << "; ";
            }
        }
        const GaussianDensity merged = merged_moments(sources, sol.w.values());
        if (std::abs(merged.mean()(0) - c.merged_mean) > 0.5) {
            fail << "target N(" << c.target_mean << "," << c.target_var
                 << ") merged mean=" << fmt(merged.mean()(0)) << " expected "
                 << fmt(c.merged_mean) << "; ";
        }
        if (std::abs(merged.cov()(0, 0) - c.merged_var) > 0.03 * c.merged_var) {
            fail << "target N(" << c.target_mean << "," << c.target_var
                 << ") merged var=" << fmt(merged.cov()(0, 0)) << " expected "
                 << fmt(c.merged_var) << "; ";
        }
    }
    return fail.str();
}

// ---------------------------------------------------------------------------
// 2. Conservative chain on random instances
// ---------------------------------------------------------------------------

std::string criterion_chain() {
    for (const int dim : {1, 2, 4}) {
        for (int i = 0; i < 1000; ++i) {
            RandomStream rng =
                RandomStream::derive(20250825 + static_cast<std::uint64_t>(dim), "chain",
                                     static_cast<std::uint64_t>(i));
            const std::size_t count = 2 + static_cast<std::size_t>(i % 3);
            const std::vector<GaussianDensity> sources = random_gaussian_set(rng, dim, count);
            const SimplexWeights w = random_interior_weights(rng, static_cast<Eigen::Index>(count));
            const ChainReport report = chain_check(sources, w);
            if (!report.all_ok()) {
                std::string broken;
                for (const ChainLink& link : report.links) {
                    if (!link.ok) broken += link.name + " ";
                }
                return "dim " + std::to_string(dim) + " instance " + std::to_string(i) +
                       " broke link(s): " + broken;
            }
        }
    }
    return "";
}

// ---------------------------------------------------------------------------
// 3. Mixture divergence identity and upper bound
// ---------------------------------------------------------------------------

std::string criterion_mixture_identity() {
    RandomStream rng(424242);
    std::ostringstream fail;
    for (int k = 0; k < 100; ++k) {
        const int n = 2 + static_cast<int>(rng.next_u64() % 3);
        std::vector<MixtureComponent> comps;
        Eigen::VectorXd raw(n);
        for (int i = 0; i < n; ++i) raw(i) = 0.2 + rng.uniform();
        raw /= raw.sum();
        for (int i = 0; i < n; ++i) {
            comps.push_back(
                {raw(i), g1(6.0 * rng.normal(), std::exp(0.8 * rng.normal()))});
        }
        const GaussianMixture mix(comps);
        const GaussianDensity target = g1(4.0 * rng.normal(), 2.0 * std::exp(0.5 * rng.normal()));
        const GaussianMixture target_mix = GaussianMixture::single(target);

        const double lhs = kl_mixture_quadrature(mix, target_mix);
        double rhs = 0.0;
        double jensen = 0.0;
        for (const MixtureComponent& c : comps) {
            const double to_target = kl_gaussian(c.density, target);
            const double to_mix = kl_mixture_quadrature(GaussianMixture::single(c.density), mix);
            rhs += c.weight * (to_target - to_mix);
            jensen += c.weight * to_target;
        }
        if (std::abs(lhs - rhs) > 1e-5) {
            fail << "case " << k << ": identity gap " << fmt(std::abs(lhs - rhs)) << "; ";
        }
        if (lhs > jensen + 1e-9) {
            fail << "case " << k << ": bound violated, lhs=" << fmt(lhs)
                 << " > bound=" << fmt(jensen) << "; ";
        }
        // Distinct components must leave the bound strictly slack.
        if (jensen - lhs < 1e-7) {
            fail << "case " << k << ": bound tight for non-identical components (slack "
                 << fmt(jensen - lhs) << "); ";
        }
    }

    // Equality is attained exactly when every component coincides.
    const GaussianDensity shared = g1(1.0, 2.0);
    const GaussianMixture identical({{0.3, shared}, {0.7, shared}});
    const GaussianDensity target = g1(-1.0, 3.0);
    const double lhs = kl_mixture_quadrature(identical, GaussianMixture::single(target));
    const double bound = kl_gaussian(shared, target);
    if (std::abs(lhs - bound) > 1e-6) {
        fail << "identical components: bound should be tight, gap " << fmt(std::abs(lhs - bound));
    }
    return fail.str();
}

// ---------------------------------------------------------------------------
// 4. Equal-weight average of independent unbiased estimators
// ---------------------------------------------------------------------------

std::string criterion_average_mse() {
    RandomStream rng(55);
    const double sigma = 2.0;
    const int trials = 100000;
    double sq_err = 0.0;
    for (int t = 0; t < trials; ++t) {
        const double truth = 5.0 * rng.normal();
        double avg = 0.0;
        for (int i = 0; i < 4; ++i) avg += 0.25 * (truth + sigma * rng.normal());
        sq_err += (avg - truth) * (avg - truth);
    }
    const double mse = sq_err / trials;
    const double expected = sigma * sigma / 4.0;
    if (mse < 0.9 * expected || mse > 1.1 * expected) {
        return "empirical MSE " + fmt(mse) + " outside [0.9,1.1]x" + fmt(expected);
    }
    return "";
}

// ---------------------------------------------------------------------------
// 5/6. Tracking benchmarks
// ---------------------------------------------------------------------------

ScenarioConfig load_config(const std::string& name) {
    const std::string path = g_configs + "/" + name;
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config " + path);
    return scenario_config_from_json(nlohmann::json::parse(in));
}

double armse(const ExperimentSummary& summary, const std::string& combo,
             const std::string& metric) {
    for (const ComboSummary& c : summary.combos) {
        if (c.name == combo) return c.armse.at(metric);
    }
    throw std::runtime_error("combo " + combo + " missing from summary");
}

const ComboSummary& combo_summary(const ExperimentSummary& summary, const std::string& combo) {
    for (const ComboSummary& c : summary.combos) {
        if (c.name == combo) return c;
    }
    throw std::runtime_error("combo " + combo + " missing from summary");
}

std::string criterion_linear_benchmark(const ExperimentSummary& summary) {
    std::ostringstream fail;
    const double aa_pos = armse(summary, "kf_aa", "position");
    const double aa_vel = armse(summary, "kf_aa", "velocity");
    if (std::abs(aa_pos - 18.57) > 1.5) {
        fail << "kf_aa position ARMSE " << fmt(aa_pos) << " outside 18.57+-1.5; ";
    }
    if (std::abs(aa_vel - 10.91) > 1.0) {
        fail << "kf_aa velocity ARMSE " << fmt(aa_vel) << " outside 10.91+-1.0; ";
    }

    // Ordering among the fusion rules of each stack: naive product worst,
    // covariance-union second worst.
    for (const std::string stack : {"kf", "sir"}) {
        const double nf = armse(summary, stack + "_nf", "position");
        const double cu = armse(summary, stack + "_cu", "position");
        const double aa = armse(summary, stack + "_aa", "position");
        const double ci = armse(summary, stack + "_ci", "position");
        if (!(nf > cu)) fail << stack << ": NF " << fmt(nf) << " not worst (CU " << fmt(cu) << "); ";
        if (!(cu > aa && cu > ci)) {
            fail << stack << ": CU " << fmt(cu) << " not second worst (AA " << fmt(aa) << ", CI "
                 << fmt(ci) << "); ";
        }
    }

    const double ic = armse(summary, "kf_ic", "position");
    const double ci = armse(summary, "kf_ci", "position");
    if (aa_pos > 1.1 * ic) fail << "kf_aa " << fmt(aa_pos) << " > 1.1 x kf_ic " << fmt(ic) << "; ";
    if (ci > 1.1 * ic) fail << "kf_ci " << fmt(ci) << " > 1.1 x kf_ic " << fmt(ic) << "; ";
    for (const ComboSummary& c : summary.combos) {
        if (c.name.rfind("kf_", 0) == 0 && c.name != "kf_ic") {
            if (c.armse.at("position") <= ic) {
                fail << "kf_ic " << fmt(ic) << " not best among KF variants (" << c.name << " "
                     << fmt(c.armse.at("position")) << "); ";
            }
        }
    }
    return fail.str();
}

std::string criterion_ct_benchmark(const ExperimentSummary& summary) {
    std::ostringstream fail;
    const double ckf_aa = armse(summary, "ckf_aa", "position");
    const double ckf_nf = armse(summary, "ckf_nf", "position");
    if (!(ckf_nf > 5.0 * ckf_aa)) {
        fail << "ckf_nf " << fmt(ckf_nf) << " not > 5 x ckf_aa " << fmt(ckf_aa) << "; ";
    }
    if (std::abs(ckf_aa - 12.42) > 2.5) {
        fail << "ckf_aa position ARMSE " << fmt(ckf_aa) << " outside 12.42+-2.5; ";
    }
    const double sir_ic = armse(summary, "sir_ic", "position");
    const double sir_aa = armse(summary, "sir_aa", "position");
    if (!(sir_ic > sir_aa)) {
        fail << "sir_ic " << fmt(sir_ic) << " not > sir_aa " << fmt(sir_aa) << "; ";
    }
    for (const std::string stack : {"ckf", "sir"}) {
        const double nf = armse(summary, stack + "_nf", "position");
        const double cu = armse(summary, stack + "_cu", "position");
        const double aa = armse(summary, stack + "_aa", "position");
        const double ci = armse(summary, stack + "_ci", "position");
        if (!(std::max(aa, ci) <= cu && cu <= nf)) {
            fail << stack << ": CU " << fmt(cu) << " not between max(AA,CI) "
                 << fmt(std::max(aa, ci)) << " and NF " << fmt(nf) << "; ";
        }
    }
    return fail.str();
}

std::string criterion_weight_traces(const ExperimentSummary& linear,
                                    const ExperimentSummary& ct) {
    std::ostringstream fail;
    const ComboSummary& kf_aa = combo_summary(linear, "kf_aa");
    if (!kf_aa.has_weight_trace || kf_aa.weight_mean.size() == 0) {
        return "kf_aa carries no weight trace";
    }
    const double avg = kf_aa.weight_mean.mean();
    if (!(avg > 0.5 && avg < 0.7)) {
        fail << "linear kf_aa time-averaged weight " << fmt(avg) << " outside (0.5, 0.7); ";
    }
    for (const std::string name : {"ckf_aa", "sir_aa"}) {
        const ComboSummary& combo = combo_summary(ct, name);
        if (!combo.has_weight_trace || combo.weight_mean.size() == 0) {
            fail << name << " carries no weight trace; ";
            continue;
        }
        if (!(combo.weight_mean.minCoeff() > 0.5)) {
            fail << name << " per-step weight mean dips to " << fmt(combo.weight_mean.minCoeff())
                 << " <= 0.5; ";
        }
    }
    return fail.str();
}

// ---------------------------------------------------------------------------
// 8. Oracle equivalences
// ---------------------------------------------------------------------------

std::string criterion_oracles() {
    std::ostringstream fail;

    // Cubature filter coincides with the Kalman filter on a linear model.
    LinearGaussianModel model;
    model.F = (Eigen::MatrixXd(2, 2) << 1, 1, 0, 1).finished();
    model.G = (Eigen::MatrixXd(2, 1) << 0.5, 1).finished();
    model.Qu = (Eigen::MatrixXd(1, 1) << 0.04).finished();
    model.H = (Eigen::MatrixXd(1, 2) << 1, 0).finished();
    model.R = (Eigen::MatrixXd(1, 1) << 4.0).finished();
    model.check();
    const NonlinearModel nmodel = as_nonlinear(model);

    RandomStream rng(7);
    Eigen::VectorXd truth = Eigen::VectorXd::Zero(2);
    GaussianDensity kf_density(Eigen::VectorXd::Zero(2), Eigen::MatrixXd::Identity(2, 2));
    GaussianDensity ckf_density = kf_density;
    double max_gap = 0.0;
    for (int t = 0; t < 100; ++t) {
        truth = model.F * truth + model.G * (0.2 * rng.normal());
        const Eigen::VectorXd y = model.H * truth + 2.0 * rng.normal_vector(1);
        kf_density = kf_step(kf_density, model, y);
        ckf_density = ckf_step(ckf_density, nmodel, y);
        max_gap = std::max(max_gap,
                           (kf_density.mean() - ckf_density.mean()).cwiseAbs().maxCoeff());
        max_gap = std::max(max_gap,
                           (kf_density.cov() - ckf_density.cov()).cwiseAbs().maxCoeff());
    }
    if (max_gap > 1e-8) fail << "CKF vs KF max gap " << fmt(max_gap) << " > 1e-8; ";

    // Sequential two-sensor corrector equals the batch stacked update.
    const GaussianDensity prior((Eigen::VectorXd(2) << 1, 2).finished(),
                                (Eigen::MatrixXd(2, 2) << 4, 1, 1, 3).finished());
    LinearGaussianModel m1 = model;
    m1.H = (Eigen::MatrixXd(1, 2) << 1, 0).finished();
    m1.R = (Eigen::MatrixXd(1, 1) << 2.0).finished();
    LinearGaussianModel m2 = model;
    m2.H = (Eigen::MatrixXd(1, 2) << 0.5, 1).finished();
    m2.R = (Eigen::MatrixXd(1, 1) << 1.0).finished();
    const Eigen::VectorXd y1 = (Eigen::VectorXd(1) << 1.4).finished();
    const Eigen::VectorXd y2 = (Eigen::VectorXd(1) << 2.9).finished();

    LinearGaussianModel stacked = model;
    stacked.H = (Eigen::MatrixXd(2, 2) << 1, 0, 0.5, 1).finished();
    stacked.R = (Eigen::MatrixXd(2, 2) << 2, 0, 0, 1).finished();
    const Eigen::VectorXd y_stacked = (Eigen::VectorXd(2) << 1.4, 2.9).finished();

    // ic_update runs predict + both correctors; the batch reference stacks
    // the two sensors into one measurement of the same predicted density.
    const GaussianDensity seq = ic_update(prior, m1, m2, y1, y2);
    const GaussianDensity batch = kf_update(kf_predict(prior, stacked), stacked, y_stacked);
    const double ic_gap =
        std::max((seq.mean() - batch.mean()).cwiseAbs().maxCoeff(),
                 (seq.cov() - batch.cov()).cwiseAbs().maxCoeff());
    if (ic_gap > 1e-10) fail << "sequential vs batch update gap " << fmt(ic_gap) << " > 1e-10; ";

    // Pairwise arithmetic fusion is exactly the moment-matched mixture.
    RandomStream rng2(99);
    const std::vector<GaussianDensity> sources = random_gaussian_set(rng2, 2, 3);
    const SimplexWeights w = random_interior_weights(rng2, 3);
    const FusedPair fused = aa_fuse_pairs(sources, w);
    std::vector<MixtureComponent> comps;
    for (std::size_t i = 0; i < sources.size(); ++i) {
        comps.push_back({w[static_cast<Eigen::Index>(i)], sources[i]});
    }
    const GaussianDensity matched = moment_match(GaussianMixture(comps));
    const bool mean_same = (fused.estimate.mean().array() == matched.mean().array()).all();
    const bool cov_same = (fused.estimate.cov().array() == matched.cov().array()).all();
    if (!mean_same || !cov_same) fail << "pairwise fusion != moment-matched mixture (bitwise); ";

    // Max-min weights for two scalar sources equalize the divergences.
    const std::vector<GaussianDensity> pair = {g1(0, 1), g1(3, 2)};
    double lo = 1e-6, hi = 1.0 - 1e-6;
    const auto gap_at = [&](double w1) {
        const EqualDivergenceReport rep = equal_divergence_check(
            pair, SimplexWeights((Eigen::VectorXd(2) << w1, 1.0 - w1).finished()));
        return rep.divergences(0) - rep.divergences(1);
    };
    const double glo = gap_at(lo);
    for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (lo + hi);
        if ((gap_at(mid) > 0) == (glo > 0)) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    const EqualDivergenceReport rep = equal_divergence_check(
        pair, SimplexWeights((Eigen::VectorXd(2) << 0.5 * (lo + hi), 1.0 - 0.5 * (lo + hi))
                                 .finished()));
    if (!(rep.spread < 1e-3)) {
        fail << "equal-divergence spread " << fmt(rep.spread) << " not < 1e-3; ";
    }
    return fail.str();
}

// ---------------------------------------------------------------------------
// 9. Byte-identical reruns through the CLI
// ---------------------------------------------------------------------------

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

int run_cli_simulate(const std::string& out_dir, const std::string& jobs) {
    const std::string cmd = "'" + g_cli + "' simulate '" + g_configs +
                            "/linear.json' --out '" + out_dir + "' --jobs " + jobs +
                            " > /dev/null 2>'" + out_dir + ".err'";
    const int raw = std::system(cmd.c_str());
    return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
}

std::string criterion_determinism() {
    char templ[] = "/tmp/fusionlab_accept_XXXXXX";
    const char* made = mkdtemp(templ);
    if (made == nullptr) return "mkdtemp failed";
    const std::string base(made);

    const std::vector<std::pair<std::string, std::string>> runs = {
        {base + "/a", "1"}, {base + "/b", "1"}, {base + "/c", "8"}};
    for (const auto& [dir, jobs] : runs) {
        const int code = run_cli_simulate(dir, jobs);
        if (code != 0) {
            return "simulate (--jobs " + jobs + ") exited " + std::to_string(code) + ": " +
                   slurp(dir + ".err");
        }
    }
    for (const std::string name : {"summary.csv", "per_step_rmse.csv", "weight_trace.csv"}) {
        const std::string a = slurp(base + "/a/" + name);
        if (a.empty()) return name + " empty after simulate";
        if (a != slurp(base + "/b/" + name)) return name + " differs across identical reruns";
        if (a != slurp(base + "/c/" + name)) return name + " differs between --jobs 1 and --jobs 8";
    }
    return "";
}

}  // namespace

int main(int argc, char** argv) {
    if (argc < 3) {
        std::fprintf(stderr, "usage: fusionlab_acceptance <cli-path> <configs-dir>\n");
        return 1;
    }
    g_cli = argv[1];
    g_configs = argv[2];

    int passed = 0;
    int total = 0;
    const auto tally = [&](bool ok) {
        ++total;
        if (ok) ++passed;
    };

    tally(run_criterion("four-source optimal weight recovery", 10.0, criterion_weight_recovery));
    tally(run_criterion("conservative chain, 3000 random instances", 30.0, criterion_chain));
    tally(run_criterion("mixture divergence identity and bound", 60.0, criterion_mixture_identity));
    tally(run_criterion("equal-weight average of four estimators", 10.0, criterion_average_mse));

    ExperimentSummary linear_summary;
    ExperimentSummary ct_summary;
    tally(run_criterion("linear two-sensor benchmark", 300.0, [&] {
        const ScenarioConfig config = load_config("linear.json");
        linear_summary = summarize(config, run_trials(config, 1));
        return criterion_linear_benchmark(linear_summary);
    }));
    tally(run_criterion("coordinated-turn two-sensor benchmark", 900.0, [&] {
        const ScenarioConfig config = load_config("coordinated_turn.json");
        ct_summary = summarize(config, run_trials(config, 1));
        return criterion_ct_benchmark(ct_summary);
    }));
    tally(run_criterion("fusing-weight traces", 0.0, [&] {
        if (linear_summary.combos.empty() || ct_summary.combos.empty()) {
            return std::string("benchmark summaries unavailable (earlier criterion failed)");
        }
        return criterion_weight_traces(linear_summary, ct_summary);
    }));
    tally(run_criterion("oracle equivalences", 0.0, criterion_oracles));
    tally(run_criterion("byte-identical simulate reruns", 0.0, criterion_determinism));

    std::printf("%d/%d acceptance criteria passed\n", passed, total);
    return passed == total ? 0 : 1;
}
