#include "fusionlab/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fusionlab/simplex_search.hpp"

namespace fusionlab {

namespace {

void check_sources(const std::vector<GaussianDensity>& sources, std::size_t min_count,
                   const char* op) {
    if (sources.size() < min_count) {
        throw invariant_error(std::string(op) + ": needs at least " + std::to_string(min_count) +
                              " sources, got " + std::to_string(sources.size()));
    }
    const Eigen::Index dim = sources.front().dim();
    for (const auto& s : sources) {
        if (s.dim() != dim) {
            throw invariant_error(std::string(op) + ": source dimensions differ");
        }
    }
}

void check_weights(const std::vector<GaussianDensity>& sources, const SimplexWeights& w,
                   const char* op, bool require_total_one = true) {
    if (static_cast<std::size_t>(w.size()) != sources.size()) {
        throw invariant_error(std::string(op) + ": weight count " + std::to_string(w.size()) +
                              " does not match source count " + std::to_string(sources.size()));
    }
    if (require_total_one && std::abs(w.total() - 1.0) > 1e-12) {
        throw invariant_error(std::string(op) + ": weights must total one, got " +
                              std::to_string(w.total()));
    }
}

/// Geometric-average formulas for arbitrary nonnegative weights (total need
/// not be one); shared by ga_fuse, ci_fuse and ffcc_fuse.
GaussianDensity ga_formula(const std::vector<GaussianDensity>& sources, const Eigen::VectorXd& w) {
    const Eigen::Index dim = sources.front().dim();
    Eigen::MatrixXd info = Eigen::MatrixXd::Zero(dim, dim);
    Eigen::VectorXd info_mean = Eigen::VectorXd::Zero(dim);
    for (std::size_t i = 0; i < sources.size(); ++i) {
        if (w[static_cast<Eigen::Index>(i)] == 0.0) {
            continue;
        }
        Eigen::LLT<Eigen::MatrixXd> llt(sources[i].cov());
        if (llt.info() != Eigen::Success) {
            throw invariant_error("ga_fuse: source covariance is not positive definite");
        }
        const Eigen::MatrixXd prec = llt.solve(Eigen::MatrixXd::Identity(dim, dim));
        info += w[static_cast<Eigen::Index>(i)] * prec;
        info_mean += w[static_cast<Eigen::Index>(i)] * (prec * sources[i].mean());
    }
    Eigen::LLT<Eigen::MatrixXd> llt(info);
    if (llt.info() != Eigen::Success) {
        throw invariant_error("ga_fuse: combined precision is not positive definite");
    }
    Eigen::MatrixXd cov = llt.solve(Eigen::MatrixXd::Identity(dim, dim));
    Eigen::VectorXd mean = llt.solve(info_mean);
    return GaussianDensity(std::move(mean), cov);
}

/// Trace of the GA-fused covariance for candidate weights; the ci_fuse
/// objective.
double ga_trace(const std::vector<Eigen::MatrixXd>& precisions, const Eigen::VectorXd& w) {
    const Eigen::Index dim = precisions.front().rows();
    Eigen::MatrixXd info = Eigen::MatrixXd::Zero(dim, dim);
    for (std::size_t i = 0; i < precisions.size(); ++i) {
        if (w[static_cast<Eigen::Index>(i)] != 0.0) {
            info += w[static_cast<Eigen::Index>(i)] * precisions[i];
        }
    }
    Eigen::LLT<Eigen::MatrixXd> llt(info);
    if (llt.info() != Eigen::Success) {
        return std::numeric_limits<double>::infinity();
    }
    return llt.solve(Eigen::MatrixXd::Identity(dim, dim)).trace();
}

/// Mean-offset-adjusted covariances P_i + (mean - mu_i)(mean - mu_i)^T.
std::vector<Eigen::MatrixXd> adjusted_covariances(const std::vector<GaussianDensity>& sources,
                                                  const Eigen::VectorXd& mean) {
    std::vector<Eigen::MatrixXd> adjusted;
    adjusted.reserve(sources.size());
    for (const auto& s : sources) {
        const Eigen::VectorXd d = mean - s.mean();
        adjusted.push_back(s.cov() + d * d.transpose());
    }
    return adjusted;
}

}  // namespace

std::string to_string(FusionRule rule) {
    switch (rule) {
        case FusionRule::naive: return "naive";
        case FusionRule::ga: return "ga";
        case FusionRule::ci: return "ci";
        case FusionRule::ffcc: return "ffcc";
        case FusionRule::cu_max: return "cu_max";
        case FusionRule::cu_min: return "cu_min";
        case FusionRule::aa_merged: return "aa_merged";
    }
    throw invariant_error("to_string: unknown fusion rule");
}

FusedPair naive_fuse(const std::vector<GaussianDensity>& sources) {
    check_sources(sources, 2, "naive_fuse");
    Eigen::VectorXd ones = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(sources.size()));
    GaussianDensity fused = ga_formula(sources, ones);
    // The rule has no weights; report the uniform placeholder.
    return {std::move(fused), FusionRule::naive,
            SimplexWeights::uniform(static_cast<Eigen::Index>(sources.size()))};
}

FusedPair ga_fuse(const std::vector<GaussianDensity>& sources, const SimplexWeights& w) {
    check_sources(sources, 1, "ga_fuse");
    check_weights(sources, w, "ga_fuse");
    return {ga_formula(sources, w.values()), FusionRule::ga, w};
}

FusedPair ci_fuse(const std::vector<GaussianDensity>& sources) {
    check_sources(sources, 2, "ci_fuse");
    const Eigen::Index count = static_cast<Eigen::Index>(sources.size());
    const Eigen::Index dim = sources.front().dim();
    std::vector<Eigen::MatrixXd> precisions;
    precisions.reserve(sources.size());
    for (const auto& s : sources) {
        precisions.push_back(
            Eigen::LLT<Eigen::MatrixXd>(s.cov()).solve(Eigen::MatrixXd::Identity(dim, dim)));
    }

    SimplexSearchOptions options;
    if (count == 2) {
        options.resolution = 1000;
        options.refine_rounds = 0;
    } else {
        options.resolution = count == 3 ? 200 : 50;
        options.refine_rounds = 3;
    }
    const SimplexSearchResult best = minimize_on_simplex(
        count, [&](const Eigen::VectorXd& w) { return ga_trace(precisions, w); }, options);

    SimplexWeights weights(best.w);
    return {ga_formula(sources, weights.values()), FusionRule::ci, std::move(weights)};
}

FusedPair ffcc_fuse(const std::vector<GaussianDensity>& sources, const SimplexWeights& w) {
    check_sources(sources, 1, "ffcc_fuse");
    check_weights(sources, w, "ffcc_fuse", /*require_total_one=*/false);
    return {ga_formula(sources, w.values()), FusionRule::ffcc, w};
}

FusedPair cu_fuse(const std::vector<GaussianDensity>& sources, const SimplexWeights& w,
                  CuBound bound) {
    check_sources(sources, 1, "cu_fuse");
    check_weights(sources, w, "cu_fuse");
    const Eigen::VectorXd mean = [&] {
        Eigen::VectorXd m = Eigen::VectorXd::Zero(sources.front().dim());
        for (std::size_t i = 0; i < sources.size(); ++i) {
            m += w[static_cast<Eigen::Index>(i)] * sources[i].mean();
        }
        return m;
    }();
    const std::vector<Eigen::MatrixXd> adjusted = adjusted_covariances(sources, mean);
    std::size_t pick = 0;
    for (std::size_t i = 1; i < adjusted.size(); ++i) {
        const double ti = adjusted[i].trace();
        const double tp = adjusted[pick].trace();
        if ((bound == CuBound::max && ti > tp) || (bound == CuBound::min && ti < tp)) {
            pick = i;
        }
    }
    return {GaussianDensity(mean, adjusted[pick]),
            bound == CuBound::max ? FusionRule::cu_max : FusionRule::cu_min, w};
}

GaussianMixture aa_fuse_mixture(const std::vector<GaussianMixture>& sources,
                                const SimplexWeights& w) {
    if (static_cast<std::size_t>(w.size()) != sources.size()) {
        throw invariant_error("aa_fuse_mixture: weight count does not match source count");
    }
    if (std::abs(w.total() - 1.0) > 1e-12) {
        throw invariant_error("aa_fuse_mixture: weights must total one");
    }
    std::vector<MixtureComponent> components;
    double sum = 0.0;
    for (std::size_t i = 0; i < sources.size(); ++i) {
        const double wi = w[static_cast<Eigen::Index>(i)];
        if (wi == 0.0) {
            continue;
        }
        for (const auto& c : sources[i].components()) {
            components.push_back({wi * c.weight, c.density});
            sum += components.back().weight;
        }
    }
    if (components.empty()) {
        throw invariant_error("aa_fuse_mixture: all sources have zero weight");
    }
    for (auto& c : components) {
        c.weight /= sum;
    }
    return GaussianMixture(std::move(components));
}

FusedPair aa_fuse_pairs(const std::vector<GaussianDensity>& sources, const SimplexWeights& w) {
    check_sources(sources, 1, "aa_fuse_pairs");
    check_weights(sources, w, "aa_fuse_pairs");
    std::vector<GaussianMixture> singles;
    singles.reserve(sources.size());
    for (const auto& s : sources) {
        singles.push_back(GaussianMixture::single(s));
    }
    return {moment_match(aa_fuse_mixture(singles, w)), FusionRule::aa_merged, w};
}

bool ChainReport::all_ok() const {
    return std::all_of(links.begin(), links.end(), [](const ChainLink& l) { return l.ok; });
}

ChainReport chain_check(const std::vector<GaussianDensity>& sources, const SimplexWeights& w,
                        double ffcc_delta) {
    check_sources(sources, 2, "chain_check");
    check_weights(sources, w, "chain_check");
    if (!(ffcc_delta > 0.0) || ffcc_delta > 1.0) {
        throw invariant_error("chain_check: ffcc_delta must lie in (0, 1]");
    }

    ChainReport report{};
    report.tr_naive = naive_fuse(sources).estimate.cov().trace();
    report.tr_min_source = sources.front().cov().trace();
    for (const auto& s : sources) {
        report.tr_min_source = std::min(report.tr_min_source, s.cov().trace());
    }
    report.tr_cu_min = cu_fuse(sources, w, CuBound::min).estimate.cov().trace();
    report.tr_aa = aa_fuse_pairs(sources, w).estimate.cov().trace();
    report.tr_cu_max = cu_fuse(sources, w, CuBound::max).estimate.cov().trace();
    report.tr_ci = ci_fuse(sources).estimate.cov().trace();
    report.tr_ffcc =
        ffcc_fuse(sources, SimplexWeights(ffcc_delta * w.values(), ffcc_delta)).estimate.cov().trace();

    const auto link = [&](const char* name, double lhs, double rhs) {
        const double tol = 1e-9 * std::max({1.0, std::abs(lhs), std::abs(rhs)});
        report.links.push_back({name, lhs, rhs, lhs <= rhs + tol});
    };
    link("naive<min_source", report.tr_naive, report.tr_min_source);
    link("min_source<=cu_min", report.tr_min_source, report.tr_cu_min);
    link("cu_min<=aa", report.tr_cu_min, report.tr_aa);
    link("aa<=cu_max", report.tr_aa, report.tr_cu_max);
    link("naive<ci", report.tr_naive, report.tr_ci);
    link("ci<=aa", report.tr_ci, report.tr_aa);
    link("ci<=ffcc", report.tr_ci, report.tr_ffcc);
    return report;
}

}  // namespace fusionlab
