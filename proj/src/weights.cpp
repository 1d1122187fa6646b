#include "fusionlab/weights.hpp"

#include <cmath>
#include <limits>
#include <optional>

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

/// Raw merged moments without the GaussianDensity repair pass; the result of
/// the convex combination is symmetric PD by construction, and the solvers
/// evaluate this for tens of thousands of candidates.
void merged_moments_raw(const std::vector<GaussianDensity>& sources, const Eigen::VectorXd& w,
                        Eigen::VectorXd& mean, Eigen::MatrixXd& cov) {
    const Eigen::Index dim = sources.front().dim();
    mean.setZero(dim);
    for (std::size_t i = 0; i < sources.size(); ++i) {
        const double wi = w[static_cast<Eigen::Index>(i)];
        if (wi != 0.0) {
            mean += wi * sources[i].mean();
        }
    }
    cov.setZero(dim, dim);
    for (std::size_t i = 0; i < sources.size(); ++i) {
        const double wi = w[static_cast<Eigen::Index>(i)];
        if (wi != 0.0) {
            const Eigen::VectorXd d = mean - sources[i].mean();
            cov += wi * (sources[i].cov() + d * d.transpose());
        }
    }
}

/// KL(N(mu1,P1) || N(mu2,P2)) from raw moments, with the Cholesky of P2 and
/// its log-determinant precomputed by the caller when shared.
double kl_raw(const Eigen::VectorXd& mu1, const Eigen::MatrixXd& p1,
              const Eigen::LLT<Eigen::MatrixXd>& llt2, double logdet2, const Eigen::VectorXd& mu2) {
    const double n = static_cast<double>(mu1.size());
    const double tr = llt2.solve(p1).trace();
    const double logdet1 =
        2.0 * Eigen::LLT<Eigen::MatrixXd>(p1).matrixLLT().diagonal().array().log().sum();
    const Eigen::VectorXd d = mu1 - mu2;
    const double quad = d.dot(llt2.solve(d));
    return std::max(0.5 * (tr - n + logdet2 - logdet1 + quad), 0.0);
}

/// Exact-representability pre-pass for the target-fitting problem. Once the
/// merged mean equals the target mean, the merged covariance is linear in w,
/// so the set of weight vectors reproducing the target exactly is the
/// polytope {w >= 0} intersected with a linear system A w = b. Every member
/// attains KL = 0, the global minimum; to make the solution unique we return
/// the analytic center (argmax sum_i log w_i over the relative interior),
/// i.e. the interior-point limit. Returns nothing when the target is not
/// representable or the representing set is higher-dimensional than a
/// segment (then the grid solver decides).
std::optional<Eigen::VectorXd> exact_fit_weights(const std::vector<GaussianDensity>& sources,
                                                 const GaussianDensity& target) {
    const Eigen::Index count = static_cast<Eigen::Index>(sources.size());
    const Eigen::Index n = target.dim();
    const Eigen::Index rows = 1 + n + n * (n + 1) / 2;

    Eigen::MatrixXd a(rows, count);
    Eigen::VectorXd b(rows);
    a.row(0).setOnes();
    b(0) = 1.0;
    b.segment(1, n) = target.mean();
    Eigen::Index r = 1 + n;
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i; j < n; ++j) b(r++) = target.cov()(i, j);
    }
    for (Eigen::Index c = 0; c < count; ++c) {
        const GaussianDensity& s = sources[static_cast<std::size_t>(c)];
        a.block(1, c, n, 1) = s.mean();
        const Eigen::VectorXd d = target.mean() - s.mean();
        const Eigen::MatrixXd shifted = s.cov() + d * d.transpose();
        r = 1 + n;
        for (Eigen::Index i = 0; i < n; ++i) {
            for (Eigen::Index j = i; j < n; ++j) a(r++, c) = shifted(i, j);
        }
    }
    for (Eigen::Index row = 0; row < rows; ++row) {
        const double scale = std::max({1.0, std::abs(b(row)), a.row(row).cwiseAbs().maxCoeff()});
        a.row(row) /= scale;
        b(row) /= scale;
    }

    const Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(a);
    const Eigen::VectorXd particular = cod.solve(b);
    if ((a * particular - b).lpNorm<Eigen::Infinity>() > 1e-9) return std::nullopt;

    Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
    const Eigen::Index kernel_dim = lu.dimensionOfKernel();
    constexpr double kFeasTol = 1e-9;

    if (kernel_dim == 0) {
        if (particular.minCoeff() < -kFeasTol) return std::nullopt;
        return particular.cwiseMax(0.0);
    }
    if (kernel_dim > 1) return std::nullopt;

    Eigen::VectorXd dir = lu.kernel().col(0);
    dir /= dir.norm();
    for (Eigen::Index i = 0; i < count; ++i) {
        if (std::abs(dir(i)) > 1e-12) {
            if (dir(i) < 0.0) dir = -dir;
            break;
        }
    }

    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < count; ++i) {
        if (std::abs(dir(i)) <= 1e-12) {
            if (particular(i) < -kFeasTol) return std::nullopt;
            continue;
        }
        const double bound = -particular(i) / dir(i);
        if (dir(i) > 0.0) {
            lo = std::max(lo, bound);
        } else {
            hi = std::min(hi, bound);
        }
    }
    if (!(lo <= hi + kFeasTol) || !std::isfinite(lo) || !std::isfinite(hi)) return std::nullopt;

    double t = 0.5 * (lo + hi);
    if (hi - lo > 1e-14) {
        // Bisection on the barrier derivative sum_i dir_i / w_i(t), which is
        // strictly decreasing in t and spans +inf -> -inf across the segment.
        double a_t = lo;
        double b_t = hi;
        for (int it = 0; it < 200; ++it) {
            t = 0.5 * (a_t + b_t);
            double slope = 0.0;
            for (Eigen::Index i = 0; i < count; ++i) {
                if (std::abs(dir(i)) <= 1e-12) continue;
                const double wi = particular(i) + t * dir(i);
                if (wi <= 0.0) {
                    slope = dir(i) > 0.0 ? std::numeric_limits<double>::infinity()
                                         : -std::numeric_limits<double>::infinity();
                    break;
                }
                slope += dir(i) / wi;
            }
            if (slope > 0.0) {
                a_t = t;
            } else {
                b_t = t;
            }
        }
    }
    return (particular + t * dir).cwiseMax(0.0).eval();
}

SimplexSearchOptions solver_options(std::size_t count) {
    SimplexSearchOptions options;
    options.resolution = count <= 3 ? 200 : 50;
    options.refine_rounds = 3;
    return options;
}

WeightSolution finish(ObjectiveKind kind, const std::function<double(const Eigen::VectorXd&)>& objective,
                      Eigen::Index count, const SimplexSearchResult& best, double sign) {
    Eigen::VectorXd uniform = Eigen::VectorXd::Constant(count, 1.0 / static_cast<double>(count));
    uniform[count - 1] = 1.0 - uniform.head(count - 1).sum();
    WeightSolution solution{SimplexWeights(best.w), sign * best.value, kind, {}};
    solution.solver_trace.emplace_back(uniform, objective(uniform));
    solution.solver_trace.emplace_back(best.w, solution.objective_value);
    return solution;
}

}  // namespace

std::string to_string(ObjectiveKind kind) {
    switch (kind) {
        case ObjectiveKind::opt_kl: return "opt_kl";
        case ObjectiveKind::subopt_diversity: return "subopt_diversity";
        case ObjectiveKind::bound: return "bound";
    }
    throw invariant_error("to_string: unknown objective kind");
}

GaussianDensity merged_moments(const std::vector<GaussianDensity>& sources,
                               const Eigen::VectorXd& w) {
    check_sources(sources, 1, "merged_moments");
    if (static_cast<std::size_t>(w.size()) != sources.size()) {
        throw invariant_error("merged_moments: weight count does not match source count");
    }
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;
    merged_moments_raw(sources, w, mean, cov);
    return GaussianDensity(std::move(mean), cov);
}

double optimal_weight_objective(const std::vector<GaussianDensity>& sources,
                                const GaussianDensity& target, const Eigen::VectorXd& w) {
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;
    merged_moments_raw(sources, w, mean, cov);
    Eigen::LLT<Eigen::MatrixXd> llt(target.cov());
    const double logdet = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
    return kl_raw(mean, cov, llt, logdet, target.mean());
}

double diversity_objective(const std::vector<GaussianDensity>& sources, const Eigen::VectorXd& w) {
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;
    merged_moments_raw(sources, w, mean, cov);
    Eigen::LLT<Eigen::MatrixXd> llt(cov);
    if (llt.info() != Eigen::Success) {
        return -std::numeric_limits<double>::infinity();
    }
    const double logdet = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
    double acc = 0.0;
    for (std::size_t i = 0; i < sources.size(); ++i) {
        const double wi = w[static_cast<Eigen::Index>(i)];
        if (wi != 0.0) {
            acc += wi * kl_raw(sources[i].mean(), sources[i].cov(), llt, logdet, mean);
        }
    }
    return acc;
}

double bound_objective(const std::vector<GaussianDensity>& sources, const Eigen::VectorXd& w) {
    const std::size_t count = sources.size();
    double acc = 0.0;
    for (std::size_t i = 0; i < count; ++i) {
        const double wi = w[static_cast<Eigen::Index>(i)];
        if (wi == 0.0) {
            continue;
        }
        // log sum_j w_j z_ij via log-sum-exp to survive far-separated means.
        double max_term = -std::numeric_limits<double>::infinity();
        std::vector<double> terms;
        terms.reserve(count);
        for (std::size_t j = 0; j < count; ++j) {
            const double wj = w[static_cast<Eigen::Index>(j)];
            if (wj == 0.0) {
                continue;
            }
            const GaussianDensity conv(sources[j].mean(), sources[i].cov() + sources[j].cov());
            const double t = std::log(wj) + conv.logpdf(sources[i].mean());
            terms.push_back(t);
            max_term = std::max(max_term, t);
        }
        double sum = 0.0;
        for (double t : terms) {
            sum += std::exp(t - max_term);
        }
        acc += wi * (0.5 * logdet_spd(sources[i].cov()) + max_term + std::log(sum));
    }
    return acc;
}

WeightSolution optimal_weights_gaussian(const std::vector<GaussianDensity>& sources,
                                        const GaussianDensity& target) {
    check_sources(sources, 1, "optimal_weights_gaussian");
    if (sources.front().dim() != target.dim()) {
        throw invariant_error("optimal_weights_gaussian: target dimension mismatch");
    }
    const auto objective = [&](const Eigen::VectorXd& w) {
        return optimal_weight_objective(sources, target, w);
    };
    if (const std::optional<Eigen::VectorXd> exact = exact_fit_weights(sources, target)) {
        Eigen::VectorXd w = *exact;
        w(w.size() - 1) = std::max(1.0 - w.head(w.size() - 1).sum(), 0.0);
        return finish(ObjectiveKind::opt_kl, objective, static_cast<Eigen::Index>(sources.size()),
                      {w, objective(w)}, 1.0);
    }
    const SimplexSearchResult best = minimize_on_simplex(
        static_cast<Eigen::Index>(sources.size()), objective, solver_options(sources.size()));
    return finish(ObjectiveKind::opt_kl, objective, static_cast<Eigen::Index>(sources.size()),
                  best, 1.0);
}

WeightSolution suboptimal_weights_diversity(const std::vector<GaussianDensity>& sources) {
    check_sources(sources, 2, "suboptimal_weights_diversity");
    const auto objective = [&](const Eigen::VectorXd& w) {
        return diversity_objective(sources, w);
    };
    const SimplexSearchResult best = minimize_on_simplex(
        static_cast<Eigen::Index>(sources.size()),
        [&](const Eigen::VectorXd& w) { return -objective(w); }, solver_options(sources.size()));
    return finish(ObjectiveKind::subopt_diversity, objective,
                  static_cast<Eigen::Index>(sources.size()), best, -1.0);
}

WeightSolution bound_weights(const std::vector<GaussianDensity>& sources) {
    check_sources(sources, 2, "bound_weights");

    // z_ij and the per-source log-determinants do not depend on w.
    const std::size_t count = sources.size();
    Eigen::MatrixXd log_z(count, count);
    Eigen::VectorXd half_logdet(static_cast<Eigen::Index>(count));
    for (std::size_t i = 0; i < count; ++i) {
        half_logdet[static_cast<Eigen::Index>(i)] = 0.5 * logdet_spd(sources[i].cov());
        for (std::size_t j = 0; j < count; ++j) {
            const GaussianDensity conv(sources[j].mean(), sources[i].cov() + sources[j].cov());
            log_z(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                conv.logpdf(sources[i].mean());
        }
    }

    const auto objective = [&](const Eigen::VectorXd& w) {
        double acc = 0.0;
        for (std::size_t i = 0; i < count; ++i) {
            const double wi = w[static_cast<Eigen::Index>(i)];
            if (wi == 0.0) {
                continue;
            }
            double max_term = -std::numeric_limits<double>::infinity();
            for (std::size_t j = 0; j < count; ++j) {
                const double wj = w[static_cast<Eigen::Index>(j)];
                if (wj > 0.0) {
                    max_term = std::max(max_term, std::log(wj) + log_z(static_cast<Eigen::Index>(i),
                                                                       static_cast<Eigen::Index>(j)));
                }
            }
            double sum = 0.0;
            for (std::size_t j = 0; j < count; ++j) {
                const double wj = w[static_cast<Eigen::Index>(j)];
                if (wj > 0.0) {
                    sum += std::exp(std::log(wj) +
                                    log_z(static_cast<Eigen::Index>(i),
                                          static_cast<Eigen::Index>(j)) -
                                    max_term);
                }
            }
            acc += wi * (half_logdet[static_cast<Eigen::Index>(i)] + max_term + std::log(sum));
        }
        return acc;
    };

    const SimplexSearchResult best = minimize_on_simplex(static_cast<Eigen::Index>(count),
                                                         objective, solver_options(count));
    return finish(ObjectiveKind::bound, objective, static_cast<Eigen::Index>(count), best, 1.0);
}

EqualDivergenceReport equal_divergence_check(const std::vector<GaussianDensity>& sources,
                                             const SimplexWeights& w, const QuadratureSpec& spec) {
    check_sources(sources, 2, "equal_divergence_check");
    if (static_cast<std::size_t>(w.size()) != sources.size()) {
        throw invariant_error("equal_divergence_check: weight count does not match source count");
    }
    if (std::abs(w.total() - 1.0) > 1e-12) {
        throw invariant_error("equal_divergence_check: weights must total one");
    }

    std::vector<MixtureComponent> components;
    for (std::size_t i = 0; i < sources.size(); ++i) {
        const double wi = w[static_cast<Eigen::Index>(i)];
        if (wi > 0.0) {
            components.push_back({wi, sources[i]});
        }
    }
    const GaussianMixture mixture(std::move(components));

    EqualDivergenceReport report;
    report.divergences.resize(static_cast<Eigen::Index>(sources.size()));
    for (std::size_t i = 0; i < sources.size(); ++i) {
        report.divergences[static_cast<Eigen::Index>(i)] =
            kl_mixture_quadrature(GaussianMixture::single(sources[i]), mixture, spec);
    }
    report.spread = report.divergences.maxCoeff() - report.divergences.minCoeff();
    return report;
}

}  // namespace fusionlab
