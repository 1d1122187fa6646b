#include "fusionlab/simplex_search.hpp"

#include <cmath>
#include <vector>

#include "fusionlab/common.hpp"

namespace fusionlab {

namespace {

double weight_entropy(const Eigen::VectorXd& w) {
    double h = 0.0;
    for (Eigen::Index i = 0; i < w.size(); ++i) {
        if (w[i] > 0.0) {
            h -= w[i] * std::log(w[i]);
        }
    }
    return h;
}

struct Incumbent {
    explicit Incumbent(double tie_tol) : tie_tol_(tie_tol) {}

    void offer(const Eigen::VectorXd& cand, double v) {
        if (!std::isfinite(v)) {
            return;
        }
        if (!set_) {
            w = cand;
            value = v;
            entropy_ = weight_entropy(cand);
            set_ = true;
            return;
        }
        const double tol = tie_tol_ * std::max(1.0, std::abs(value));
        if (v < value - tol) {
            w = cand;
            value = v;
            entropy_ = weight_entropy(cand);
        } else if (v < value + tol) {
            const double h = weight_entropy(cand);
            if (h > entropy_ + 1e-12) {
                w = cand;
                value = v;
                entropy_ = h;
            }
        }
    }

    bool found() const { return set_; }

    Eigen::VectorXd w;
    double value = 0.0;

private:
    double tie_tol_;
    double entropy_ = 0.0;
    bool set_ = false;
};

/// Lexicographic enumeration of nonnegative integer vectors summing to
/// `resolution`; the final coordinate is implied.
void enumerate_grid(Eigen::VectorXd& w, Eigen::Index pos, int remaining, int resolution,
                    const std::function<double(const Eigen::VectorXd&)>& objective,
                    Incumbent& best) {
    const Eigen::Index count = w.size();
    if (pos == count - 1) {
        // Pin the sum to exactly one in floating point.
        w[pos] = std::max(1.0 - w.head(count - 1).sum(), 0.0);
        best.offer(w, objective(w));
        return;
    }
    for (int k = 0; k <= remaining; ++k) {
        w[pos] = static_cast<double>(k) / resolution;
        enumerate_grid(w, pos + 1, remaining - k, resolution, objective, best);
    }
}

void refine_round(double step, const std::function<double(const Eigen::VectorXd&)>& objective,
                  Incumbent& best) {
    const Eigen::Index count = best.w.size();
    const Eigen::VectorXd center = best.w;
    const double offsets[] = {-2.0 * step, -step, 0.0, step, 2.0 * step};
    Eigen::VectorXd cand(count);
    std::vector<int> idx(static_cast<std::size_t>(count - 1), 0);
    while (true) {
        bool feasible = true;
        double head_sum = 0.0;
        for (Eigen::Index i = 0; i < count - 1; ++i) {
            const double v = center[i] + offsets[idx[static_cast<std::size_t>(i)]];
            if (v < -1e-12 || v > 1.0 + 1e-12) {
                feasible = false;
                break;
            }
            cand[i] = std::max(v, 0.0);
            head_sum += cand[i];
        }
        if (feasible) {
            const double last = 1.0 - head_sum;
            if (last >= -1e-12) {
                cand[count - 1] = std::max(last, 0.0);
                best.offer(cand, objective(cand));
            }
        }
        // Advance the mixed-radix counter over offset choices.
        Eigen::Index carry = 0;
        while (carry < count - 1) {
            if (++idx[static_cast<std::size_t>(carry)] < 5) {
                break;
            }
            idx[static_cast<std::size_t>(carry)] = 0;
            ++carry;
        }
        if (carry == count - 1) {
            break;
        }
    }
}

}  // namespace

SimplexSearchResult minimize_on_simplex(
    Eigen::Index count, const std::function<double(const Eigen::VectorXd&)>& objective,
    const SimplexSearchOptions& options) {
    if (count <= 0) {
        throw invariant_error("minimize_on_simplex: count must be positive");
    }
    if (options.resolution < 1) {
        throw invariant_error("minimize_on_simplex: resolution must be at least 1");
    }
    if (count == 1) {
        Eigen::VectorXd one = Eigen::VectorXd::Ones(1);
        return {one, objective(one)};
    }

    Incumbent best(options.tie_tol);

    // Exact uniform first: symmetric objectives tie everywhere and the
    // entropy rule keeps the most uniform candidate.
    Eigen::VectorXd uniform = Eigen::VectorXd::Constant(count, 1.0 / static_cast<double>(count));
    uniform[count - 1] = 1.0 - uniform.head(count - 1).sum();
    best.offer(uniform, objective(uniform));

    Eigen::VectorXd w(count);
    enumerate_grid(w, 0, options.resolution, options.resolution, objective, best);

    double step = 0.5 / options.resolution;
    for (int round = 0; round < options.refine_rounds; ++round) {
        refine_round(step, objective, best);
        step *= 0.5;
    }

    if (!best.found()) {
        throw invariant_error("minimize_on_simplex: objective was non-finite everywhere");
    }
    return {best.w, best.value};
}

}  // namespace fusionlab
