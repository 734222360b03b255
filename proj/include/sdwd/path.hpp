#pragma once
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>
#include <sdwd/data.hpp>
#include <sdwd/solver.hpp>
#include <sdwd/sparse.hpp>

namespace sdwd {

struct PathConfig
{
    int nlambda = 100;
    /// Smallest grid point as a fraction of lambda_max; unset means 1e-4 when n < p, else 1e-2.
    std::optional<double> lambda_min_ratio;
    double lambda2 = 0.0;
    bool use_strong_rule = true;
    /// Stop the path once the support grows beyond min(n, p).
    bool early_exit = false;
    /// Tolerance on the recheck |g_j| <= lambda1 w_j for discarded coordinates.
    double screen_slack = 1e-6;
    SolverConfig solver;

    double resolved_ratio(Index n, Index p) const
    {
        return lambda_min_ratio.value_or(n < p ? 1e-4 : 1e-2);
    }

    void validate(Index n, Index p) const
    {
        if (nlambda < 2) throw InvalidArgument("path: nlambda must be >= 2");
        const double eps = resolved_ratio(n, p);
        if (!(eps > 0 && eps < 1)) throw InvalidArgument("path: lambda_min_ratio must lie in (0, 1)");
        if (!std::isfinite(lambda2) || lambda2 < 0) throw InvalidArgument("path: lambda2 must be finite and >= 0");
        if (!(screen_slack >= 0)) throw InvalidArgument("path: screen_slack must be >= 0");
        solver.validate();
    }
};

/// Solutions along a decreasing lambda1 grid at one lambda2.
struct SolutionPath
{
    Vector lambda1_grid;
    double lambda2 = 0.0;
    Vector weights;
    std::vector<double> intercepts;
    std::vector<SparseCoefs> coefficients;
    std::vector<Index> nonzero_counts;
    std::vector<double> kkt_max_violation;
    std::vector<std::int64_t> cycles_used;
    double lambda_max = 0.0;
    double lambda_min_ratio = 0.0;
    Index p = 0;

    std::size_t size() const noexcept { return intercepts.size(); }

    PenaltySpec penalty(std::size_t k) const { return PenaltySpec{lambda1_grid[static_cast<Index>(k)], lambda2, weights}; }

    FitState state(const Dataset& data, std::size_t k) const
    {
        return FitState::from(data, intercepts[k], coefficients[k].dense(p));
    }
};

/// Intercept-only minimizer (b = 0), by repeated intercept updates.
inline FitState fit_intercept_only(const Dataset& data, const SolverConfig& cfg = {})
{
    data.validate_for_fit();
    FitState s = FitState::zeros(data);
    double tol = cfg.tol;
    for (;;) {
        const double old = s.beta0;
        const double d = update_intercept(s, data) - old;
        if (++s.cycles > cfg.max_cycles) {
            throw NonConvergence("fit_intercept_only: exceeded " + std::to_string(cfg.max_cycles) + " cycles", s);
        }
        if (dwd_majorization.lipschitz * d * d < tol) {
            if (std::abs(intercept_gradient(s, data)) <= cfg.kkt_tol) break;
            tol = std::max(tol * 1e-2, std::numeric_limits<double>::min());
        }
    }
    return s;
}

namespace detail {

inline double lambda_max_at(const FitState& base, const Dataset& data, const Vector& weights)
{
    const Vector g = loss_gradient(base, data);
    double best = 0.0;
    for (Index j = 0; j < data.p(); ++j) best = std::max(best, std::abs(g[j]) / weights[j]);
    return best;
}

inline void check_weights(const Vector& weights, Index p)
{
    PenaltySpec{0.0, 0.0, weights}.validate(p);
}

} // namespace detail

/**
 * Smallest lambda1 at which b = 0 is optimal:
 * max_j |(1/n) sum_i V'(y_i b0_hat) y_i x_ij| / w_j, with b0_hat the
 * intercept-only fit.
 */
inline double lambda_max(const Dataset& data, const Vector& weights, const SolverConfig& cfg = {})
{
    detail::check_weights(weights, data.p());
    return detail::lambda_max_at(fit_intercept_only(data, cfg), data, weights);
}

/// K points from lmax down to ratio * lmax, equally spaced in log.
inline Vector lambda_grid(double lmax, int nlambda, double ratio)
{
    if (!(lmax > 0) || !std::isfinite(lmax)) throw InvalidArgument("lambda_grid: lambda_max must be > 0");
    if (nlambda < 2) throw InvalidArgument("lambda_grid: need at least 2 points");
    if (!(ratio > 0 && ratio < 1)) throw InvalidArgument("lambda_grid: ratio must lie in (0, 1)");
    Vector grid(nlambda);
    const double step = std::log(ratio) / (nlambda - 1);
    grid[0] = lmax;
    for (int k = 1; k < nlambda - 1; ++k) grid[k] = lmax * std::exp(step * k);
    grid[nlambda - 1] = lmax * ratio;
    return grid;
}

inline Vector lambda_grid(double lmax, const PathConfig& cfg, Index n, Index p)
{
    return lambda_grid(lmax, cfg.nlambda, cfg.resolved_ratio(n, p));
}

/**
 * Sequential strong rule: coordinate j survives when
 * |g_j(prev)| >= w_j (2 lambda_next - lambda_prev). Returned indices are sorted.
 */
inline std::vector<Index> strong_rule_screen(const FitState& prev, const Dataset& data, double lambda_prev,
                                             double lambda_next, const Vector& weights)
{
    if (lambda_next > lambda_prev) throw InvalidArgument("strong_rule_screen: lambda_next must be <= lambda_prev");
    const Vector g = loss_gradient(prev, data);
    const double cut = 2 * lambda_next - lambda_prev;
    std::vector<Index> keep;
    for (Index j = 0; j < data.p(); ++j) {
        if (std::abs(g[j]) >= weights[j] * cut) keep.push_back(j);
    }
    return keep;
}

/**
 * Solves the penalized problem at every point of `grid` (decreasing), warm
 * starting each point from the previous solution.
 *
 * Points at or above the data's own lambda_max take the intercept-only
 * solution. Below it, the strong rule (if enabled) restricts the solver to a
 * survival set; afterwards every discarded coordinate is rechecked against
 * |g_j| <= lambda1 w_j and violators are added back until none remain.
 */
inline SolutionPath fit_path(const Dataset& data, const PathConfig& cfg, const Vector& weights, const Vector& grid)
{
    data.validate_for_fit();
    detail::check_weights(weights, data.p());
    cfg.solver.validate();
    detail::check_scaled(data);
    for (Index k = 0; k < grid.size(); ++k) {
        if (!(grid[k] >= 0) || !std::isfinite(grid[k])) throw InvalidArgument("fit_path: grid values must be finite and >= 0");
        if (k > 0 && !(grid[k] < grid[k - 1])) throw InvalidArgument("fit_path: grid must be strictly decreasing");
    }

    const Index n = data.n();
    const Index p = data.p();
    const FitState base = fit_intercept_only(data, cfg.solver);
    const double lmax = detail::lambda_max_at(base, data, weights);

    SolutionPath path;
    path.lambda1_grid = grid;
    path.lambda2 = cfg.lambda2;
    path.weights = weights;
    path.lambda_max = lmax;
    path.lambda_min_ratio = grid.size() > 0 && grid[0] > 0 ? grid[grid.size() - 1] / grid[0] : 0.0;
    path.p = p;

    std::vector<Index> all(static_cast<std::size_t>(p));
    for (Index j = 0; j < p; ++j) all[static_cast<std::size_t>(j)] = j;

    FitState state = base;
    double lambda_prev = lmax;
    std::vector<char> in_set(static_cast<std::size_t>(p));
    std::vector<Index> survivors;

    for (Index k = 0; k < grid.size(); ++k) {
        const double lam = grid[k];
        const PenaltySpec pen{lam, cfg.lambda2, weights};
        const std::int64_t cycles_before = state.cycles;

        if (lam >= lmax) {
            state = base;
        } else {
            if (cfg.use_strong_rule) {
                survivors = strong_rule_screen(state, data, lambda_prev, lam, weights);
                std::fill(in_set.begin(), in_set.end(), 0);
                for (Index j : survivors) in_set[static_cast<std::size_t>(j)] = 1;
                for (Index j = 0; j < p; ++j) {
                    if (state.beta[j] != 0.0 && !in_set[static_cast<std::size_t>(j)]) {
                        in_set[static_cast<std::size_t>(j)] = 1;
                        survivors.push_back(j);
                    }
                }
                std::sort(survivors.begin(), survivors.end());
            } else {
                survivors = all;
            }

            for (;;) {
                try {
                    state = detail::fit_fixed_impl(data, pen, std::move(state), cfg.solver, survivors, NoObserver{});
                } catch (const NonConvergence& e) {
                    throw NonConvergence(std::string(e.what()) + " at path point k=" + std::to_string(k + 1)
                                             + " (lambda1=" + format_double(lam) + ")",
                                         e.last_state());
                }
                if (!cfg.use_strong_rule) break;
                const Vector g = loss_gradient(state, data);
                bool violated = false;
                for (Index j = 0; j < p; ++j) {
                    if (!in_set[static_cast<std::size_t>(j)] && std::abs(g[j]) > lam * weights[j] + cfg.screen_slack) {
                        in_set[static_cast<std::size_t>(j)] = 1;
                        survivors.push_back(j);
                        violated = true;
                    }
                }
                if (!violated) break;
                std::sort(survivors.begin(), survivors.end());
            }
            lambda_prev = lam;
        }

        SparseCoefs coefs = SparseCoefs::from_dense(state.beta);
        const Index nnz = static_cast<Index>(coefs.nnz());
        path.intercepts.push_back(state.beta0);
        path.coefficients.push_back(std::move(coefs));
        path.nonzero_counts.push_back(nnz);
        path.kkt_max_violation.push_back(kkt_max_residual(state, data, pen));
        path.cycles_used.push_back(lam >= lmax ? 0 : state.cycles - cycles_before);

        if (cfg.early_exit && nnz > std::min(n, p)) {
            path.lambda1_grid.conservativeResize(k + 1);
            break;
        }
    }
    return path;
}

/// Path over the default grid from lambda_max(data, weights).
inline SolutionPath fit_path(const Dataset& data, const PathConfig& cfg, const Vector& weights)
{
    cfg.validate(data.n(), data.p());
    detail::check_weights(weights, data.p());
    const double lmax = lambda_max(data, weights, cfg.solver);
    if (!(lmax > 0)) throw DataError("fit_path: lambda_max is zero; no feature carries signal");
    return fit_path(data, cfg, weights, lambda_grid(lmax, cfg, data.n(), data.p()));
}

inline SolutionPath fit_path(const Dataset& data, const PathConfig& cfg)
{
    return fit_path(data, cfg, Vector::Ones(data.p()));
}

/// w_j = 1 / (|b_j(enet)| + 1/n)
inline Vector adaptive_weights(const Vector& enet_beta, Index n)
{
    if (n < 1) throw InvalidArgument("adaptive_weights: n must be >= 1");
    return (enet_beta.array().abs() + 1.0 / static_cast<double>(n)).inverse().matrix();
}

/// Second stage of the adaptive elastic net: a path with weights from a first-stage enet fit.
inline SolutionPath fit_adaptive_path(const Dataset& data, const PathConfig& cfg, const Vector& enet_beta)
{
    if (enet_beta.size() != data.p()) {
        throw InvalidArgument("fit_adaptive_path: first-stage coefficients have length "
                              + std::to_string(enet_beta.size()) + ", data has p=" + std::to_string(data.p()));
    }
    return fit_path(data, cfg, adaptive_weights(enet_beta, data.n()));
}

} // namespace sdwd
