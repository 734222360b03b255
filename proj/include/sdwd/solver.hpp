#pragma once
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>
#include <sdwd/data.hpp>
#include <sdwd/error.hpp>
#include <sdwd/loss.hpp>

namespace sdwd {

namespace detail {
#ifdef SDWD_TEST_UPDATE_NUMERATOR
// Sabotage hook for the oracle-check test build only.
inline constexpr double update_numerator = SDWD_TEST_UPDATE_NUMERATOR;
#else
inline constexpr double update_numerator = dwd_majorization.lipschitz;
#endif
inline constexpr double update_denominator = 2 * dwd_majorization.quad_coeff;
} // namespace detail

/**
 * Penalty sum_j (lambda1 * w_j * |b_j| + lambda2 / 2 * b_j^2).
 * Lasso and elastic net use w = 1; the adaptive elastic net uses
 * w_j = 1 / (|b_j(enet)| + 1/n).
 */
struct PenaltySpec
{
    double lambda1 = 0.0;
    double lambda2 = 0.0;
    Vector weights;

    static PenaltySpec uniform(double lambda1, double lambda2, Index p)
    {
        return PenaltySpec{lambda1, lambda2, Vector::Ones(p)};
    }

    void validate(Index p) const
    {
        if (!std::isfinite(lambda1) || lambda1 < 0) throw InvalidArgument("penalty: lambda1 must be finite and >= 0");
        if (!std::isfinite(lambda2) || lambda2 < 0) throw InvalidArgument("penalty: lambda2 must be finite and >= 0");
        if (weights.size() != p) {
            throw InvalidArgument("penalty: expected " + std::to_string(p) + " weights, got "
                                  + std::to_string(weights.size()));
        }
        for (Index j = 0; j < p; ++j) {
            if (!std::isfinite(weights[j]) || !(weights[j] > 0)) {
                throw InvalidArgument("penalty: weights must be finite and > 0");
            }
        }
    }

    double value(const Vector& beta) const
    {
        return lambda1 * (weights.array() * beta.array().abs()).sum() + 0.5 * lambda2 * beta.squaredNorm();
    }
};

/// Intercept, coefficients and the cached margins u_i = y_i (b0 + x_i' b).
struct FitState
{
    double beta0 = 0.0;
    Vector beta;
    Vector margins;
    std::int64_t cycles = 0;

    static FitState zeros(const Dataset& data)
    {
        FitState s;
        s.beta = Vector::Zero(data.p());
        s.margins = Vector::Zero(data.n());
        return s;
    }

    static FitState from(const Dataset& data, double beta0, Vector beta)
    {
        FitState s;
        s.beta0 = beta0;
        s.beta = std::move(beta);
        s.refresh_margins(data);
        return s;
    }

    void refresh_margins(const Dataset& data)
    {
        margins = (data.x * beta + Vector::Constant(data.n(), beta0)).cwiseProduct(data.y);
    }
};

struct SolverConfig
{
    double tol = 1e-8;              ///< converged when 4 * delta^2 < tol for every coordinate and b0
    std::int64_t max_cycles = 100000;
    bool active_set = true;
    double kkt_tol = 1e-6;          ///< keep going until max KKT residual over the working set is below this
    bool newton_refine = true;      ///< sign-fixed Newton steps on the support when the KKT check fails

    void validate() const
    {
        if (!(tol > 0)) throw InvalidArgument("solver: tol must be > 0");
        if (max_cycles < 1) throw InvalidArgument("solver: max_cycles must be >= 1");
        if (!(kkt_tol > 0)) throw InvalidArgument("solver: kkt_tol must be > 0");
    }
};

class NonConvergence : public Error
{
public:
    NonConvergence(const std::string& what, FitState last) : Error(what), last_(std::move(last)) {}
    const FitState& last_state() const noexcept { return last_; }

private:
    FitState last_;
};

/**
 * Passed to fit_fixed observers after every coordinate or intercept update.
 * For refinement steps old_value/new_value hold the objective before/after.
 */
struct UpdateEvent
{
    static constexpr Index intercept = -1;
    static constexpr Index refinement = -2;
    Index coordinate;
    double old_value;
    double new_value;
    const FitState& state;
};

struct NoObserver
{
    void operator()(const UpdateEvent&) const noexcept {}
};

/// (1/n) sum_i V'(u_i) y_i x_ij
inline double coordinate_gradient(const FitState& state, const Dataset& data, Index j)
{
    if (j < 0 || j >= data.p()) throw InvalidArgument("coordinate_gradient: index out of range");
    const auto col = data.x.col(j);
    double acc = 0.0;
    for (Index i = 0; i < data.n(); ++i) acc += detail::deriv(state.margins[i]) * data.y[i] * col[i];
    return acc / static_cast<double>(data.n());
}

/// (1/n) sum_i V'(u_i) y_i
inline double intercept_gradient(const FitState& state, const Dataset& data)
{
    double acc = 0.0;
    for (Index i = 0; i < data.n(); ++i) acc += detail::deriv(state.margins[i]) * data.y[i];
    return acc / static_cast<double>(data.n());
}

/// Full gradient of the empirical loss with respect to b, for all p coordinates.
inline Vector loss_gradient(const FitState& state, const Dataset& data)
{
    Vector r(data.n());
    for (Index i = 0; i < data.n(); ++i) r[i] = detail::deriv(state.margins[i]) * data.y[i];
    return data.x.transpose() * r / static_cast<double>(data.n());
}

namespace detail {

inline void shift_margins(FitState& state, const Dataset& data, Index j, double delta)
{
    state.margins.array() += delta * data.y.array() * data.x.col(j).array();
}

} // namespace detail

/**
 * Majorized coordinate step on b_j:
 *   b_j <- S(4 b_j - g_j, lambda1 w_j) / (4 + lambda2),
 * then u_i += y_i x_ij (b_j_new - b_j_old).
 */
inline double update_coefficient(FitState& state, const Dataset& data, const PenaltySpec& pen, Index j)
{
    const double g = coordinate_gradient(state, data, j);
    const double old = state.beta[j];
    const double z = detail::update_numerator * old - g;
    const double fresh = detail::soft_threshold(z, pen.lambda1 * pen.weights[j])
                         / (detail::update_denominator + pen.lambda2);
    if (fresh != old) {
        state.beta[j] = fresh;
        detail::shift_margins(state, data, j, fresh - old);
    }
    return fresh;
}

/// b0 <- b0 - (1/(4n)) sum_i V'(u_i) y_i, margins shifted by y_i * delta.
inline double update_intercept(FitState& state, const Dataset& data)
{
    const double g = intercept_gradient(state, data);
    const double old = state.beta0;
    const double fresh = old - g / detail::update_denominator;
    if (fresh != old) {
        state.beta0 = fresh;
        state.margins.array() += (fresh - old) * data.y.array();
    }
    return fresh;
}

/// (1/n) sum V(u_i) + penalty, using the cached margins.
inline double objective(const FitState& state, const Dataset& data, const PenaltySpec& pen)
{
    double loss = 0.0;
    for (Index i = 0; i < state.margins.size(); ++i) loss += detail::loss(state.margins[i]);
    return loss / static_cast<double>(data.n()) + pen.value(state.beta);
}

/**
 * Per-coordinate violation of the optimality conditions:
 *   b_j != 0:  |g_j + lambda1 w_j sign(b_j) + lambda2 b_j|
 *   b_j == 0:  max(0, |g_j| - lambda1 w_j)
 */
inline Vector kkt_residuals(const FitState& state, const Dataset& data, const PenaltySpec& pen)
{
    const Vector g = loss_gradient(state, data);
    Vector r(data.p());
    for (Index j = 0; j < data.p(); ++j) {
        const double b = state.beta[j];
        const double t = pen.lambda1 * pen.weights[j];
        if (b != 0.0) {
            r[j] = std::abs(g[j] + t * (b > 0 ? 1.0 : -1.0) + pen.lambda2 * b);
        } else {
            r[j] = std::max(0.0, std::abs(g[j]) - t);
        }
    }
    return r;
}

inline double kkt_max_residual(const FitState& state, const Dataset& data, const PenaltySpec& pen)
{
    return data.p() == 0 ? 0.0 : kkt_residuals(state, data, pen).maxCoeff();
}

namespace detail {

inline void check_scaled(const Dataset& data)
{
    for (Index j = 0; j < data.p(); ++j) {
        if (data.x.col(j).squaredNorm() / static_cast<double>(data.n()) > 1.0 + 1e-8) {
            throw InvalidArgument("fit_fixed: column " + std::to_string(j)
                                  + " has mean square > 1; standardize the data first");
        }
    }
}

inline double working_kkt_max(const FitState& state, const Dataset& data, const PenaltySpec& pen,
                              std::span<const Index> working)
{
    double worst = std::abs(intercept_gradient(state, data));
    for (Index j : working) {
        const double g = coordinate_gradient(state, data, j);
        const double b = state.beta[j];
        const double t = pen.lambda1 * pen.weights[j];
        const double r = b != 0.0 ? std::abs(g + t * (b > 0 ? 1.0 : -1.0) + pen.lambda2 * b)
                                  : std::max(0.0, std::abs(g) - t);
        worst = std::max(worst, r);
    }
    return worst;
}

inline double curvature(double u) noexcept { return u <= 0.5 ? 0.0 : 0.5 / (u * u * u); }

/**
 * Orthant-wise damped Newton refinement over the working set and b0.
 *
 * The pseudo-gradient of the penalized objective is the KKT residual with a
 * sign: for b_j != 0 it is g_j + lambda1 w_j sign(b_j) + lambda2 b_j; for
 * b_j == 0 it is the excess of |g_j| over lambda1 w_j (zero inside the
 * threshold). Free coordinates (nonzero, or zero with a nonzero
 * pseudo-gradient) take a Newton step inside the orthant they currently
 * occupy or would enter; coordinates leaving the orthant are clipped to zero.
 * Every accepted step strictly decreases the objective. Returns the number
 * of accepted steps.
 */
template <class Observer>
int newton_refine(FitState& state, const Dataset& data, const PenaltySpec& pen, std::span<const Index> working,
                  double target, Observer& observe, int max_steps = 50)
{
    const Index n = data.n();
    const double inv_n = 1.0 / static_cast<double>(n);
    std::vector<Index> free;
    std::vector<double> orthant;
    Vector r(n), w(n);
    int accepted = 0;
    double current = objective(state, data, pen);

    for (int step = 0; step < max_steps; ++step) {
        for (Index i = 0; i < n; ++i) {
            r[i] = deriv(state.margins[i]) * data.y[i] * inv_n;
            w[i] = curvature(state.margins[i]) * inv_n;
        }
        free.clear();
        orthant.clear();
        std::vector<double> pg{r.sum()};
        double worst = std::abs(pg[0]);
        for (Index j : working) {
            const double g = data.x.col(j).dot(r);
            const double b = state.beta[j];
            const double t = pen.lambda1 * pen.weights[j];
            double v;
            if (b != 0.0) {
                v = g + (b > 0 ? t : -t) + pen.lambda2 * b;
            } else if (g > t) {
                v = g - t;
            } else if (g < -t) {
                v = g + t;
            } else {
                continue;
            }
            free.push_back(j);
            orthant.push_back(b != 0.0 ? (b > 0 ? 1.0 : -1.0) : (v > 0 ? -1.0 : 1.0));
            pg.push_back(v);
            worst = std::max(worst, std::abs(v));
        }
        if (worst <= target) break;

        const Index d = static_cast<Index>(free.size()) + 1;
        const Vector grad = Eigen::Map<const Vector>(pg.data(), d);
        Matrix z(n, d);
        z.col(0).setOnes();
        for (Index k = 1; k < d; ++k) z.col(k) = data.x.col(free[static_cast<std::size_t>(k - 1)]);

        // (H + mu I) delta = -grad with H = Z' W Z + lambda2 on the b block.
        const double mu = 1e-10 + 1e-8 * w.maxCoeff();
        std::vector<Index> curved;
        for (Index i = 0; i < n; ++i) {
            if (w[i] > 0) curved.push_back(i);
        }
        const Index m = static_cast<Index>(curved.size());
        Vector delta;
        if (d <= m) {
            Matrix h = z.transpose() * w.asDiagonal() * z;
            h.diagonal().array() += mu;
            h.diagonal().tail(d - 1).array() += pen.lambda2;
            delta = -h.ldlt().solve(grad);
        } else {
            // b block is c I + U' W U with U the curved rows of the free
            // columns (Woodbury); b0 is eliminated through its Schur complement.
            const double c = pen.lambda2 + mu;
            const Index q = d - 1;
            Matrix u(m, q);
            Vector wc(m);
            for (Index k = 0; k < m; ++k) {
                u.row(k) = z.row(curved[static_cast<std::size_t>(k)]).tail(q);
                wc[k] = w[curved[static_cast<std::size_t>(k)]];
            }
            Matrix core = u * u.transpose();
            core.diagonal().array() += c * wc.array().inverse();
            const Eigen::LDLT<Matrix> fac(core);
            auto solve_b = [&](const Vector& v) -> Vector { return (v - u.transpose() * fac.solve(u * v)) / c; };
            const Vector cross = u.transpose() * wc;
            const Vector a_grad = solve_b(grad.tail(q));
            const Vector a_cross = solve_b(cross);
            const double schur = wc.sum() + mu - cross.dot(a_cross);
            delta.resize(d);
            delta[0] = (-grad[0] + cross.dot(a_grad)) / schur;
            delta.tail(q) = -(a_grad + a_cross * delta[0]);
        }
        for (Index k = 1; k < d; ++k) {
            if (state.beta[free[static_cast<std::size_t>(k - 1)]] == 0.0 && delta[k] * orthant[static_cast<std::size_t>(k - 1)] <= 0) {
                delta[k] = 0.0;
            }
        }
        if (!delta.allFinite() || !(grad.dot(delta) < 0)) delta = -grad;

        FitState trial = state;
        Vector moved(d);
        double t = 1.0;
        bool ok = false;
        for (int halving = 0; halving < 60; ++halving, t *= 0.5) {
            trial.beta0 = state.beta0 + t * delta[0];
            moved[0] = t * delta[0];
            for (Index k = 1; k < d; ++k) {
                const Index j = free[static_cast<std::size_t>(k - 1)];
                double fresh = state.beta[j] + t * delta[k];
                if (fresh * orthant[static_cast<std::size_t>(k - 1)] <= 0) fresh = 0.0;
                trial.beta[j] = fresh;
                moved[k] = fresh - state.beta[j];
            }
            trial.margins = state.margins + (z * moved).cwiseProduct(data.y);
            const double value = objective(trial, data, pen);
            if (value < current + std::min(0.0, 1e-4 * grad.dot(moved))) {
                ok = true;
                const double before = current;
                current = value;
                std::swap(state.beta, trial.beta);
                state.beta0 = trial.beta0;
                std::swap(state.margins, trial.margins);
                observe(UpdateEvent{UpdateEvent::refinement, before, value, state});
                break;
            }
        }
        if (!ok) break;
        ++accepted;
    }
    return accepted;
}

// Coordinate descent restricted to `working`; no argument validation.
template <class Observer>
FitState fit_fixed_impl(const Dataset& data, const PenaltySpec& pen, FitState state, const SolverConfig& cfg,
                        std::span<const Index> working, Observer&& observe)
{
    const double scale = dwd_majorization.lipschitz;
    double tol = cfg.tol;
    std::vector<Index> active;
    active.reserve(working.size());

    auto sweep = [&](std::span<const Index> coords) {
        double worst = 0.0;
        for (Index j : coords) {
            const double old = state.beta[j];
            const double fresh = update_coefficient(state, data, pen, j);
            const double d = fresh - old;
            worst = std::max(worst, scale * d * d);
            observe(UpdateEvent{j, old, fresh, state});
        }
        const double old0 = state.beta0;
        const double fresh0 = update_intercept(state, data);
        const double d0 = fresh0 - old0;
        worst = std::max(worst, scale * d0 * d0);
        observe(UpdateEvent{UpdateEvent::intercept, old0, fresh0, state});
        if (++state.cycles > cfg.max_cycles) {
            throw NonConvergence("fit_fixed: exceeded " + std::to_string(cfg.max_cycles) + " cycles", state);
        }
        return worst;
    };

    // Cycles until a full pass moves nothing by more than tol; false if the
    // budget runs out first.
    auto converge = [&](double tol, std::int64_t budget) {
        const std::int64_t start = state.cycles;
        for (;;) {
            if (sweep(working) < tol) return true;
            if (state.cycles - start >= budget) return false;
            if (!cfg.active_set) continue;
            active.clear();
            for (Index j : working) {
                if (state.beta[j] != 0.0) active.push_back(j);
            }
            while (sweep(active) >= tol) {
                if (state.cycles - start >= budget) return false;
            }
        }
    };

    constexpr auto unlimited = std::numeric_limits<std::int64_t>::max();
    auto budget = [&] {
        const Index support = static_cast<Index>((state.beta.array() != 0.0).count()) + 1;
        return cfg.newton_refine ? 2 * std::min(data.n(), support) + 20 : unlimited;
    };
    // With refinement available, slow coordinate descent hands over early.
    bool settled = converge(tol, cfg.newton_refine ? 50 * budget() : unlimited);

    // The stopping rule alone leaves KKT residuals of order 4 sqrt(tol).
    // Refine with Newton steps; if those stall, tighten tol and cycle again.
    while (!settled || working_kkt_max(state, data, pen, working) > cfg.kkt_tol) {
        if (cfg.newton_refine) {
            newton_refine(state, data, pen, working, 0.1 * cfg.kkt_tol, observe);
            if (working_kkt_max(state, data, pen, working) <= cfg.kkt_tol) break;
        }
        if (settled) tol = std::max(tol * 1e-2, std::numeric_limits<double>::min());
        settled = converge(tol, budget());
    }
    return state;
}

} // namespace detail

/**
 * Minimizes the penalized DWD objective at one penalty level by majorized
 * cyclic coordinate descent, starting from `init`.
 *
 * Each cycle updates every coordinate in the working set and then the
 * intercept. With the active-set option, once a full cycle moves something,
 * cycles run over the nonzero coordinates only until they settle, then a
 * full cycle checks whether the support changed. `working` restricts the
 * coordinates that may move (used by the path screening); empty means all.
 *
 * Data columns must satisfy (1/n) sum x_ij^2 <= 1, which standardize() gives.
 */
template <class Observer = NoObserver>
FitState fit_fixed(const Dataset& data, const PenaltySpec& pen, FitState init, const SolverConfig& cfg = {},
                   std::span<const Index> working = {}, Observer&& observe = {})
{
    data.validate_for_fit();
    pen.validate(data.p());
    cfg.validate();
    detail::check_scaled(data);
    if (init.beta.size() != data.p()) throw InvalidArgument("fit_fixed: initial coefficients have wrong length");
    if (init.margins.size() != data.n()) init.refresh_margins(data);

    std::vector<Index> all;
    if (working.empty()) {
        all.resize(static_cast<std::size_t>(data.p()));
        for (Index j = 0; j < data.p(); ++j) all[static_cast<std::size_t>(j)] = j;
        working = all;
    }
    for (Index j : working) {
        if (j < 0 || j >= data.p()) throw InvalidArgument("fit_fixed: working-set index out of range");
    }
    return detail::fit_fixed_impl(data, pen, std::move(init), cfg, working, std::forward<Observer>(observe));
}

inline FitState fit_fixed(const Dataset& data, const PenaltySpec& pen, const SolverConfig& cfg = {})
{
    return fit_fixed(data, pen, FitState::zeros(data), cfg);
}

} // namespace sdwd
