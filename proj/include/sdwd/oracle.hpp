#pragma once
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>
#include <Eigen/Eigenvalues>
#include <sdwd/data.hpp>
#include <sdwd/loss.hpp>
#include <sdwd/path.hpp>
#include <sdwd/rng.hpp>
#include <sdwd/solver.hpp>

// Reference solver for validating the coordinate-descent solver on small
// problems. Uses only the scalar loss functions and the shared data types;
// objective, gradient, prox and KKT are computed independently here.

namespace sdwd::oracle {

struct OracleConfig
{
    /// Fixed step; 0 means 1/L with L = 4 ||[1 X]||_2^2 / n + lambda2.
    double step = 0.0;
    std::int64_t max_iters = 1000000;
    /// Stop once the gradient mapping's sup-norm falls below this.
    double tol = 1e-9;
    /// Record the objective after every iteration.
    bool trace = false;
};

struct OracleResult
{
    FitState state;
    std::int64_t iterations = 0;
    double step = 0.0;
    double gradient_mapping = 0.0;
    std::vector<double> objective_trace;
};

namespace detail {

struct Problem
{
    const Dataset& data;
    const PenaltySpec& pen;

    double smooth(const Vector& x) const
    {
        const Index n = data.n();
        const Vector u = (data.x * x.tail(data.p()) + Vector::Constant(n, x[0])).cwiseProduct(data.y);
        double acc = 0.0;
        for (Index i = 0; i < n; ++i) acc += dwd_loss(u[i]);
        return acc / static_cast<double>(n) + 0.5 * pen.lambda2 * x.tail(data.p()).squaredNorm();
    }

    double nonsmooth(const Vector& x) const
    {
        return pen.lambda1 * (pen.weights.array() * x.tail(data.p()).array().abs()).sum();
    }

    double total(const Vector& x) const { return smooth(x) + nonsmooth(x); }

    Vector gradient(const Vector& x) const
    {
        const Index n = data.n();
        const Vector u = (data.x * x.tail(data.p()) + Vector::Constant(n, x[0])).cwiseProduct(data.y);
        Vector r(n);
        for (Index i = 0; i < n; ++i) r[i] = dwd_loss_deriv(u[i]) * data.y[i] / static_cast<double>(n);
        Vector g(x.size());
        g[0] = r.sum();
        g.tail(data.p()) = data.x.transpose() * r + pen.lambda2 * x.tail(data.p());
        return g;
    }

    Vector prox(const Vector& v, double step) const
    {
        Vector out = v;
        for (Index j = 0; j < data.p(); ++j) {
            out[j + 1] = soft_threshold(v[j + 1], step * pen.lambda1 * pen.weights[j]);
        }
        return out;
    }
};

inline double lipschitz_bound(const Dataset& data, double lambda2)
{
    Matrix z(data.n(), data.p() + 1);
    z.col(0).setOnes();
    z.rightCols(data.p()) = data.x;
    const Matrix gram = z.transpose() * z;
    Eigen::SelfAdjointEigenSolver<Matrix> eig(gram, Eigen::EigenvaluesOnly);
    return 4.0 * eig.eigenvalues().maxCoeff() / static_cast<double>(data.n()) + lambda2;
}

} // namespace detail

/**
 * Monotone accelerated proximal gradient on (b0, b) jointly: a gradient step
 * on the loss plus ridge term, then soft-thresholding of b by
 * step * lambda1 * w_j. A candidate that would raise the objective is
 * rejected and momentum restarts, so objective values never increase.
 */
inline OracleResult oracle_fit(const Dataset& data, const PenaltySpec& pen, const OracleConfig& cfg = {})
{
    data.validate_for_fit();
    pen.validate(data.p());
    if (cfg.step < 0 || !std::isfinite(cfg.step)) throw InvalidArgument("oracle: step must be > 0");

    const detail::Problem prob{data, pen};
    const double step = cfg.step > 0 ? cfg.step : 1.0 / detail::lipschitz_bound(data, pen.lambda2);

    const Index dim = data.p() + 1;
    Vector x = Vector::Zero(dim);
    Vector x_prev = x;
    Vector y = x;
    double fx = prob.total(x);
    double t = 1.0;

    OracleResult res;
    res.step = step;
    for (std::int64_t it = 1;; ++it) {
        const Vector z = prob.prox(y - step * prob.gradient(y), step);
        const double fz = prob.total(z);
        x_prev = x;
        // A plain prox-gradient step from x (t == 1) descends in exact
        // arithmetic; accept it even when rounding says otherwise.
        const bool accepted = fz <= fx || t == 1.0;
        if (accepted) {
            x = z;
            fx = fz;
        }
        if (cfg.trace) res.objective_trace.push_back(fx);
        const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        if (accepted) {
            y = x + ((t - 1.0) / t_next) * (x - x_prev);
            t = t_next;
        } else {
            y = x;
            t = 1.0;
        }

        // Gradient mapping at the current iterate.
        const Vector mapped = prob.prox(x - step * prob.gradient(x), step);
        const double gm = ((x - mapped) / step).cwiseAbs().maxCoeff();
        res.gradient_mapping = gm;
        res.iterations = it;
        if (gm <= cfg.tol) break;
        if (it >= cfg.max_iters) {
            FitState last = FitState::from(data, x[0], x.tail(data.p()));
            throw NonConvergence("oracle_fit: exceeded " + std::to_string(cfg.max_iters)
                                     + " iterations (gradient mapping " + std::to_string(gm) + ")",
                                 last);
        }
    }
    res.state = FitState::from(data, x[0], x.tail(data.p()));
    return res;
}

/// Objective recomputed from (b0, b) without using cached margins.
inline double reference_objective(const FitState& s, const Dataset& data, const PenaltySpec& pen)
{
    Vector x(data.p() + 1);
    x[0] = s.beta0;
    x.tail(data.p()) = s.beta;
    return detail::Problem{data, pen}.total(x);
}

/// Max violation of the optimality conditions, including the intercept equation.
inline double reference_kkt_max(const FitState& s, const Dataset& data, const PenaltySpec& pen)
{
    Vector x(data.p() + 1);
    x[0] = s.beta0;
    x.tail(data.p()) = s.beta;
    const Vector g = detail::Problem{data, pen}.gradient(x);  // includes lambda2 * b
    double worst = std::abs(g[0]);
    for (Index j = 0; j < data.p(); ++j) {
        const double b = s.beta[j];
        const double t = pen.lambda1 * pen.weights[j];
        const double r = b != 0.0 ? std::abs(g[j + 1] + (b > 0 ? t : -t)) : std::max(0.0, std::abs(g[j + 1]) - t);
        worst = std::max(worst, r);
    }
    return worst;
}

struct CompareReport
{
    double objective_a = 0.0;
    double objective_b = 0.0;
    double objective_gap = 0.0;      ///< objective_a - objective_b
    double relative_gap = 0.0;       ///< |gap| / (1 + |objective_b|)
    double coefficient_gap = 0.0;    ///< max-norm over (b0, b)
    Index support_difference = 0;    ///< size of the symmetric difference of supports
    double kkt_a = 0.0;
    double kkt_b = 0.0;
};

/// Support uses |b_j| > support_tol to decide nonzero.
inline CompareReport compare(const FitState& a, const FitState& b, const Dataset& data, const PenaltySpec& pen,
                             double support_tol = 0.0)
{
    if (a.beta.size() != data.p() || b.beta.size() != data.p()) {
        throw InvalidArgument("compare: coefficient lengths do not match the data");
    }
    CompareReport r;
    r.objective_a = reference_objective(a, data, pen);
    r.objective_b = reference_objective(b, data, pen);
    r.objective_gap = r.objective_a - r.objective_b;
    r.relative_gap = std::abs(r.objective_gap) / (1.0 + std::abs(r.objective_b));
    r.coefficient_gap = std::max(std::abs(a.beta0 - b.beta0), data.p() ? (a.beta - b.beta).cwiseAbs().maxCoeff() : 0.0);
    for (Index j = 0; j < data.p(); ++j) {
        if ((std::abs(a.beta[j]) > support_tol) != (std::abs(b.beta[j]) > support_tol)) ++r.support_difference;
    }
    r.kkt_a = reference_kkt_max(a, data, pen);
    r.kkt_b = reference_kkt_max(b, data, pen);
    return r;
}

enum class BatteryMode { lasso, enet, aenet };

struct BatteryConfig
{
    int instances = 50;
    std::uint64_t seed = 1;
    Index min_n = 10, max_n = 50;
    Index min_p = 5, max_p = 20;
    double objective_tol = 1e-6;     ///< relative objective gap
    double coefficient_tol = 1e-4;   ///< max-norm gap, checked when lambda2 > 0
    SolverConfig solver;
    OracleConfig oracle;
};

struct InstanceReport
{
    int id = 0;
    Index n = 0, p = 0;
    BatteryMode mode = BatteryMode::lasso;
    double lambda1 = 0.0, lambda2 = 0.0;
    CompareReport gaps;
    std::string error;   ///< set when either solver failed
    bool passed = false;
};

namespace detail {

/// Gaussian design with a shift of 0.5 * y on a few features, standardized.
inline Dataset random_instance(Rng& rng, Index n, Index p)
{
    Dataset d;
    d.x.resize(n, p);
    d.y.resize(n);
    for (Index i = 0; i < n; ++i) {
        d.y[i] = i % 2 == 0 ? 1.0 : -1.0;
        for (Index j = 0; j < p; ++j) d.x(i, j) = rng.gaussian() + (j < 3 ? 0.5 * d.y[i] : 0.0);
    }
    return standardize(d).data;
}

} // namespace detail

/**
 * Random solver-versus-oracle instances: n, p uniform in the configured
 * ranges, lambda1 from {0, 0.01, 0.1, lambda_max/2}, lambda2 from
 * {0, 0.1, 1} (lasso: 0), modes cycling lasso, enet, aenet. The pair
 * (0, 0) is redrawn since the unpenalized problem need not have a minimizer.
 * aenet weights come from the solver's elastic-net fit at the same pair.
 */
inline std::vector<InstanceReport> run_battery(const BatteryConfig& cfg)
{
    if (cfg.instances < 1 || cfg.min_n < 2 || cfg.max_n < cfg.min_n || cfg.min_p < 1 || cfg.max_p < cfg.min_p) {
        throw InvalidArgument("oracle battery: bad size ranges");
    }
    Rng rng(cfg.seed);
    std::vector<InstanceReport> out;
    for (int id = 0; id < cfg.instances; ++id) {
        InstanceReport r;
        r.id = id + 1;
        r.n = cfg.min_n + static_cast<Index>(rng.below(static_cast<std::uint64_t>(cfg.max_n - cfg.min_n + 1)));
        r.p = cfg.min_p + static_cast<Index>(rng.below(static_cast<std::uint64_t>(cfg.max_p - cfg.min_p + 1)));
        r.mode = static_cast<BatteryMode>(id % 3);
        const Dataset data = detail::random_instance(rng, r.n, r.p);
        int l1_choice, l2_choice;
        do {
            l1_choice = static_cast<int>(rng.below(4));
            l2_choice = r.mode == BatteryMode::lasso ? 0 : static_cast<int>(rng.below(3));
        } while (l1_choice == 0 && l2_choice == 0);
        r.lambda2 = std::vector<double>{0.0, 0.1, 1.0}[static_cast<std::size_t>(l2_choice)];
        try {
            Vector weights = Vector::Ones(r.p);
            const auto pick_l1 = [&](const Vector& w) {
                return l1_choice == 3 ? 0.5 * lambda_max(data, w, cfg.solver)
                                      : std::vector<double>{0.0, 0.01, 0.1}[static_cast<std::size_t>(l1_choice)];
            };
            r.lambda1 = pick_l1(weights);
            if (r.mode == BatteryMode::aenet) {
                const FitState enet = fit_fixed(data, PenaltySpec{r.lambda1, r.lambda2, weights}, cfg.solver);
                weights = adaptive_weights(enet.beta, data.n());
                r.lambda1 = pick_l1(weights);
            }
            const PenaltySpec pen{r.lambda1, r.lambda2, weights};
            const FitState a = fit_fixed(data, pen, cfg.solver);
            const OracleResult b = oracle_fit(data, pen, cfg.oracle);
            r.gaps = compare(a, b.state, data, pen);
            r.passed = r.gaps.relative_gap <= cfg.objective_tol
                       && (r.lambda2 == 0.0 || r.gaps.coefficient_gap <= cfg.coefficient_tol);
        } catch (const Error& e) {
            r.error = e.what();
            r.passed = false;
        }
        out.push_back(std::move(r));
    }
    return out;
}

} // namespace sdwd::oracle
