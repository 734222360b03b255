#pragma once
#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <optional>
#include <string>
#include <thread>
#include <vector>
#include <sdwd/data.hpp>
#include <sdwd/model.hpp>
#include <sdwd/path.hpp>
#include <sdwd/rng.hpp>

namespace sdwd {

inline std::vector<double> default_lambda2_grid() { return {1e-4, 1e-3, 1e-2, 0.1, 1.0, 5.0, 10.0}; }

struct CvConfig
{
    int folds = 5;
    std::vector<double> lambda2_grid = default_lambda2_grid();
    PathConfig path;
    std::uint64_t seed = 1;
    /// Worker threads for independent (lambda2, fold) fits; results do not depend on it.
    int threads = 1;

    void validate() const
    {
        if (folds < 2) throw InvalidArgument("cv: folds must be >= 2");
        if (lambda2_grid.empty()) throw InvalidArgument("cv: lambda2 grid is empty");
        for (double l2 : lambda2_grid) {
            if (!std::isfinite(l2) || l2 < 0) throw InvalidArgument("cv: lambda2 values must be finite and >= 0");
        }
        if (threads < 1) throw InvalidArgument("cv: threads must be >= 1");
    }
};

struct CvResult
{
    std::vector<double> lambda2_grid;
    /// lambda1 grid used for each lambda2 (shared by all folds).
    std::vector<Vector> lambda1_grids;
    /// Rows follow lambda2_grid, columns follow the lambda1 grid.
    Matrix error_surface;
    Matrix se_surface;
    Matrix nnz_mean;
    Index best_lambda2_index = 0;
    Index best_lambda1_index = 0;
    double best_lambda1 = 0.0;
    double best_lambda2 = 0.0;
    DwdModel final_model;
    /// Fold of every row (empty for holdout tuning).
    std::vector<int> fold_of;
    /// aenet only: the elastic-net pair that produced the adaptive weights.
    std::optional<double> stage_one_lambda1;
    std::optional<double> stage_one_lambda2;
};

/**
 * Stratified fold assignment. Positives and negatives are shuffled
 * separately, then dealt round-robin (positives first) so fold sizes and
 * per-fold class counts each differ by at most one. folds == n is
 * leave-one-out.
 */
inline std::vector<int> kfold_split(Index n, int folds, std::uint64_t seed, const Vector& labels)
{
    if (labels.size() != n) throw InvalidArgument("kfold_split: label count does not match n");
    if (folds < 2 || folds > n) throw InvalidArgument("kfold_split: need 2 <= folds <= n");
    std::vector<Index> pos, neg;
    for (Index i = 0; i < n; ++i) (labels[i] > 0 ? pos : neg).push_back(i);
    if (folds < n && (static_cast<Index>(pos.size()) < folds || static_cast<Index>(neg.size()) < folds)) {
        throw DataError("kfold_split: each class needs at least " + std::to_string(folds) + " members (have "
                        + std::to_string(pos.size()) + " positive, " + std::to_string(neg.size()) + " negative)");
    }
    Rng rng(seed);
    rng.shuffle(pos);
    rng.shuffle(neg);
    std::vector<int> fold(static_cast<std::size_t>(n));
    std::size_t slot = 0;
    for (Index i : pos) fold[static_cast<std::size_t>(i)] = static_cast<int>(slot++ % static_cast<std::size_t>(folds));
    for (Index i : neg) fold[static_cast<std::size_t>(i)] = static_cast<int>(slot++ % static_cast<std::size_t>(folds));
    return fold;
}

namespace detail {

/// Runs body(0..count-1) on up to `threads` workers; rethrows the lowest-index failure.
template <class Body>
void parallel_for(std::size_t count, int threads, Body body)
{
    std::vector<std::exception_ptr> errors(count);
    auto run = [&](std::size_t i) {
        try {
            body(i);
        } catch (...) {
            errors[i] = std::current_exception();
        }
    };
    const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(std::max(threads, 1)), count);
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) run(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (std::size_t i; (i = next.fetch_add(1)) < count;) run(i);
            });
        }
        for (auto& t : pool) t.join();
    }
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

/// Solution at grid[k], reached by a warm-started path over grid[0..k].
inline FitState solve_at(const Dataset& data, PathConfig cfg, double lambda2, const Vector& weights, const Vector& grid,
                         Index k)
{
    cfg.lambda2 = lambda2;
    const Vector head = grid.head(k + 1);
    const SolutionPath path = fit_path(data, cfg, weights, head);
    return path.state(data, static_cast<std::size_t>(k));
}

struct Split
{
    Dataset train;
    Dataset test;
};

struct StageOne
{
    double lambda2;
    Vector grid;
    Index k;
};

struct Prepared
{
    Standardized train;
    Dataset test;
    Vector weights;
};

inline Vector stage_one_weights(const Dataset& data, const PathConfig& cfg, const StageOne& s)
{
    const FitState enet = solve_at(data, cfg, s.lambda2, Vector::Ones(data.p()), s.grid, s.k);
    return adaptive_weights(enet.beta, data.n());
}

inline Index count_errors(const Dataset& test, const FitState& state)
{
    Index wrong = 0;
    for (Index i = 0; i < test.n(); ++i) {
        const double s = state.beta0 + test.x.row(i).dot(state.beta);
        if ((s >= 0.0 ? 1.0 : -1.0) != test.y[i]) ++wrong;
    }
    return wrong;
}

/**
 * Shared tuning engine. Every split is standardized on its own training
 * rows; the lambda1 grid for each lambda2 comes from `full` and is shared
 * across splits. The best pair is refit on `full`.
 */
inline CvResult tune(const Dataset& full, const std::vector<Split>& splits, const CvConfig& cfg, PenaltyMode mode,
                     const std::optional<StageOne>& stage_one)
{
    const std::vector<double> l2grid = mode == PenaltyMode::lasso ? std::vector<double>{0.0} : cfg.lambda2_grid;
    const Index nl2 = static_cast<Index>(l2grid.size());
    const Index nf = static_cast<Index>(splits.size());

    const Standardized std_full = standardize(full);
    const Dataset& fdata = std_full.data;
    cfg.path.validate(fdata.n(), fdata.p());
    const Vector full_weights = stage_one ? stage_one_weights(fdata, cfg.path, *stage_one) : Vector::Ones(fdata.p());

    CvResult res;
    res.lambda2_grid = l2grid;
    const double lmax = lambda_max(fdata, full_weights, cfg.path.solver);
    if (!(lmax > 0)) throw DataError("cv: lambda_max is zero; no feature carries signal");
    const Vector grid = lambda_grid(lmax, cfg.path, fdata.n(), fdata.p());
    const Index nk = grid.size();
    for (Index l = 0; l < nl2; ++l) res.lambda1_grids.push_back(grid);

    std::vector<Prepared> prep(static_cast<std::size_t>(nf));
    parallel_for(static_cast<std::size_t>(nf), cfg.threads, [&](std::size_t f) {
        Prepared& pr = prep[f];
        pr.train = standardize(splits[f].train);
        pr.test = apply_standardizer(pr.train.standardizer, splits[f].test);
        pr.weights = stage_one ? stage_one_weights(pr.train.data, cfg.path, *stage_one)
                               : Vector::Ones(pr.train.data.p());
    });

    // errors[(l * nf + f) * nk + k]
    std::vector<double> err(static_cast<std::size_t>(nl2 * nf * nk));
    std::vector<double> nnz(err.size());
    parallel_for(static_cast<std::size_t>(nl2 * nf), cfg.threads, [&](std::size_t task) {
        const Index l = static_cast<Index>(task) / nf;
        const Index f = static_cast<Index>(task) % nf;
        const Prepared& pr = prep[static_cast<std::size_t>(f)];
        PathConfig pc = cfg.path;
        pc.lambda2 = l2grid[static_cast<std::size_t>(l)];
        SolutionPath path;
        try {
            path = fit_path(pr.train.data, pc, pr.weights, grid);
        } catch (const NonConvergence& e) {
            throw NonConvergence(std::string(e.what()) + " (split " + std::to_string(f + 1) + ", lambda2="
                                     + format_double(pc.lambda2) + ")",
                                 e.last_state());
        }
        const double m = static_cast<double>(pr.test.n());
        for (Index k = 0; k < nk; ++k) {
            const FitState s = path.state(pr.train.data, static_cast<std::size_t>(k));
            const std::size_t at = static_cast<std::size_t>((l * nf + f) * nk + k);
            err[at] = static_cast<double>(count_errors(pr.test, s)) / m;
            nnz[at] = static_cast<double>(path.nonzero_counts[static_cast<std::size_t>(k)]);
        }
    });

    res.error_surface.resize(nl2, nk);
    res.se_surface.resize(nl2, nk);
    res.nnz_mean.resize(nl2, nk);
    for (Index l = 0; l < nl2; ++l) {
        for (Index k = 0; k < nk; ++k) {
            double sum = 0.0, sumz = 0.0;
            for (Index f = 0; f < nf; ++f) {
                sum += err[static_cast<std::size_t>((l * nf + f) * nk + k)];
                sumz += nnz[static_cast<std::size_t>((l * nf + f) * nk + k)];
            }
            const double mean = sum / static_cast<double>(nf);
            double se;
            if (nf > 1) {
                double ss = 0.0;
                for (Index f = 0; f < nf; ++f) {
                    const double d = err[static_cast<std::size_t>((l * nf + f) * nk + k)] - mean;
                    ss += d * d;
                }
                se = std::sqrt(ss / static_cast<double>(nf - 1) / static_cast<double>(nf));
            } else {
                // Single holdout: binomial standard error.
                se = std::sqrt(mean * (1.0 - mean) / static_cast<double>(splits.front().test.n()));
            }
            res.error_surface(l, k) = mean;
            res.se_surface(l, k) = se;
            res.nnz_mean(l, k) = sumz / static_cast<double>(nf);
        }
    }

    // Smallest error, then largest lambda1, then smallest lambda2.
    constexpr double tie = 1e-12;
    bool have = false;
    for (Index l = 0; l < nl2; ++l) {
        for (Index k = 0; k < nk; ++k) {
            const double e = res.error_surface(l, k);
            const double l1 = grid[k];
            const double l2 = l2grid[static_cast<std::size_t>(l)];
            bool better;
            if (!have) {
                better = true;
            } else {
                const double be = res.error_surface(res.best_lambda2_index, res.best_lambda1_index);
                if (e < be - tie) better = true;
                else if (e > be + tie) better = false;
                else if (l1 != res.best_lambda1) better = l1 > res.best_lambda1;
                else better = l2 < res.best_lambda2;
            }
            if (better) {
                have = true;
                res.best_lambda2_index = l;
                res.best_lambda1_index = k;
                res.best_lambda1 = l1;
                res.best_lambda2 = l2;
            }
        }
    }

    const FitState state = solve_at(fdata, cfg.path, res.best_lambda2, full_weights, grid, res.best_lambda1_index);
    res.final_model = make_model(mode, std_full.standardizer, state,
                                 PenaltySpec{res.best_lambda1, res.best_lambda2, full_weights});
    res.final_model.meta.nlambda = nk;
    res.final_model.meta.nlambda2 = nl2;
    res.final_model.meta.seed = cfg.seed;
    return res;
}

inline std::vector<Split> fold_splits(const Dataset& raw, const std::vector<int>& fold_of, int folds)
{
    std::vector<Split> out(static_cast<std::size_t>(folds));
    for (int f = 0; f < folds; ++f) {
        std::vector<Index> tr, te;
        for (Index i = 0; i < raw.n(); ++i) (fold_of[static_cast<std::size_t>(i)] == f ? te : tr).push_back(i);
        out[static_cast<std::size_t>(f)] = Split{raw.rows(tr), raw.rows(te)};
    }
    return out;
}

inline CvResult tune_mode(const Dataset& full, const std::vector<Split>& splits, const CvConfig& cfg, PenaltyMode mode)
{
    if (mode != PenaltyMode::aenet) return tune(full, splits, cfg, mode, std::nullopt);
    // Stage one: elastic net tuned on the same splits.
    const CvResult enet = tune(full, splits, cfg, PenaltyMode::enet, std::nullopt);
    const StageOne s1{enet.best_lambda2, enet.lambda1_grids[static_cast<std::size_t>(enet.best_lambda2_index)],
                      enet.best_lambda1_index};
    CvResult res = tune(full, splits, cfg, PenaltyMode::aenet, s1);
    res.stage_one_lambda1 = enet.best_lambda1;
    res.stage_one_lambda2 = enet.best_lambda2;
    return res;
}

} // namespace detail

/**
 * K-fold cross-validation over (lambda1, lambda2). Raw data in; each fold is
 * standardized on its own training rows. lasso uses lambda2 = 0 only. aenet
 * runs the elastic-net CV first and builds adaptive weights per fold from that
 * fold's training rows at the selected elastic-net pair.
 */
inline CvResult cross_validate(const Dataset& raw, const CvConfig& cfg, PenaltyMode mode)
{
    cfg.validate();
    raw.validate_for_fit();
    if (cfg.folds > raw.n()) throw InvalidArgument("cv: folds must be <= n");
    const std::vector<int> fold_of = kfold_split(raw.n(), cfg.folds, cfg.seed, raw.y);
    CvResult res = detail::tune_mode(raw, detail::fold_splits(raw, fold_of, cfg.folds), cfg, mode);
    res.fold_of = fold_of;
    return res;
}

/// Tuning on an explicit validation set; the final model is the training fit at the selected pair.
inline CvResult validate_holdout(const Dataset& train, const Dataset& valid, const CvConfig& cfg, PenaltyMode mode)
{
    cfg.validate();
    train.validate_for_fit();
    valid.validate();
    if (valid.n() == 0) throw DataError("validation set is empty");
    if (valid.p() != train.p()) throw DataError("validation set has a different feature count");
    return detail::tune_mode(train, {detail::Split{train, valid}}, cfg, mode);
}

} // namespace sdwd
