#pragma once
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <string>
#include <unistd.h>
#include <sdwd/sdwd.hpp>

namespace sdwd::test {

/// Gaussian design with a shift of `signal * y` on the first `informative` columns.
inline Dataset random_raw(std::uint64_t seed, Index n, Index p, Index informative = 3, double signal = 0.5)
{
    Rng rng(seed);
    Dataset d;
    d.x.resize(n, p);
    d.y.resize(n);
    for (Index i = 0; i < n; ++i) {
        d.y[i] = i % 2 == 0 ? 1.0 : -1.0;
        for (Index j = 0; j < p; ++j) d.x(i, j) = rng.gaussian() + (j < informative ? signal * d.y[i] : 0.0);
    }
    return d;
}

inline Dataset random_standardized(std::uint64_t seed, Index n, Index p, Index informative = 3, double signal = 0.5)
{
    return standardize(random_raw(seed, n, p, informative, signal)).data;
}

/// Objective straight from the definition, no cached margins.
inline double plain_objective(const Dataset& d, double b0, const Vector& b, const PenaltySpec& pen)
{
    double acc = 0.0;
    for (Index i = 0; i < d.n(); ++i) {
        const double u = d.y[i] * (b0 + d.x.row(i).dot(b));
        acc += u <= 0.5 ? 1.0 - u : 0.25 / u;
    }
    return acc / static_cast<double>(d.n()) + pen.value(b);
}

/// V(a) - V(b) given d = a - b, without cancellation when both are in the same branch.
inline double loss_difference(double a, double b, double d)
{
    if (a <= 0.5 && b <= 0.5) return -d;
    if (a > 0.5 && b > 0.5) return -d / (4.0 * a * b);
    return (a <= 0.5 ? 1.0 - a : 0.25 / a) - (b <= 0.5 ? 1.0 - b : 0.25 / b);
}

/**
 * Objective change caused by moving coordinate j (or the intercept, j < 0)
 * by delta, evaluated at the post-update margins `after`.
 */
inline double objective_change(const Dataset& d, const PenaltySpec& pen, const Vector& after, Index j, double old_value,
                               double new_value)
{
    const double delta = new_value - old_value;
    double acc = 0.0;
    for (Index i = 0; i < d.n(); ++i) {
        const double di = d.y[i] * (j < 0 ? 1.0 : d.x(i, j)) * delta;
        acc += loss_difference(after[i], after[i] - di, di);
    }
    acc /= static_cast<double>(d.n());
    if (j >= 0) {
        const double w = pen.lambda1 * pen.weights[j];
        acc += w * (std::abs(new_value) - std::abs(old_value)) + 0.5 * pen.lambda2 * delta * (new_value + old_value);
    }
    return acc;
}

struct DescentTrace
{
    std::int64_t updates = 0;
    std::int64_t increases = 0;       ///< objective rose by more than 1e-12
    std::int64_t not_strict = 0;      ///< moved by >= 1e-10 without a strict decrease
    std::int64_t refinements = 0;
    double worst_change = -std::numeric_limits<double>::infinity();
};

/// Fits with an observer that checks every update for descent.
inline DescentTrace trace_descent(const Dataset& d, const PenaltySpec& pen, const SolverConfig& cfg = {})
{
    DescentTrace t;
    auto observe = [&](const UpdateEvent& e) {
        ++t.updates;
        double change;
        double moved;
        if (e.coordinate == UpdateEvent::refinement) {
            ++t.refinements;
            change = e.new_value - e.old_value;
            moved = 1.0;
        } else {
            change = objective_change(d, pen, e.state.margins, e.coordinate, e.old_value, e.new_value);
            moved = std::abs(e.new_value - e.old_value);
        }
        t.worst_change = std::max(t.worst_change, change);
        if (change > 1e-12) ++t.increases;
        if (moved >= 1e-10 && !(change < 0)) ++t.not_strict;
    };
    fit_fixed(d, pen, FitState::zeros(d), cfg, {}, observe);
    return t;
}

/// Largest KKT residual (intercept included) over a path, recomputed by the oracle module.
inline double path_kkt_max(const SolutionPath& path, const Dataset& d)
{
    double worst = 0.0;
    for (std::size_t k = 0; k < path.size(); ++k) {
        worst = std::max(worst, oracle::reference_kkt_max(path.state(d, k), d, path.penalty(k)));
    }
    return worst;
}

/// Scratch directory removed on destruction.
class TempDir
{
public:
    TempDir()
    {
        static int counter = 0;
        path_ = std::filesystem::temp_directory_path()
                / ("sdwd_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() { std::filesystem::remove_all(path_); }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    std::string file(const std::string& name) const { return (path_ / name).string(); }

    std::string write(const std::string& name, const std::string& text) const
    {
        const std::string f = file(name);
        std::ofstream(f, std::ios::binary) << text;
        return f;
    }

private:
    std::filesystem::path path_;
};

inline std::string read_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
}

} // namespace sdwd::test
