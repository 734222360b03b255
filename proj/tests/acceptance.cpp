#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>
#include "helpers.hpp"
#include "loss_properties.hpp"

using namespace sdwd;

namespace {

struct Outcome
{
    bool passed;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0)
{
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c);
    return buf;
}

/// Largest KKT residual over every path computed by the acceptance run.
double g_path_kkt = 0.0;
int g_paths = 0;

SolutionPath tracked_path(const Dataset& d, const PathConfig& cfg, const Vector& weights)
{
    SolutionPath path = fit_path(d, cfg, weights);
    g_path_kkt = std::max(g_path_kkt, test::path_kkt_max(path, d));
    ++g_paths;
    return path;
}

double median(std::vector<double> v)
{
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size() / 2;
    return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

Outcome oracle_equivalence()
{
    const auto t0 = Clock::now();
    int failed = 0, total = 0;
    double worst_obj = 0.0, worst_coef = 0.0;
    for (bool refine : {true, false}) {
        oracle::BatteryConfig cfg;
        cfg.instances = 50;
        cfg.seed = refine ? 1 : 2;
        cfg.solver.newton_refine = refine;
        for (const auto& r : oracle::run_battery(cfg)) {
            ++total;
            failed += !r.passed;
            worst_obj = std::max(worst_obj, r.gaps.relative_gap);
            if (r.lambda2 > 0) worst_coef = std::max(worst_coef, r.gaps.coefficient_gap);
        }
    }
    const double t = seconds_since(t0);
    return {failed == 0 && t < 30.0,
            std::to_string(total - failed) + "/" + std::to_string(total) + " instances, "
                + fmt("max relative objective gap %.2e, max coefficient gap %.2e, %.1f s", worst_obj, worst_coef, t)};
}

Outcome screening_safety()
{
    const auto t0 = Clock::now();
    double worst = 0.0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const Dataset d = test::random_standardized(700 + seed, 50, 500, 5, 0.6);
        PathConfig cfg;
        cfg.nlambda = 50;
        cfg.lambda2 = seed % 2 ? 0.1 : 0.0;
        const Vector w = Vector::Ones(d.p());
        const SolutionPath screened = tracked_path(d, cfg, w);
        cfg.use_strong_rule = false;
        const SolutionPath plain = tracked_path(d, cfg, w);
        for (std::size_t k = 0; k < screened.size(); ++k) {
            const FitState a = screened.state(d, k), b = plain.state(d, k);
            worst = std::max({worst, std::abs(a.beta0 - b.beta0), (a.beta - b.beta).cwiseAbs().maxCoeff()});
        }
    }
    const double t = seconds_since(t0);
    return {worst <= 1e-6 && t < 60.0, fmt("max coefficient difference %.2e over 10 datasets, %.1f s", worst, t)};
}

Outcome loss_properties()
{
    const auto t0 = Clock::now();
    const auto bad = test::check_loss_properties(2024, 10000);
    const double t = seconds_since(t0);
    return {bad.total() == 0 && t < 5.0,
            std::to_string(bad.total()) + fmt(" violations over 1e4 points per property, %.2f s", t)};
}

Outcome strict_descent()
{
    std::int64_t updates = 0, increases = 0, not_strict = 0;
    double worst = -1.0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const Dataset d = test::random_standardized(800 + seed, 30 + 5 * static_cast<Index>(seed), 15);
        const PenaltySpec pen = PenaltySpec::uniform(0.005 * static_cast<double>(1 + seed % 4), seed % 2 ? 0.1 : 0.0, d.p());
        const auto tr = test::trace_descent(d, pen);
        updates += tr.updates;
        increases += tr.increases;
        not_strict += tr.not_strict;
        worst = std::max(worst, tr.worst_change);
    }
    return {increases == 0 && not_strict == 0,
            std::to_string(updates) + " updates, " + std::to_string(increases) + " increases, "
                + std::to_string(not_strict) + fmt(" non-strict moves, largest change %.2e", worst)};
}

Outcome example_one_error()
{
    const auto t0 = Clock::now();
    double total = 0.0;
    const int reps = 20;
    for (int rep = 0; rep < reps; ++rep) {
        SimSpec spec;
        spec.example_id = 1;
        spec.seed = 100 + static_cast<std::uint64_t>(rep);
        const SimData sim = generate(spec);
        CvConfig cfg;
        cfg.lambda2_grid = {0.0};
        const CvResult r = validate_holdout(sim.train, sim.valid, cfg, PenaltyMode::lasso);
        total += error_rate(r.final_model, sim.test);
    }
    const double mean = total / reps, t = seconds_since(t0);
    return {mean >= 0.013 && mean <= 0.030 && t < 120.0, fmt("mean test error %.2f%% over 20 replicates, %.1f s", 100 * mean, t)};
}

Outcome adaptive_selection()
{
    const auto t0 = Clock::now();
    std::string detail;
    bool ok = true;
    for (int example : {1, 3}) {
        const Index truth = signal_size(example);
        std::vector<double> correct, incorrect;
        for (int rep = 0; rep < 20; ++rep) {
            SimSpec spec;
            spec.example_id = example;
            spec.n_test = 2;
            spec.seed = 1000 + static_cast<std::uint64_t>(rep);
            const SimData sim = generate(spec);
            const CvResult r = validate_holdout(sim.train, sim.valid, CvConfig{}, PenaltyMode::aenet);
            const Vector b = original_scale(r.final_model).beta;
            correct.push_back(static_cast<double>((b.head(truth).array() != 0.0).count()));
            incorrect.push_back(static_cast<double>((b.tail(b.size() - truth).array() != 0.0).count()));
        }
        const double c = median(correct), ic = median(incorrect);
        ok = ok && c == static_cast<double>(truth) && ic <= 1.0;
        detail += "Ex" + std::to_string(example) + fmt(" median C %g IC %g; ", c, ic);
    }
    const double t = seconds_since(t0);
    return {ok && t < 180.0, detail + fmt("%.1f s", t)};
}

Outcome bayes_values()
{
    const int ids[] = {1, 3, 4, 5};
    const double expected[] = {0.0139, 0.0588, 0.2110, 0.1803};
    double worst = 0.0;
    std::string detail;
    for (int k = 0; k < 4; ++k) {
        const double v = bayes_error(ids[k]);
        worst = std::max(worst, std::abs(v - expected[k]));
        detail += "Ex" + std::to_string(ids[k]) + fmt(" %.4f ", v);
    }
    return {worst <= 0.0003, detail + fmt("(max deviation %.1e)", worst)};
}

Outcome wide_path_speed()
{
    const Dataset d = test::random_standardized(16, 102, 6033, 20, 0.4);
    PathConfig cfg;
    cfg.lambda2 = 0.1;
    const auto t0 = Clock::now();
    const SolutionPath path = fit_path(d, cfg, Vector::Ones(d.p()));
    const double t = seconds_since(t0);
    g_path_kkt = std::max(g_path_kkt, test::path_kkt_max(path, d));
    ++g_paths;
    return {path.size() == 100 && t < 10.0, std::to_string(path.size()) + fmt(" grid points in %.2f s", t)};
}

Outcome kkt_certification()
{
    // Extra paths across modes and shapes, on top of those computed above.
    for (std::uint64_t seed = 0; seed < 6; ++seed) {
        const Index n = 20 + 15 * static_cast<Index>(seed), p = seed % 2 ? 200 : 12;
        const Dataset d = test::random_standardized(900 + seed, n, p);
        for (double l2 : {0.0, 0.01, 1.0}) {
            PathConfig cfg;
            cfg.lambda2 = l2;
            cfg.nlambda = 40;
            tracked_path(d, cfg, Vector::Ones(p));
        }
        PathConfig cfg;
        cfg.lambda2 = 0.1;
        const FitState enet = fit_fixed(d, PenaltySpec::uniform(0.02, 0.1, p));
        tracked_path(d, cfg, adaptive_weights(enet.beta, n));
    }
    return {g_path_kkt <= 1e-5, fmt("max KKT residual %.2e over %g paths", g_path_kkt, g_paths)};
}

} // namespace

int main()
{
    struct Criterion
    {
        const char* name;
        std::function<Outcome()> run;
    };
    // KKT certification runs last so it covers every path computed before it.
    const std::vector<std::pair<int, Criterion>> criteria = {
        {1, {"oracle equivalence", oracle_equivalence}},
        {3, {"screening safety", screening_safety}},
        {4, {"loss properties", loss_properties}},
        {5, {"strict descent", strict_descent}},
        {6, {"example 1 test error", example_one_error}},
        {7, {"adaptive selection", adaptive_selection}},
        {8, {"Bayes error values", bayes_values}},
        {9, {"wide path speed", wide_path_speed}},
        {2, {"KKT certification", kkt_certification}},
    };
    std::vector<std::string> lines(10);
    int failures = 0;
    for (const auto& [id, c] : criteria) {
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failures += !o.passed;
        lines[static_cast<std::size_t>(id)] = std::string(o.passed ? "PASS" : "FAIL") + " [" + std::to_string(id) + "] " + c.name + ": " + o.detail;
        std::fprintf(stderr, "%s\n", lines[static_cast<std::size_t>(id)].c_str());
    }
    for (int id = 1; id <= 9; ++id) std::printf("%s\n", lines[static_cast<std::size_t>(id)].c_str());
    std::printf("%d of 9 criteria passed\n", 9 - failures);
    return failures == 0 ? 0 : 1;
}
