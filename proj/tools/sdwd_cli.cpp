#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>
#include <vector>
#include <CLI11.hpp>
#include <sdwd/sdwd.hpp>

namespace {

using namespace sdwd;

constexpr int exit_ok = 0;
constexpr int exit_usage = 1;
constexpr int exit_data = 2;
constexpr int exit_nonconvergence = 3;
constexpr int exit_check_failed = 4;

struct Input
{
    std::string path;
    std::string format = "auto";
    int label_column = -1;
    bool no_header = false;

    void add(CLI::App* app)
    {
        app->add_option("--data", path, "Input file (CSV with a label column, or sparse 'label idx:val' records)")
            ->required();
        app->add_option("--format", format, "Input format")->check(CLI::IsMember({"auto", "csv", "sparse"}));
        app->add_option("--label-column", label_column, "CSV label column, 0-based; negative counts from the end");
        app->add_flag("--no-header", no_header, "CSV has no header row");
    }

    bool sparse() const
    {
        if (format != "auto") return format == "sparse";
        const auto ext = std::filesystem::path(path).extension().string();
        return ext == ".svm" || ext == ".libsvm" || ext == ".sparse";
    }

    Dataset load() const
    {
        return sparse() ? read_sparse(path) : read_csv(path, label_column, !no_header);
    }
};

struct Common
{
    int threads = 0;
    std::string coef_scale = "original";

    void add_threads(CLI::App* app)
    {
        app->add_option("--threads", threads, "Worker threads (default: SDWD_THREADS or 1)")->check(CLI::NonNegativeNumber);
    }

    void add_scale(CLI::App* app)
    {
        app->add_option("--coef-scale", coef_scale, "Coefficient scale for exported values")
            ->check(CLI::IsMember({"original", "standardized"}));
    }

    int resolved_threads() const
    {
        if (threads > 0) return threads;
        if (const char* env = std::getenv("SDWD_THREADS")) {
            int v;
            if (!try_parse_int(env, v) || v < 1) throw InvalidArgument("SDWD_THREADS must be a positive integer");
            return v;
        }
        return 1;
    }
};

void echo_config(const CLI::App* app)
{
    std::cerr << "# " << app->get_name() << " configuration\n";
    std::string text = app->config_to_str(true, false);
    std::cerr << text;
    if (!text.empty() && text.back() != '\n') std::cerr << '\n';
}

std::ostream& open_or_stdout(const std::string& path, std::ofstream& file)
{
    if (path.empty() || path == "-") return std::cout;
    file.open(path, std::ios::binary);
    if (!file) throw DataError("cannot write '" + path + "'");
    return file;
}

void write_coefficients(const DwdModel& m, CoefScale scale, std::ostream& os)
{
    os << "j\tvalue\n";
    if (scale == CoefScale::original) {
        const OriginalScale o = original_scale(m);
        os << "0\t" << format_double(o.intercept) << '\n';
        for (Index j = 0; j < o.beta.size(); ++j) {
            if (o.beta[j] != 0.0) os << j + 1 << '\t' << format_double(o.beta[j]) << '\n';
        }
    } else {
        os << "0\t" << format_double(m.beta0) << '\n';
        for (std::size_t k = 0; k < m.beta.nnz(); ++k) {
            os << m.beta.index[k] + 1 << '\t' << format_double(m.beta.value[k]) << '\n';
        }
    }
}

void require_lasso_lambda2(PenaltyMode mode, const CLI::Option* opt, double lambda2)
{
    if (mode == PenaltyMode::lasso && opt->count() > 0 && lambda2 != 0.0) {
        throw InvalidArgument("--penalty lasso fixes lambda2 = 0; remove --lambda2 or choose enet/aenet");
    }
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Sparse penalized distance weighted discrimination"};
    app.require_subcommand(1);
    app.option_defaults()->always_capture_default();
    Common common;

    // fit
    auto* fit = app.add_subcommand("fit", "Fit one model at (lambda1, lambda2)");
    Input fit_in;
    fit_in.add(fit);
    std::string fit_penalty = "lasso";
    double fit_l1 = 0.0, fit_l2 = 0.0;
    std::string fit_out, fit_coef_out;
    fit->add_option("--penalty", fit_penalty, "lasso, enet or aenet")->check(CLI::IsMember({"lasso", "enet", "aenet"}));
    fit->add_option("--lambda1", fit_l1, "L1 level")->required()->check(CLI::NonNegativeNumber);
    auto* fit_l2_opt = fit->add_option("--lambda2", fit_l2, "Ridge level")->check(CLI::NonNegativeNumber);
    fit->add_option("--out", fit_out, "Model file to write")->required();
    fit->add_option("--coef-out", fit_coef_out, "Also write coefficients (j, value; j = 0 is the intercept)");
    common.add_scale(fit);

    // path
    auto* path = app.add_subcommand("path", "Solution path over a lambda1 grid at fixed lambda2");
    Input path_in;
    path_in.add(path);
    std::string path_penalty = "lasso";
    PathConfig pcfg;
    double path_ratio = 0.0, path_stage1 = -1.0;
    bool no_strong = false;
    std::string path_out = "-", path_coef_out;
    path->add_option("--penalty", path_penalty, "lasso, enet or aenet")->check(CLI::IsMember({"lasso", "enet", "aenet"}));
    path->add_option("--nlambda", pcfg.nlambda, "Grid size")->check(CLI::Range(2, 100000));
    auto* ratio_opt = path->add_option("--lambda-min-ratio", path_ratio, "Smallest lambda1 / lambda_max")
                          ->check(CLI::Range(0.0, 1.0));
    auto* path_l2_opt = path->add_option("--lambda2", pcfg.lambda2, "Ridge level")->check(CLI::NonNegativeNumber);
    path->add_flag("--no-strong-rule", no_strong, "Disable strong-rule screening");
    path->add_option("--stage1-lambda1", path_stage1, "aenet: lambda1 of the first-stage elastic-net fit");
    path->add_option("--out", path_out, "Path summary TSV ('-' for stdout)");
    path->add_option("--coef-out", path_coef_out, "Coefficient triplets (k, j, value)");
    common.add_scale(path);

    // cv
    auto* cv = app.add_subcommand("cv", "Tune (lambda1, lambda2) by K-fold CV or a validation file");
    Input cv_in;
    cv_in.add(cv);
    CvConfig ccfg;
    std::string cv_penalty = "enet", cv_valid, cv_report = "-", cv_model_out;
    double cv_ratio = 0.0;
    bool cv_no_strong = false;
    cv->add_option("--penalty", cv_penalty, "lasso, enet or aenet")->check(CLI::IsMember({"lasso", "enet", "aenet"}));
    cv->add_option("--folds", ccfg.folds, "Number of folds")->check(CLI::Range(2, 1 << 30));
    cv->add_option("--seed", ccfg.seed, "Fold assignment seed");
    auto* cv_l2_opt = cv->add_option("--lambda2", ccfg.lambda2_grid, "lambda2 candidates (comma separated)")
                          ->delimiter(',');
    cv->add_option("--nlambda", ccfg.path.nlambda, "lambda1 grid size")->check(CLI::Range(2, 100000));
    auto* cv_ratio_opt = cv->add_option("--lambda-min-ratio", cv_ratio, "Smallest lambda1 / lambda_max")
                             ->check(CLI::Range(0.0, 1.0));
    cv->add_flag("--no-strong-rule", cv_no_strong, "Disable strong-rule screening");
    cv->add_option("--valid", cv_valid, "Validation file; tunes on it instead of folds");
    cv->add_option("--report", cv_report, "CV report TSV ('-' for stdout)");
    cv->add_option("--model-out", cv_model_out, "Model file for the refit at the selected pair")->required();
    common.add_threads(cv);

    // predict
    auto* predict = app.add_subcommand("predict", "Score rows with a saved model");
    std::string pred_model, pred_data, pred_out = "-", pred_format = "auto";
    int pred_label_column = -1;
    bool pred_unlabeled = false, pred_no_header = false;
    predict->add_option("--model", pred_model, "Model file")->required();
    predict->add_option("--data", pred_data, "Input file")->required();
    predict->add_option("--format", pred_format, "Input format")->check(CLI::IsMember({"auto", "csv", "sparse"}));
    predict->add_option("--label-column", pred_label_column, "CSV label column");
    predict->add_flag("--unlabeled", pred_unlabeled, "CSV holds features only");
    predict->add_flag("--no-header", pred_no_header, "CSV has no header row");
    predict->add_option("--out", pred_out, "Output TSV (score, class) ('-' for stdout)");

    // simulate
    auto* simulate = app.add_subcommand("simulate", "Write train/valid/test CSVs for a simulation design");
    SimSpec spec;
    std::string sim_dir = ".";
    simulate->add_option("--example", spec.example_id, "Design 1..5")->required()->check(CLI::Range(1, 5));
    simulate->add_option("--seed", spec.seed, "Generator seed");
    simulate->add_option("--p", spec.p, "Feature count")->check(CLI::PositiveNumber);
    simulate->add_option("--n-train", spec.n_train, "Training rows (even)")->check(CLI::PositiveNumber);
    simulate->add_option("--n-valid", spec.n_valid, "Validation rows (even)")->check(CLI::PositiveNumber);
    simulate->add_option("--n-test", spec.n_test, "Test rows (even)")->check(CLI::PositiveNumber);
    simulate->add_option("--out-dir", sim_dir, "Output directory");

    // oracle-check
    auto* check = app.add_subcommand("oracle-check", "Compare the solver with the reference solver on random instances");
    oracle::BatteryConfig bcfg;
    bool refine = false;
    check->add_option("--instances", bcfg.instances, "Number of instances")->check(CLI::Range(1, 100000));
    check->add_option("--seed", bcfg.seed, "Instance seed");
    check->add_option("--max-n", bcfg.max_n, "Largest n")->check(CLI::Range(10, 200));
    check->add_option("--max-p", bcfg.max_p, "Largest p")->check(CLI::Range(5, 200));
    check->add_option("--tol", bcfg.objective_tol, "Relative objective tolerance")->check(CLI::PositiveNumber);
    check->add_flag("--refine", refine, "Allow Newton refinement (default: plain coordinate descent)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? exit_ok : exit_usage;
    }

    try {
        if (*fit) {
            echo_config(fit);
            const PenaltyMode mode = parse_mode(fit_penalty);
            require_lasso_lambda2(mode, fit_l2_opt, fit_l2);
            const Dataset raw = fit_in.load();
            const DwdModel m = fit_model(raw, mode, fit_l1, fit_l2);
            save_model(m, fit_out);
            const Standardized st = standardize(raw);
            const FitState s = FitState::from(st.data, m.beta0, m.beta.dense(st.data.p()));
            std::cout << "lambda_max\t" << format_double(lambda_max(st.data, m.penalty.weights)) << '\n'
                      << "nnz\t" << m.beta.nnz() << '\n'
                      << "objective\t" << format_double(objective(s, st.data, m.penalty)) << '\n'
                      << "kkt_max\t" << format_double(kkt_max_residual(s, st.data, m.penalty)) << '\n';
            if (!fit_coef_out.empty()) {
                std::ofstream f;
                write_coefficients(m, parse_coef_scale(common.coef_scale), open_or_stdout(fit_coef_out, f));
            }
        } else if (*path) {
            echo_config(path);
            const PenaltyMode mode = parse_mode(path_penalty);
            require_lasso_lambda2(mode, path_l2_opt, pcfg.lambda2);
            if (ratio_opt->count() > 0) pcfg.lambda_min_ratio = path_ratio;
            pcfg.use_strong_rule = !no_strong;
            const Standardized st = standardize(path_in.load());
            pcfg.validate(st.data.n(), st.data.p());
            Vector weights = Vector::Ones(st.data.p());
            if (mode == PenaltyMode::aenet) {
                if (path_stage1 < 0) throw InvalidArgument("--penalty aenet needs --stage1-lambda1");
                const FitState enet = fit_fixed(st.data, PenaltySpec::uniform(path_stage1, pcfg.lambda2, st.data.p()));
                weights = adaptive_weights(enet.beta, st.data.n());
            }
            const SolutionPath sp = fit_path(st.data, pcfg, weights);
            const CoefScale scale = parse_coef_scale(common.coef_scale);
            std::ofstream f;
            write_path_tsv(sp, open_or_stdout(path_out, f), &st.standardizer, scale);
            if (!path_coef_out.empty()) write_coef_triplets(sp, path_coef_out, &st.standardizer, scale);
        } else if (*cv) {
            ccfg.threads = common.resolved_threads();
            echo_config(cv);
            std::cerr << "threads = " << ccfg.threads << '\n';
            const PenaltyMode mode = parse_mode(cv_penalty);
            if (mode == PenaltyMode::lasso && cv_l2_opt->count() > 0) {
                throw InvalidArgument("--penalty lasso fixes lambda2 = 0; remove --lambda2");
            }
            if (cv_ratio_opt->count() > 0) ccfg.path.lambda_min_ratio = cv_ratio;
            ccfg.path.use_strong_rule = !cv_no_strong;
            const Dataset raw = cv_in.load();
            CvResult r;
            if (!cv_valid.empty()) {
                Input vin = cv_in;
                vin.path = cv_valid;
                r = validate_holdout(raw, vin.load(), ccfg, mode);
            } else {
                r = cross_validate(raw, ccfg, mode);
            }
            std::ofstream f;
            write_cv_tsv(r, open_or_stdout(cv_report, f));
            save_model(r.final_model, cv_model_out);
            std::cerr << "best lambda1 = " << format_double(r.best_lambda1) << ", lambda2 = "
                      << format_double(r.best_lambda2) << ", error = "
                      << format_double(r.error_surface(r.best_lambda2_index, r.best_lambda1_index))
                      << ", nnz = " << r.final_model.beta.nnz() << '\n';
        } else if (*predict) {
            echo_config(predict);
            const DwdModel m = load_model(pred_model);
            Input in;
            in.path = pred_data;
            in.format = pred_format;
            in.label_column = pred_label_column;
            in.no_header = pred_no_header;
            const Dataset d = pred_unlabeled ? read_csv_features(pred_data, !pred_no_header) : in.load();
            const Vector scores = predict_scores(m, d.x);
            std::ofstream f;
            std::ostream& os = open_or_stdout(pred_out, f);
            os << "score\tclass\n";
            Index wrong = 0;
            for (Index i = 0; i < scores.size(); ++i) {
                const int c = scores[i] >= 0.0 ? 1 : -1;
                if (d.y.size() == d.n() && c != d.y[i]) ++wrong;
                os << format_double(scores[i]) << '\t' << c << '\n';
            }
            if (d.y.size() == d.n()) {
                std::cerr << "error rate = " << format_double(static_cast<double>(wrong) / static_cast<double>(d.n()))
                          << " (" << wrong << " of " << d.n() << ")\n";
            }
        } else if (*simulate) {
            echo_config(simulate);
            spec.validate();
            const SimData sim = generate(spec);
            std::filesystem::create_directories(sim_dir);
            const std::filesystem::path dir(sim_dir);
            write_csv(sim.train, (dir / "train.csv").string());
            write_csv(sim.valid, (dir / "valid.csv").string());
            write_csv(sim.test, (dir / "test.csv").string());
            const double b = bayes_error(spec.example_id, spec.p);
            std::cout << "bayes_error\t" << format_double(b) << '\n';
            std::cerr << "Bayes error " << std::fixed << std::setprecision(2) << 100.0 * b << "%\n";
        } else if (*check) {
            echo_config(check);
            bcfg.solver.newton_refine = refine;
            const auto reports = oracle::run_battery(bcfg);
            std::cout << "id\tn\tp\tmode\tlambda1\tlambda2\tobjective_gap\trelative_gap\tcoefficient_gap\t"
                         "support_difference\tkkt_solver\tkkt_oracle\tstatus\n";
            int failed = 0;
            for (const auto& r : reports) {
                static constexpr const char* names[] = {"lasso", "enet", "aenet"};
                std::cout << r.id << '\t' << r.n << '\t' << r.p << '\t' << names[static_cast<int>(r.mode)] << '\t'
                          << format_double(r.lambda1) << '\t' << format_double(r.lambda2) << '\t'
                          << format_double(r.gaps.objective_gap) << '\t' << format_double(r.gaps.relative_gap) << '\t'
                          << format_double(r.gaps.coefficient_gap) << '\t' << r.gaps.support_difference << '\t'
                          << format_double(r.gaps.kkt_a) << '\t' << format_double(r.gaps.kkt_b) << '\t'
                          << (r.passed ? "pass" : "FAIL" + (r.error.empty() ? "" : " (" + r.error + ")")) << '\n';
                if (!r.passed) ++failed;
            }
            std::cerr << failed << " of " << reports.size() << " instances failed\n";
            return failed == 0 ? exit_ok : exit_check_failed;
        }
    } catch (const NonConvergence& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_nonconvergence;
    } catch (const InvalidArgument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_usage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_data;
    }
    return exit_ok;
}
