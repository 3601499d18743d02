#include "flame/csv.hpp"
#include "flame/experiment.hpp"
#include "flame/loss.hpp"
#include "flame/model_io.hpp"
#include "flame/simgen.hpp"
#include "flame/solver.hpp"
#include "flame/tuning.hpp"
#include "flame/verify.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

namespace {

using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitSolver = 3;

json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw flame::DataError("cannot open config file: " + path);
    }
    json j;
    try {
        in >> j;
    } catch (const json::exception& err) {
        throw flame::DataError("config file is not valid JSON: " + std::string(err.what()));
    }
    return j;
}

struct CommonFitArgs {
    std::string data_path;
    std::string label_column = "label";
    std::string positive_token = "1";
    std::string config_path;
    double theta = 0.0;
    double C = 0.0;  // 0 means data-driven default
    double lambda = 1.0;
    std::string formulation = "norm_ball";
    double tolerance = 0.0;  // 0 means formulation default
    int max_iterations = 0;  // 0 means formulation default

    void attach(CLI::App* cmd, bool with_theta = true) {
        cmd->add_option("--data", data_path, "Input CSV with a header row")->required();
        cmd->add_option("--label-col", label_column, "Name of the label column");
        cmd->add_option("--positive", positive_token, "Label token mapped to +1");
        cmd->add_option("--config", config_path,
                        "JSON config; its values override the flags");
        if (with_theta) cmd->add_option("--theta", theta, "FLAME parameter in [0,1]");
        cmd->add_option("--C", C, "Loss scale; omit for the data-driven default");
        cmd->add_option("--lambda", lambda, "Ridge weight (penalized formulation)");
        cmd->add_option("--formulation", formulation, "norm_ball or penalized");
        cmd->add_option("--tol", tolerance, "Solver tolerance");
        cmd->add_option("--max-iter", max_iterations, "Solver iteration cap");
    }

    flame::FlameConfig resolve() const {
        flame::FlameConfig config = formulation == "penalized"
                                        ? flame::FlameConfig::penalized(theta, lambda)
                                        : flame::FlameConfig::norm_ball(theta);
        if (formulation != "penalized" && formulation != "norm_ball") {
            throw CLI::ValidationError("--formulation must be norm_ball or penalized");
        }
        config.lambda = lambda;
        if (C > 0.0) config.loss_scale = C;
        if (tolerance > 0.0) config.tolerance = tolerance;
        if (max_iterations > 0) config.max_iterations = max_iterations;
        if (!config_path.empty()) {
            // Keys present in the file win over the flags; absent keys keep
            // the flag (or default) values.
            flame::apply_config_json(config, load_json_file(config_path));
        }
        return config;
    }

    flame::LabeledDataset load() const {
        return flame::load_csv(data_path, label_column, positive_token);
    }
};

std::vector<double> parse_grid(const std::string& text) {
    std::vector<double> grid;
    std::stringstream stream(text);
    std::string token;
    while (std::getline(stream, token, ',')) {
        grid.push_back(std::stod(token));
    }
    return grid;
}

int run(int argc, char** argv) {
    CLI::App app{"FLAME large-margin classification toolkit"};
    app.require_subcommand(1);

    // ------------------------------------------------------------------ fit
    auto* fit_cmd = app.add_subcommand("fit", "Fit a FLAME model on CSV data");
    CommonFitArgs fit_args;
    fit_args.attach(fit_cmd);
    std::string fit_out = "model.json";
    fit_cmd->add_option("--out", fit_out, "Model output path (JSON)");

    // -------------------------------------------------------------- predict
    auto* predict_cmd = app.add_subcommand("predict", "Score a CSV with a saved model");
    std::string predict_model, predict_data, predict_out = "predictions.csv";
    predict_cmd->add_option("--model", predict_model, "Model JSON path")->required();
    predict_cmd->add_option("--data", predict_data, "Feature CSV (no label column)")->required();
    predict_cmd->add_option("--out", predict_out, "Predictions output path");

    // ----------------------------------------------------------------- tune
    auto* tune_cmd = app.add_subcommand("tune", "Select theta adaptively or by trade-off");
    CommonFitArgs tune_args;
    tune_args.attach(tune_cmd, /*with_theta=*/false);
    std::string tune_method = "adaptive";
    std::string tune_grid = "0,0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1";
    int tune_folds = 5;
    int tune_max_steps = 20;
    std::uint64_t tune_seed = 0;
    std::string tune_out;
    tune_cmd->add_option("--method", tune_method, "adaptive or tradeoff");
    tune_cmd->add_option("--grid", tune_grid, "Comma-separated theta grid (tradeoff)");
    tune_cmd->add_option("--folds", tune_folds, "CV folds (tradeoff)");
    tune_cmd->add_option("--max-steps", tune_max_steps, "Iteration budget (adaptive)");
    tune_cmd->add_option("--seed", tune_seed, "CV shuffling seed");
    tune_cmd->add_option("--out", tune_out, "Optional JSON report path");

    // ------------------------------------------------------------- simulate
    auto* sim_cmd = app.add_subcommand("simulate", "Run a simulation sweep");
    std::string sim_config_path;
    std::string sim_out = "report.json";
    std::string sim_format = "json";
    std::uint64_t sim_seed = 0;
    int sim_workers = 0;
    sim_cmd->add_option("--config", sim_config_path, "Experiment config JSON")->required();
    sim_cmd->add_option("--out", sim_out, "Report output path");
    sim_cmd->add_option("--format", sim_format, "csv or json");
    sim_cmd->add_option("--seed", sim_seed, "Sweep seed (config value wins if present)");
    sim_cmd->add_option("--workers", sim_workers, "Worker threads");

    // ------------------------------------------------------------------- cv
    auto* cv_cmd = app.add_subcommand("cv", "Cross-validate over a theta grid");
    CommonFitArgs cv_args;
    cv_args.attach(cv_cmd, /*with_theta=*/false);
    std::string cv_grid = "0,0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1";
    int cv_folds = 5;
    int cv_splits = 1;
    std::uint64_t cv_seed = 0;
    std::string cv_out = "cv_report.json";
    std::string cv_format = "json";
    cv_cmd->add_option("--grid", cv_grid, "Comma-separated theta grid");
    cv_cmd->add_option("--folds", cv_folds, "Folds per split");
    cv_cmd->add_option("--splits", cv_splits, "Random splits");
    cv_cmd->add_option("--seed", cv_seed, "Fold shuffling seed");
    cv_cmd->add_option("--out", cv_out, "Report output path");
    cv_cmd->add_option("--format", cv_format, "csv or json");

    // --------------------------------------------------------------- verify
    auto* verify_cmd = app.add_subcommand("verify", "Run the theory-verification harness");
    std::string verify_check = "all";
    std::uint64_t verify_seed = 20240001;
    int verify_replicates = 0;
    std::string verify_out;
    verify_cmd->add_option("--check", verify_check,
                           "all, fisher, adaptive, intercept-divergence, intercept-bounded, support-fraction or hdlss");
    verify_cmd->add_option("--seed", verify_seed, "Harness seed");
    verify_cmd->add_option("--replicates", verify_replicates,
                           "Dataset replicates for the adaptive check");
    verify_cmd->add_option("--out", verify_out, "JSON-lines report path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& help) {
        return app.exit(help);
    } catch (const CLI::ParseError& err) {
        app.exit(err);
        return kExitUsage;
    }

    if (fit_cmd->parsed()) {
        const flame::LabeledDataset data = fit_args.load();
        const flame::FlameConfig config = fit_args.resolve();
        const flame::FitResult result = flame::fit(data, config);
        flame::save_model(fit_out, result.model);
        std::cout << "fit: n=" << data.size() << " d=" << data.dim()
                  << " objective=" << result.diagnostics.objective
                  << " converged=" << (result.diagnostics.converged ? "yes" : "no")
                  << " -> " << fit_out << "\n";
        if (!result.diagnostics.converged) {
            std::cerr << "warning: solver did not reach its tolerance\n";
        }
        return kExitOk;
    }

    if (predict_cmd->parsed()) {
        const flame::LinearModel model = flame::load_model(predict_model);
        const Eigen::MatrixXd features = flame::load_features_csv(predict_data);
        if (features.cols() != model.dim()) {
            throw flame::DataError("predict: model dimension " + std::to_string(model.dim()) +
                                   " does not match data dimension " +
                                   std::to_string(features.cols()));
        }
        std::ostringstream out;
        out << "decision_value,label\n";
        out.precision(17);
        for (Eigen::Index i = 0; i < features.rows(); ++i) {
            const double value = flame::decision_value(model, features.row(i).transpose());
            out << value << ',' << (value >= 0.0 ? 1 : -1) << "\n";
        }
        flame::write_text_atomic(predict_out, out.str());
        std::cout << "predict: " << features.rows() << " rows -> " << predict_out << "\n";
        return kExitOk;
    }

    if (tune_cmd->parsed()) {
        const flame::LabeledDataset data = tune_args.load();
        flame::FlameConfig config = tune_args.resolve();
        json report;
        if (tune_method == "adaptive") {
            auto [theta, trace] = flame::adaptive_theta(data, config, tune_max_steps);
            report["method"] = "adaptive";
            report["theta"] = theta;
            report["terminated"] = trace.terminated;
            report["trace"] = json::array();
            for (const auto& step : trace.steps) {
                report["trace"].push_back({{"theta", step.theta},
                                           {"objective", step.objective},
                                           {"order_margin", step.majority_order_margin}});
            }
            std::cout << "tune: adaptive theta = " << theta
                      << " (steps=" << trace.steps.size() << ")\n";
        } else if (tune_method == "tradeoff") {
            flame::CvConfig cv;
            cv.folds = tune_folds;
            cv.seed = tune_seed;
            flame::FlameConfig dwd = config;
            dwd.theta = 0.0;
            const flame::FitResult reference = flame::fit(data, dwd);
            auto [theta, curves] =
                flame::equal_tradeoff_theta(data, parse_grid(tune_grid), cv,
                                            reference.model, config);
            report["method"] = "tradeoff";
            report["theta"] = theta;
            report["crossing_found"] = curves.crossing_found;
            report["grid"] = curves.grid;
            report["error"] = curves.error;
            report["rank_comp"] = curves.rank_comp_curve;
            report["error_normalized"] = curves.error_normalized;
            report["rank_comp_normalized"] = curves.rank_comp_normalized;
            std::cout << "tune: equal-trade-off theta = " << theta
                      << (curves.crossing_found ? "" : " (no crossing; nearest gap)") << "\n";
        } else {
            throw CLI::ValidationError("--method must be adaptive or tradeoff");
        }
        if (!tune_out.empty()) {
            flame::write_text_atomic(tune_out, report.dump(2) + "\n");
        }
        return kExitOk;
    }

    if (sim_cmd->parsed()) {
        json raw = load_json_file(sim_config_path);
        // Flags provide defaults; values in the config file win.
        if (!raw.contains("seed") && sim_seed != 0) raw["seed"] = sim_seed;
        if (!raw.contains("workers") && sim_workers > 0) raw["workers"] = sim_workers;
        const flame::ExperimentConfig config = flame::experiment_config_from_json(raw);
        const flame::ExperimentReport report = flame::run_experiment(config);
        if (sim_format == "csv") {
            flame::write_text_atomic(sim_out, flame::report_to_csv(report));
        } else {
            flame::write_text_atomic(sim_out, flame::report_to_json(report).dump(2) + "\n");
        }
        std::size_t failures = 0;
        for (const auto& record : report.records) {
            if (record.failed()) ++failures;
        }
        std::cout << "simulate: " << report.records.size() << " records ("
                  << failures << " failed) -> " << sim_out << "\n";
        if (report.all_failed()) {
            std::cerr << "error: every sweep cell failed\n";
            return kExitSolver;
        }
        return kExitOk;
    }

    if (cv_cmd->parsed()) {
        const flame::LabeledDataset data = cv_args.load();
        const flame::FlameConfig config = cv_args.resolve();
        const flame::CvReport report = flame::cross_validate(
            data, config, parse_grid(cv_grid), cv_folds, cv_splits, cv_seed);
        if (cv_format == "csv") {
            flame::write_text_atomic(cv_out, flame::cv_report_to_csv(report));
        } else {
            flame::write_text_atomic(cv_out, flame::cv_report_to_json(report).dump(2) + "\n");
        }
        std::cout << "cv: " << report.records.size() << " fold records -> " << cv_out << "\n";
        return kExitOk;
    }

    if (verify_cmd->parsed()) {
        flame::VerifyOptions options;
        options.seed = verify_seed;
        if (verify_replicates > 0) options.adaptive_datasets = verify_replicates;
        const auto records = flame::run_verification(verify_check, options);
        const std::string jsonl = flame::records_to_jsonl(records);
        if (!verify_out.empty()) {
            flame::write_text_atomic(verify_out, jsonl);
        } else {
            std::cout << jsonl;
        }
        std::size_t failed = 0;
        for (const auto& record : records) {
            if (!record.pass) ++failed;
        }
        std::cout << "verify: " << records.size() << " checks, " << failed << " failed\n";
        return failed == 0 ? kExitOk : kExitSolver;
    }

    return kExitUsage;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const CLI::Error&) {
        return kExitUsage;
    } catch (const flame::DataError& err) {
        std::cerr << "data error: " << err.what() << "\n";
        return kExitData;
    } catch (const flame::SolverError& err) {
        std::cerr << "solver error: " << err.what() << "\n";
        return kExitSolver;
    } catch (const std::invalid_argument& err) {
        std::cerr << "usage error: " << err.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << "\n";
        return kExitSolver;
    }
}
