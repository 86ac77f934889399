// condex: fit conditional-expectation models from CSV samples, evaluate them,
// and reproduce the built-in denoising / principal-curve experiments.
//
// Exit codes: 0 success, 1 usage, 2 data error, 3 numerical failure.

#include <chrono>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "condex/condex.hpp"

namespace {

using namespace condex;

struct CliOptions {
    std::string input;
    std::string output;
    std::string model_path;
    std::string points_path;
    std::string out_dir;
    std::size_t m = 0;
    double delta = 0.0;
    double markov_bw = 0.0;
    double kernel_bandwidth = 0.0;
    std::string kernel = "symmetrized-diffusion";
    double epsilon = -1.0;  // negative = auto
    std::uint64_t seed = 0;
    std::string centers_rule = "stride";
    // experiment knobs
    std::string kind;
    std::size_t n = 0;
    int kappa = 2;
    std::size_t grid = 50;
    double noise_std = 0.25;
    std::vector<std::size_t> sizes = {250, 1000, 4000};
    std::size_t n_seeds = 5;
    std::size_t eval_points = 201;
    bool low_discrepancy = false;
    std::string exp_centers;  // empty = per-kind default
};

FitConfig make_fit_config(const CliOptions& opt) {
    FitConfig fc;
    fc.m = opt.m;
    fc.kspec.family = kernel_family_from_string(opt.kernel);
    fc.kspec.bandwidth = opt.kernel_bandwidth > 0.0 ? opt.kernel_bandwidth : opt.delta;
    fc.delta = opt.delta;
    if (opt.markov_bw > 0.0) fc.markov_bw = opt.markov_bw;
    if (opt.epsilon >= 0.0) fc.epsilon = opt.epsilon;
    fc.seed = opt.seed;
    fc.center_rule = opt.centers_rule == "random" ? CenterRule::Random : CenterRule::Stride;
    return fc;
}

int cmd_fit(const CliOptions& opt) {
    const auto t0 = std::chrono::steady_clock::now();
    Dataset data = read_dataset_csv(opt.input);
    if (data.n() < 2) throw DataError(opt.input + ": need at least 2 data rows");
    CliOptions resolved = opt;
    if (resolved.m == 0) resolved.m = data.n();
    const FitResult result = fit(data, make_fit_config(resolved));
    save_model(result.model, opt.output);
    const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                        std::chrono::steady_clock::now() - t0)
                        .count();
    std::cout << "model: " << opt.output << "\n"
              << "samples: " << data.n() << "  centers: " << result.model.centers.size() << "\n"
              << "residual_norm: " << fmt_double(result.report.residual_norm) << "\n"
              << "rhs_norm: " << fmt_double(result.report.rhs_norm) << "\n"
              << "effective_rank: " << result.report.effective_rank << "\n"
              << "epsilon: " << fmt_double(result.model.fit_meta.epsilon) << "\n"
              << "time_ms: " << ms << "\n";
    return 0;
}

int cmd_eval(const CliOptions& opt) {
    const RkhsModel model = load_model(opt.model_path);
    const std::vector<Point> points = read_points_csv(opt.points_path);
    for (const auto& p : points)
        if (p.dim() != model.dim())
            throw DataError(opt.points_path + ": points have dimension " +
                            std::to_string(p.dim()) + ", model expects " +
                            std::to_string(model.dim()));
    const Vector pred = evaluate(model, points);
    std::ostringstream out;
    for (std::size_t i = 0; i < model.dim(); ++i) out << "x" << (i + 1) << ",";
    out << "prediction\n";
    for (std::size_t i = 0; i < points.size(); ++i) {
        for (double c : points[i].coords) out << fmt_double(c) << ",";
        out << fmt_double(pred[i]) << "\n";
    }
    write_file_atomic(opt.output, out.str());
    std::cout << "predictions: " << opt.output << " (" << points.size() << " rows)\n";
    return 0;
}

ExperimentConfig make_experiment_config(const CliOptions& opt) {
    ExperimentConfig cfg;
    cfg.kind = experiment_kind_from_string(opt.kind);
    cfg.seed = opt.seed;
    cfg.n = opt.n;
    cfg.kappa = opt.kappa;
    cfg.grid = opt.grid;
    cfg.noise_std = opt.noise_std;
    cfg.sizes = opt.sizes;
    cfg.n_seeds = opt.n_seeds;
    cfg.m = opt.m;
    cfg.kernel = kernel_family_from_string(opt.kernel);
    cfg.kernel_bandwidth = opt.kernel_bandwidth;
    cfg.delta = opt.delta;
    cfg.markov_bw = opt.markov_bw;
    if (opt.epsilon >= 0.0) cfg.epsilon = opt.epsilon;
    if (opt.exp_centers == "stride") cfg.center_rule = CenterRule::Stride;
    if (opt.exp_centers == "random") cfg.center_rule = CenterRule::Random;
    cfg.low_discrepancy = opt.low_discrepancy;
    cfg.eval_points = opt.eval_points;
    return cfg;
}

int run_convergence_cmd(const CliOptions& opt) {
    ExperimentConfig cfg = make_experiment_config(opt);
    const ConvergenceReport report = run_convergence(cfg);
    std::filesystem::create_directories(opt.out_dir);
    write_file_atomic(opt.out_dir + "/report.json", convergence_to_json(report).dump(2) + "\n");
    write_file_atomic(opt.out_dir + "/medians.csv", convergence_csv(report));
    std::cout << "n,median_rmse_vs_smoothed_truth\n";
    for (std::size_t i = 0; i < report.sizes.size(); ++i)
        std::cout << report.sizes[i] << "," << fmt_double(report.median_rmse[i]) << "\n";
    std::cout << "report: " << opt.out_dir << "/report.json\n";
    return 0;
}

int cmd_experiment(const CliOptions& opt) {
    if (opt.kind == "convergence") return run_convergence_cmd(opt);
    const ExperimentReport report = run_experiment(make_experiment_config(opt));
    std::filesystem::create_directories(opt.out_dir);
    write_file_atomic(opt.out_dir + "/report.json", report_to_json(report).dump(2) + "\n");
    write_file_atomic(opt.out_dir + "/points.csv", per_point_csv(report));
    std::cout << "rmse_vs_truth: " << fmt_double(report.rmse_vs_truth) << "\n"
              << "rmse_vs_smoothed_truth: " << fmt_double(report.rmse_vs_smoothed_truth) << "\n"
              << "relative_rmse_vs_truth: " << fmt_double(report.relative_rmse_vs_truth) << "\n"
              << "runtime_ms: " << report.runtime_ms << "\n"
              << "report: " << opt.out_dir << "/report.json\n"
              << "points: " << opt.out_dir << "/points.csv\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Kernel-based conditional expectation estimation"};
    app.require_subcommand(1);
    CliOptions opt;

    CLI::App* fit_cmd = app.add_subcommand("fit", "Fit a model from a CSV of samples");
    fit_cmd->add_option("--input", opt.input, "Input CSV with header x1,...,xd,y")->required();
    fit_cmd->add_option("--output", opt.output, "Output model JSON path")->required();
    fit_cmd->add_option("--m", opt.m, "Number of centers (default: all samples)");
    fit_cmd->add_option("--delta", opt.delta, "Smoother bandwidth delta")
        ->required()
        ->check(CLI::PositiveNumber);
    fit_cmd->add_option("--markov-bw", opt.markov_bw, "Markov kernel bandwidth (default: delta)")
        ->check(CLI::PositiveNumber);
    fit_cmd->add_option("--kernel", opt.kernel, "Kernel family")
        ->check(CLI::IsMember({"gaussian", "markov-gaussian", "diffusion",
                               "symmetrized-diffusion"}))
        ->capture_default_str();
    fit_cmd->add_option("--kernel-bandwidth", opt.kernel_bandwidth,
                        "RKHS kernel bandwidth (default: delta)")
        ->check(CLI::PositiveNumber);
    fit_cmd->add_option("--epsilon", opt.epsilon,
                        "Regularization epsilon (default: 1e-6 * sigma1^2)")
        ->check(CLI::NonNegativeNumber);
    fit_cmd->add_option("--seed", opt.seed, "Seed for random center selection")
        ->capture_default_str();
    fit_cmd->add_option("--centers", opt.centers_rule, "Center selection rule")
        ->check(CLI::IsMember({"stride", "random"}))
        ->capture_default_str();

    CLI::App* eval_cmd = app.add_subcommand("eval", "Evaluate a model at query points");
    eval_cmd->add_option("--model", opt.model_path, "Model JSON path")->required();
    eval_cmd->add_option("--points", opt.points_path, "Query CSV with header x1,...,xd")
        ->required();
    eval_cmd->add_option("--output", opt.output, "Predictions CSV path")->required();

    CLI::App* exp_cmd = app.add_subcommand("experiment", "Run a built-in experiment");
    exp_cmd->add_option("kind", opt.kind, "One of: curve, image, variance, convergence")
        ->required()
        ->check(CLI::IsMember({"curve", "image", "variance", "convergence"}));
    exp_cmd->add_option("--out", opt.out_dir, "Output directory")->required();
    exp_cmd->add_option("--n", opt.n, "Sample count (curve/variance)");
    exp_cmd->add_option("--seed", opt.seed, "Seed")->capture_default_str();
    exp_cmd->add_option("--kappa", opt.kappa, "Image oscillation index")->capture_default_str();
    exp_cmd->add_option("--grid", opt.grid, "Image pixels per side")->capture_default_str();
    exp_cmd->add_option("--noise", opt.noise_std, "Image noise standard deviation")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();
    exp_cmd->add_option("--sizes", opt.sizes, "Convergence sweep sizes")->delimiter(',');
    exp_cmd->add_option("--seeds", opt.n_seeds, "Seeds per size in the convergence sweep")
        ->capture_default_str();
    exp_cmd->add_option("--m", opt.m, "Number of centers (default: per-kind)");
    exp_cmd->add_option("--delta", opt.delta, "Smoother bandwidth (default: per-kind)")
        ->check(CLI::NonNegativeNumber);
    exp_cmd->add_option("--markov-bw", opt.markov_bw, "Markov bandwidth (default: delta)")
        ->check(CLI::NonNegativeNumber);
    exp_cmd->add_option("--kernel", opt.kernel, "Kernel family")
        ->check(CLI::IsMember({"gaussian", "markov-gaussian", "diffusion",
                               "symmetrized-diffusion"}))
        ->capture_default_str();
    exp_cmd->add_option("--kernel-bandwidth", opt.kernel_bandwidth,
                        "RKHS kernel bandwidth (default: per-kind)")
        ->check(CLI::NonNegativeNumber);
    exp_cmd->add_option("--epsilon", opt.epsilon, "Regularization (default: auto)")
        ->check(CLI::NonNegativeNumber);
    exp_cmd->add_option("--centers", opt.exp_centers, "Center selection rule (default: per-kind)")
        ->check(CLI::IsMember({"stride", "random"}));
    exp_cmd->add_flag("--low-discrepancy", opt.low_discrepancy,
                      "Sample x from the golden-ratio sequence instead of the PRNG");
    exp_cmd->add_option("--eval-points", opt.eval_points, "Interior grid size (1-D kinds)")
        ->capture_default_str();

    CLI::App* conv_cmd = app.add_subcommand("convergence", "Run the convergence sweep");
    conv_cmd->add_option("--out", opt.out_dir, "Output directory")->required();
    conv_cmd->add_option("--sizes", opt.sizes, "Sweep sizes")->delimiter(',');
    conv_cmd->add_option("--seeds", opt.n_seeds, "Seeds per size")->capture_default_str();
    conv_cmd->add_option("--seed", opt.seed, "Base seed")->capture_default_str();
    conv_cmd->add_option("--m", opt.m, "Number of centers");
    conv_cmd->add_option("--delta", opt.delta, "Smoother bandwidth")
        ->check(CLI::NonNegativeNumber);
    conv_cmd->add_option("--kernel", opt.kernel, "Kernel family")
        ->check(CLI::IsMember({"gaussian", "markov-gaussian", "diffusion",
                               "symmetrized-diffusion"}))
        ->capture_default_str();
    conv_cmd->add_option("--kernel-bandwidth", opt.kernel_bandwidth, "RKHS kernel bandwidth")
        ->check(CLI::NonNegativeNumber);
    conv_cmd->add_option("--epsilon", opt.epsilon, "Regularization (default: 1e-8 fixed)")
        ->check(CLI::NonNegativeNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        app.exit(e);
        return 1;
    }

    try {
        if (app.got_subcommand(fit_cmd)) return cmd_fit(opt);
        if (app.got_subcommand(eval_cmd)) return cmd_eval(opt);
        if (app.got_subcommand(exp_cmd)) return cmd_experiment(opt);
        if (app.got_subcommand(conv_cmd)) {
            opt.kind = "convergence";
            return run_convergence_cmd(opt);
        }
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 2;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}
