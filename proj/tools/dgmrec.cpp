#include "dgmrec/cli/commands.hpp"
#include "dgmrec/numcore/allocator.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>

namespace {

using namespace dgmrec;
using namespace dgmrec::cli;

void apply_thread_env() {
    const char* env = std::getenv("DGMREC_THREADS");
    if (!env) {
        return;
    }
    char* end = nullptr;
    const long n = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || n < 1) {
        throw UsageError(std::string("DGMREC_THREADS must be a positive integer, got '") + env + "'");
    }
    Eigen::setNbThreads(static_cast<int>(n));
}

} // namespace

int main(int argc, char** argv) {
    retain_freed_memory();
    CLI::App app{"Multimodal recommendation with missing modalities: data generation, training and evaluation."};
    app.require_subcommand(1);
    app.footer("Environment: DGMREC_THREADS sets the worker thread count.\n"
               "Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric divergence.");

    std::string spec_path, data_dir, out_dir, config_path, run_dir, grid_path;
    bool print_default = false;
    auto* gen = app.add_subcommand("gen-data", "Generate a synthetic dataset directory from a spec file");
    gen->add_option("--spec", spec_path, "Data spec (flat key = value)");
    gen->add_option("--out", out_dir, "Output directory");
    gen->add_flag("--print-default-spec", print_default, "Print a complete default spec and exit");

    TrainOverrides overrides;
    auto* train = app.add_subcommand("train", "Train a model and write checkpoint, records and manifest");
    train->add_option("--config", config_path, "Training config (flat key = value)")->required();
    train->add_option("--data", data_dir, "Dataset directory")->required();
    train->add_option("--out", out_dir, "Run directory")->required();
    train->add_option("--ablation", overrides.ablation, "Ablation flag, e.g. no_generation");
    train->add_option("--baseline", overrides.baseline, "mf_bpr | lightgcn | dgmrec_nn_inject");
    train->add_option("--max-epochs", overrides.max_epochs, "Override max_epochs");

    EvalOptions eval_opts;
    auto* eval = app.add_subcommand("eval", "Evaluate a trained run");
    eval->add_option("--run", run_dir, "Run directory written by train")->required();
    eval->add_option("--data", data_dir, "Dataset directory")->required();
    eval->add_option("--out", out_dir, "Output directory (default: <run>/eval)");
    eval->add_option("--config", eval_opts.config_path, "Config that must hash to the run's config");
    eval->add_flag("--retrieval", eval_opts.retrieval, "Add cross-modal retrieval Hit@10/Hit@20 records");
    eval->add_flag("--diagnostics", eval_opts.diagnostics, "Add disentanglement diagnostics");

    std::uint64_t plan_seed = 7;
    auto* sweep = app.add_subcommand("sweep", "Train and evaluate every cell of a grid");
    sweep->add_option("--config", config_path, "Base training config")->required();
    sweep->add_option("--grid", grid_path, "Grid spec: comma lists for lambda1, lambda2, alpha, tau, missing_ratio, seeds")
        ->required();
    sweep->add_option("--data", data_dir, "Dataset directory")->required();
    sweep->add_option("--out", out_dir, "Output directory")->required();
    sweep->add_option("--plan-seed", plan_seed, "Seed of the nested missing-ratio plans");

    std::uint64_t gc_seed = 3;
    double gc_tol = 1e-4;
    auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference check of every loss term");
    gradcheck->add_option("--seed", gc_seed, "Toy instance seed");
    gradcheck->add_option("--tol", gc_tol, "Maximum relative error");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? exit_ok : exit_usage;
    }

    try {
        apply_thread_env();
        if (gen->parsed()) {
            if (print_default) {
                std::cout << default_data_spec_text();
                return exit_ok;
            }
            if (spec_path.empty() || out_dir.empty()) {
                throw UsageError("gen-data needs --spec and --out");
            }
            return cmd_gen_data(spec_path, out_dir);
        }
        if (train->parsed()) {
            return cmd_train(config_path, data_dir, out_dir, overrides);
        }
        if (eval->parsed()) {
            return cmd_eval(run_dir, data_dir, out_dir.empty() ? fs::path(run_dir) / "eval" : fs::path(out_dir), eval_opts);
        }
        if (sweep->parsed()) {
            return cmd_sweep(config_path, grid_path, data_dir, out_dir, plan_seed);
        }
        if (gradcheck->parsed()) {
            return cmd_gradcheck(gc_seed, gc_tol);
        }
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_usage;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return exit_data;
    } catch (const DivergenceError& e) {
        std::cerr << "diverged: " << e.what() << '\n';
        return exit_divergence;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_usage;
    } catch (const std::exception& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return exit_data;
    }
    return exit_usage;
}
