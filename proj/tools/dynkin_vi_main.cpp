#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "dvi/config.hpp"
#include "dvi/pipeline.hpp"

namespace {

struct CommonArgs {
    std::string config_path;
    std::string out_dir = "out";
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::uint64_t paths = 0;
    bool paths_set = false;
};

void add_common(CLI::App* cmd, CommonArgs& args, bool needs_config) {
    auto* cfg = cmd->add_option("--config", args.config_path, "problem config (JSON)");
    if (needs_config) cfg->required();
    cmd->add_option("--out", args.out_dir, "artifact directory");
    cmd->add_option("--seed", args.seed, "override the Monte Carlo seed")
        ->each([&args](const std::string&) { args.seed_set = true; });
    cmd->add_option("--paths", args.paths, "override the Monte Carlo path count")
        ->each([&args](const std::string&) { args.paths_set = true; });
}

dvi::ProblemConfig load_config(const CommonArgs& args) {
    dvi::ProblemConfig cfg = dvi::ProblemConfig::load(args.config_path);
    if (args.seed_set) cfg.mc.seed = args.seed;
    if (args.paths_set) {
        if (args.paths == 0) throw dvi::ConfigError("--paths: must be positive");
        cfg.mc.n_paths = args.paths;
    }
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"variational-inequality solver for optimal stopping and Dynkin games"};
    app.require_subcommand(1);

    CommonArgs solve_args, verify_args, compare_args, report_args;
    bool negative_control = false;

    CLI::App* solve = app.add_subcommand("solve", "solve the problem, write value/region CSVs");
    add_common(solve, solve_args, true);

    CLI::App* verify = app.add_subcommand("verify", "solve, then cross-validate by simulation");
    add_common(verify, verify_args, true);
    verify->add_flag("--negative-control", negative_control,
                     "also run the checkpoint checks on the raw obstacle; "
                     "they are expected to fail");

    CLI::App* compare = app.add_subcommand("compare-oracle",
                                           "solve, then compare against the "
                                           "projected-relaxation oracle");
    add_common(compare, compare_args, true);

    CLI::App* report = app.add_subcommand("report", "summarize artifacts in --out");
    add_common(report, report_args, false);

    CLI11_PARSE(app, argc, argv);

    try {
        if (solve->parsed()) {
            const dvi::ProblemConfig cfg = load_config(solve_args);
            const dvi::SolveOutputs s = dvi::run_solve(cfg);
            dvi::write_solve_artifacts(cfg, s, solve_args.out_dir);
            std::cout << "wrote artifacts to " << solve_args.out_dir << "\n";
            return 0;
        }
        if (verify->parsed()) {
            const dvi::ProblemConfig cfg = load_config(verify_args);
            const int rc = dvi::run_verify(cfg, verify_args.out_dir, negative_control);
            std::cout << (rc == 0 ? "verification passed" : "verification FAILED")
                      << "; report in " << verify_args.out_dir << "\n";
            return rc;
        }
        if (compare->parsed()) {
            const dvi::ProblemConfig cfg = load_config(compare_args);
            const int rc = dvi::run_compare_oracle(cfg, compare_args.out_dir);
            std::cout << (rc == 0 ? "oracle comparison passed" : "oracle comparison FAILED")
                      << "; report in " << compare_args.out_dir << "\n";
            return rc;
        }
        if (report->parsed()) {
            return dvi::run_report(report_args.out_dir, std::cout);
        }
    } catch (const dvi::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return dvi::kExitConfig;
    } catch (const dvi::ModeMismatch& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return dvi::kExitConfig;
    } catch (const dvi::InvalidDensity& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return dvi::kExitConfig;
    } catch (const dvi::PenaltyDivergence& e) {
        std::cerr << "solver error: " << e.what() << "\n";
        return dvi::kExitSolver;
    } catch (const dvi::GameDivergence& e) {
        std::cerr << "solver error: " << e.what() << "\n";
        return dvi::kExitSolver;
    } catch (const dvi::SchemeError& e) {
        std::cerr << "solver error: " << e.what() << "\n";
        return dvi::kExitSolver;
    } catch (const dvi::AssemblyError& e) {
        std::cerr << "solver error: " << e.what() << "\n";
        return dvi::kExitSolver;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
