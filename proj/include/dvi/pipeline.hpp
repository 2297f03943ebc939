#pragma once

#include <cmath>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "dvi/config.hpp"
#include "dvi/dynkin.hpp"
#include "dvi/lcp.hpp"
#include "dvi/mc.hpp"
#include "dvi/model.hpp"
#include "dvi/obstacle.hpp"
#include "dvi/report.hpp"
#include "dvi/verify.hpp"

namespace dvi {

// Exit codes of the batch front end.
inline constexpr int kExitConfig = 2;  // config/invariant errors
inline constexpr int kExitSolver = 3;  // numerical scheme failures
inline constexpr int kExitVerify = 4;  // failed checks or missing artifacts

struct SolveOutputs {
    SpaceTimeGrid grid;
    SymmetrizingDensity density;
    // Symmetry residual of (diffusion, drift, density); NaN when the unit
    // density skips the gate.
    double density_residual = std::numeric_limits<double>::quiet_NaN();

    std::optional<VISolution> stopping;
    std::optional<GameSolution> game;

    ScalarField g_field;                 // stopping obstacle or game lower
    ScalarField h_field;                 // game upper (empty for stopping)
    std::optional<ScalarField> f_field;  // holding cost

    const ScalarField& value() const {
        return stopping ? stopping->value : game->value;
    }
};

inline SpaceTimeFn field_fn(const FieldSpec& spec) {
    return [spec](double t, const std::array<double, 2>& x) { return spec(t, x); };
}

inline SpaceTimeFn game_chi_fn(const FieldSpec& lower, const FieldSpec& upper) {
    return [lower, upper](double t, const std::array<double, 2>& x) {
        return std::min(std::max(lower(t, x), 0.0), upper(t, x));
    };
}

inline SolveOutputs run_solve(const ProblemConfig& cfg) {
    SolveOutputs out{cfg.build_grid(),
                     build_density(cfg.model, cfg.density),
                     std::numeric_limits<double>::quiet_NaN(),
                     std::nullopt,
                     std::nullopt,
                     ScalarField(),
                     ScalarField(),
                     std::nullopt};
    const SpaceTimeGrid& grid = out.grid;
    validate_density(out.density, grid);
    if (!out.density.is_unit()) {
        out.density_residual =
            drift_consistency_check(cfg.model, out.density, grid, grid.times());
        if (out.density_residual > cfg.density_check_tol) {
            throw InvalidDensity(
                "density does not symmetrize the drift: residual " +
                std::to_string(out.density_residual) + " exceeds tolerance " +
                std::to_string(cfg.density_check_tol));
        }
    }

    if (cfg.cost) out.f_field = cfg.cost->on(grid);

    if (cfg.kind == ProblemConfig::Kind::Stopping) {
        out.g_field = cfg.obstacle.on(grid);
        OperatorTable ops(cfg.model, out.density, grid);
        out.stopping = cfg.cost ? solve_obstacle_with_cost(ops, out.g_field, *out.f_field,
                                                           cfg.model.alpha, cfg.penalty)
                                : solve_obstacle(ops, out.g_field, cfg.model.alpha,
                                                 cfg.penalty);
    } else {
        out.g_field = cfg.lower.on(grid);
        out.h_field = cfg.upper.on(grid);
        GameProblem prob;
        prob.lower = out.g_field;
        prob.upper = out.h_field;
        prob.alpha = cfg.model.alpha;
        if (cfg.cost) prob.cost = *out.f_field;
        GameConfig gc;
        gc.penalty = cfg.penalty;
        gc.outer_tol = cfg.outer_tol;
        gc.max_outer_iters = cfg.max_outer_iters;
        OperatorTable ops(cfg.model, out.density, grid);
        out.game = solve_game_with_cost(ops, prob, gc);
    }
    return out;
}

inline nlohmann::json solve_diagnostics(const ProblemConfig& cfg,
                                        const SolveOutputs& s) {
    nlohmann::json j;
    j["kind"] = cfg.kind == ProblemConfig::Kind::Stopping ? "stopping" : "game";
    j["grid"] = {{"n_slices", s.grid.n_slices()}, {"n_space", s.grid.n_space()}};
    if (std::isfinite(s.density_residual)) {
        j["density_residual"] = s.density_residual;
    }
    if (s.stopping) {
        const VISolution& v = *s.stopping;
        j["eps_used"] = v.eps_used;
        j["newton_iters"] = v.newton_iters;
        j["continuation_delta"] = v.continuation_delta;
        j["continuation_min_gap"] = v.continuation_min_gap;
        j["penalty_residual"] = v.penalty_residual;
        j["complementarity"] = v.complementarity;
        j["supersolution_defect"] = v.supersolution_defect;
        j["contact_tol"] = v.contact_tol;
    } else {
        const GameSolution& g = *s.game;
        j["outer_iters"] = g.outer_iters;
        j["outer_delta"] = g.outer_delta;
        j["monotonicity_defect"] = g.monotonicity_defect;
        j["contact_tol"] = g.contact_tol;
    }
    return j;
}

inline void write_solve_artifacts(const ProblemConfig& cfg, const SolveOutputs& s,
                                  const std::string& out_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    const auto path = [&](const char* name) { return (fs::path(out_dir) / name).string(); };
    write_value_csv(path("value.csv"), s.grid, s.value());
    if (s.stopping) {
        write_mask_csv(path("contact.csv"), s.grid, s.stopping->contact);
    } else {
        write_mask_csv(path("region_lower.csv"), s.grid, s.game->region_lower);
        write_mask_csv(path("region_upper.csv"), s.grid, s.game->region_upper);
    }
    write_json_file(path("diagnostics.json"), solve_diagnostics(cfg, s));
    std::ofstream canon(path("config_canonical.json"));
    if (!canon) throw Error("cannot open for writing: " + path("config_canonical.json"));
    canon << cfg.canonical();
}

// --- verify ----------------------------------------------------------------

struct VerifyOutcome {
    std::vector<McCheck> checks;
    bool all_pass = true;
    // Negative control: the supermartingale checks rerun with the raw
    // obstacle in place of the solved value.  Expected to be flagged.
    std::vector<McCheck> control_checks;
    bool control_requested = false;
    bool control_flagged = false;
};

inline MCConfig make_mc_config(const ProblemConfig& cfg) {
    MCConfig mcc;
    mcc.n_paths = cfg.mc.n_paths;
    mcc.dt = cfg.mc_dt();
    mcc.seed = cfg.mc.seed;
    mcc.antithetic = cfg.mc.antithetic;
    return mcc;
}

inline std::array<double, 2> verify_control_point(const ProblemConfig& cfg) {
    if (cfg.mc.control_point) return *cfg.mc.control_point;
    if (!cfg.start_points.empty()) return cfg.start_points.front();
    throw ConfigError("verify needs mc.control_point or problem.start_points");
}

inline VerifyOutcome run_verify_checks(const ProblemConfig& cfg, const SolveOutputs& s,
                                       bool negative_control) {
    const SpaceTimeGrid& grid = s.grid;
    const MCConfig mcc = make_mc_config(cfg);
    const double tol = scheme_tolerance(grid, cfg.mc.scheme_tol_c);
    const double alpha = cfg.model.alpha;
    const SpaceTimeFn cost_fn = cfg.cost ? field_fn(*cfg.cost) : SpaceTimeFn();
    const SpaceTimeFn* cost = cfg.cost ? &cost_fn : nullptr;
    const std::vector<std::size_t> cps = checkpoint_slices(grid, cfg.mc.checkpoint_times);

    VerifyOutcome out;
    auto add = [&](McCheck c) {
        out.all_pass = out.all_pass && c.pass;
        out.checks.push_back(std::move(c));
    };
    auto add_all = [&](std::vector<McCheck> cs) {
        for (auto& c : cs) add(std::move(c));
    };

    const std::array<double, 2> cp = verify_control_point(cfg);

    if (cfg.kind == ProblemConfig::Kind::Stopping) {
        const VISolution& sol = *s.stopping;
        const PolicyRegion contact(grid, sol.contact);
        const SpaceTimeFn payoff = field_fn(cfg.obstacle);

        for (std::size_t i = 0; i < cfg.start_points.size(); ++i) {
            const auto& x0 = cfg.start_points[i];
            const PathBundle b = simulate_paths(cfg.model, grid, mcc, 0.0, x0);
            const double v0 = interp_space(grid, sol.value, 0, x0);
            add(check_value_match("value_match_s" + std::to_string(i), b, contact,
                                  payoff, cost, alpha, v0, tol));
        }

        const PathBundle bc = simulate_paths(cfg.model, grid, mcc, 0.0, cp);
        add_all(check_stopping_suboptimality(bc, contact,
                                             stopping_policy_suite(grid, contact),
                                             payoff, cost, alpha, tol, "policy"));
        if (!cps.empty()) {
            add_all(check_supermartingale(bc, sol.value, payoff, alpha, cps, tol, cost));
            add_all(check_supermartingale(bc, sol.value, payoff, alpha, cps, tol, cost,
                                          &contact, true));
        }
        if (negative_control) {
            out.control_requested = true;
            std::vector<McCheck> ctrl = check_supermartingale(
                bc, s.g_field, payoff, alpha,
                cps.empty() ? checkpoint_slices(grid, {grid.horizon() * 0.5,
                                                       grid.horizon()})
                            : cps,
                tol, cost);
            for (auto& c : ctrl) {
                c.name = "control_" + c.name;
                out.control_flagged = out.control_flagged || !c.pass;
                out.control_checks.push_back(std::move(c));
            }
        }
    } else {
        const GameSolution& sol = *s.game;
        const PolicyRegion tau_hat(grid, sol.region_upper);
        const PolicyRegion sigma_hat(grid, sol.region_lower);
        const SpaceTimeFn g_fn = field_fn(cfg.lower);
        const SpaceTimeFn h_fn = field_fn(cfg.upper);
        const SpaceTimeFn chi = game_chi_fn(cfg.lower, cfg.upper);
        const SpaceTimeFn chi_pos = [chi](double t, const std::array<double, 2>& x) {
            return std::max(chi(t, x), 0.0);
        };
        const SpaceTimeFn chi_neg = [chi](double t, const std::array<double, 2>& x) {
            return std::max(-chi(t, x), 0.0);
        };

        for (std::size_t i = 0; i < cfg.start_points.size(); ++i) {
            const auto& x0 = cfg.start_points[i];
            const PathBundle b = simulate_paths(cfg.model, grid, mcc, 0.0, x0);
            const MCEstimate est =
                evaluate_game_payoff(b, tau_hat, sigma_hat, g_fn, h_fn, alpha, cost);
            const double v0 = interp_space(grid, sol.value, 0, x0);
            McCheck chk;
            chk.name = "game_value_match_s" + std::to_string(i);
            chk.estimate = est.mean - v0;
            chk.std_error = est.std_error;
            chk.bound = 3.0 * est.std_error + tol;
            chk.pass = std::fabs(chk.estimate) <= chk.bound;
            add(std::move(chk));
        }

        const PathBundle bc = simulate_paths(cfg.model, grid, mcc, 0.0, cp);
        add_all(check_saddle(bc, tau_hat, sigma_hat, g_fn, h_fn, cost, alpha, tol,
                             "game"));
        if (!cps.empty()) {
            std::vector<McCheck> phi_cs = check_supermartingale(
                bc, sol.phi_bar, chi_pos, alpha, cps, tol, cost);
            for (auto& c : phi_cs) c.name = "phi_" + c.name;
            add_all(std::move(phi_cs));
            std::vector<McCheck> psi_cs = check_supermartingale(
                bc, sol.psi_bar, chi_neg, alpha, cps, tol, cost);
            for (auto& c : psi_cs) c.name = "psi_" + c.name;
            add_all(std::move(psi_cs));
        }
        if (negative_control) {
            out.control_requested = true;
            std::vector<McCheck> ctrl = check_supermartingale(
                bc, s.g_field, g_fn, alpha,
                cps.empty() ? checkpoint_slices(grid, {grid.horizon() * 0.5,
                                                       grid.horizon()})
                            : cps,
                tol, cost);
            for (auto& c : ctrl) {
                c.name = "control_" + c.name;
                out.control_flagged = out.control_flagged || !c.pass;
                out.control_checks.push_back(std::move(c));
            }
        }
    }
    return out;
}

inline nlohmann::json verify_report_json(const VerifyOutcome& v) {
    nlohmann::json j;
    nlohmann::json checks = nlohmann::json::array();
    for (const auto& c : v.checks) checks.push_back(check_to_json(c));
    j["checks"] = checks;
    j["all_pass"] = v.all_pass;
    if (v.control_requested) {
        nlohmann::json ctrl = nlohmann::json::array();
        for (const auto& c : v.control_checks) ctrl.push_back(check_to_json(c));
        j["negative_control"] = {{"checks", ctrl}, {"flagged", v.control_flagged}};
    }
    return j;
}

// Solves in-run, writes the solver artifacts plus verify_report.json, and
// returns the process exit code.
inline int run_verify(const ProblemConfig& cfg, const std::string& out_dir,
                      bool negative_control) {
    const SolveOutputs s = run_solve(cfg);
    write_solve_artifacts(cfg, s, out_dir);
    const VerifyOutcome v = run_verify_checks(cfg, s, negative_control);
    namespace fs = std::filesystem;
    write_json_file((fs::path(out_dir) / "verify_report.json").string(),
                    verify_report_json(v));
    bool ok = v.all_pass;
    if (v.control_requested) ok = ok && v.control_flagged;
    return ok ? 0 : kExitVerify;
}

// --- oracle comparison -----------------------------------------------------

struct OracleComparison {
    double max_abs_diff = 0.0;
    double lcp_worst = 0.0;  // complementarity residual of the penalty value
    double tol = 0.0;
    bool pass = false;
};

inline OracleComparison compare_with_oracle(const ProblemConfig& cfg,
                                            const SolveOutputs& s) {
    OperatorTable ops(cfg.model, s.density, s.grid);
    OracleComparison cmp;
    cmp.tol = cfg.oracle_compare_tol;
    if (cfg.kind == ProblemConfig::Kind::Stopping) {
        const ScalarField oracle =
            psor_obstacle_march(ops, s.g_field, cfg.model.alpha, cfg.psor,
                                s.f_field ? &*s.f_field : nullptr);
        cmp.max_abs_diff = max_abs_diff(s.stopping->value, oracle);
        cmp.lcp_worst = lcp_residual(ops, s.stopping->value, s.g_field, nullptr,
                                     cfg.model.alpha, 0.0,
                                     s.f_field ? &*s.f_field : nullptr);
    } else {
        GameProblem prob;
        prob.lower = s.g_field;
        prob.upper = s.h_field;
        prob.alpha = cfg.model.alpha;
        if (s.f_field) prob.cost = *s.f_field;
        const ScalarField oracle = double_obstacle_oracle(ops, prob, cfg.psor);
        cmp.max_abs_diff = max_abs_diff(s.game->value, oracle);
        cmp.lcp_worst = lcp_residual(ops, s.game->value, s.g_field, &s.h_field,
                                     cfg.model.alpha, 0.0,
                                     s.f_field ? &*s.f_field : nullptr);
    }
    cmp.pass = cmp.max_abs_diff <= cmp.tol;
    return cmp;
}

inline int run_compare_oracle(const ProblemConfig& cfg, const std::string& out_dir) {
    const SolveOutputs s = run_solve(cfg);
    write_solve_artifacts(cfg, s, out_dir);
    const OracleComparison cmp = compare_with_oracle(cfg, s);
    nlohmann::json j;
    j["max_abs_diff"] = cmp.max_abs_diff;
    j["lcp_residual"] = cmp.lcp_worst;
    j["tol"] = cmp.tol;
    j["pass"] = cmp.pass;
    namespace fs = std::filesystem;
    write_json_file((fs::path(out_dir) / "compare_report.json").string(), j);
    return cmp.pass ? 0 : kExitVerify;
}

// --- report ----------------------------------------------------------------

inline int run_report(const std::string& out_dir, std::ostream& os) {
    namespace fs = std::filesystem;
    const fs::path dir(out_dir);
    const fs::path diag = dir / "diagnostics.json";
    if (!fs::exists(diag)) {
        os << "no solver artifacts in " << out_dir << "\n";
        return kExitVerify;
    }
    const nlohmann::json j = read_json_file(diag.string());
    os << "problem kind: " << j.value("kind", std::string("?")) << "\n";
    if (j.contains("grid")) {
        os << "grid: " << j["grid"].value("n_slices", 0) << " time slices x "
           << j["grid"].value("n_space", 0) << " space nodes\n";
    }
    if (j.contains("density_residual")) {
        os << "density residual: " << j["density_residual"].get<double>() << "\n";
    }
    if (j.contains("eps_used")) {
        os << "penalty continuation: " << j["eps_used"].size() << " stages, final eps "
           << j["eps_used"].back().get<double>() << "\n";
        os << "obstacle undershoot: " << j["penalty_residual"].get<double>() << "\n";
        os << "supersolution defect: " << j["supersolution_defect"].get<double>() << "\n";
    }
    if (j.contains("outer_iters")) {
        os << "game outer iterations: " << j["outer_iters"].get<std::size_t>() << "\n";
        os << "monotonicity defect: " << j["monotonicity_defect"].get<double>() << "\n";
    }

    const fs::path vrep = dir / "verify_report.json";
    if (fs::exists(vrep)) {
        const nlohmann::json v = read_json_file(vrep.string());
        std::size_t pass = 0, total = 0;
        for (const auto& c : v["checks"]) {
            ++total;
            if (c.value("pass", false)) ++pass;
        }
        os << "verification: " << pass << "/" << total << " checks pass\n";
        for (const auto& c : v["checks"]) {
            if (!c.value("pass", false)) {
                os << "  FAIL " << c.value("name", std::string("?")) << ": estimate "
                   << c.value("estimate", 0.0) << " vs bound " << c.value("bound", 0.0)
                   << "\n";
            }
        }
        if (v.contains("negative_control")) {
            os << "negative control flagged: "
               << (v["negative_control"].value("flagged", false) ? "yes" : "no") << "\n";
        }
    }
    const fs::path crep = dir / "compare_report.json";
    if (fs::exists(crep)) {
        const nlohmann::json c = read_json_file(crep.string());
        os << "oracle max diff: " << c.value("max_abs_diff", 0.0) << " (tol "
           << c.value("tol", 0.0) << ", " << (c.value("pass", false) ? "pass" : "FAIL")
           << ")\n";
    }
    return 0;
}

}  // namespace dvi
