#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dvi/assembly.hpp"
#include "dvi/errors.hpp"
#include "dvi/fields.hpp"
#include "dvi/resolvent.hpp"
#include "dvi/rng.hpp"
#include "dvi/slicesolve.hpp"

namespace dvi {

struct PenaltyConfig {
    // Strictly decreasing penalty parameters; the march is rerun for each,
    // warm-started from the previous solution.
    std::vector<double> eps_schedule = {1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6};
    // Also the continuation stop: successive eps-solutions closer than this
    // in sup norm end the schedule early.
    double inner_tol = 1e-10;
    std::size_t max_inner_iters = 200;
    // Disable the early stop; the game iteration needs the envelope map to
    // be the same map every outer round.
    bool full_schedule = false;
    // Contact classification threshold; defaults to 1e-6 * (1 + |g|_inf).
    std::optional<double> contact_tol;

    void validate() const {
        if (eps_schedule.empty()) throw ConfigError("penalty.eps_schedule: empty");
        for (std::size_t j = 0; j < eps_schedule.size(); ++j) {
            if (!(eps_schedule[j] > 0.0)) {
                throw ConfigError("penalty.eps_schedule: entries must be positive");
            }
            if (j > 0 && !(eps_schedule[j] < eps_schedule[j - 1])) {
                throw ConfigError("penalty.eps_schedule: must be strictly decreasing");
            }
        }
        if (!(inner_tol > 0.0)) throw ConfigError("penalty.inner_tol: must be positive");
        if (max_inner_iters == 0) throw ConfigError("penalty.max_inner_iters: must be positive");
    }
};

inline double resolve_contact_tol(const PenaltyConfig& cfg, const ScalarField& g) {
    return cfg.contact_tol ? *cfg.contact_tol : 1e-6 * (1.0 + g.max_norm());
}

struct VISolution {
    ScalarField value;
    std::vector<std::uint8_t> contact;  // slice-major, same layout as value
    double contact_tol = 0.0;

    // Continuation diagnostics, one entry per eps actually run.
    std::vector<double> eps_used;
    std::vector<std::size_t> newton_iters;      // total active-set solves
    std::vector<double> continuation_delta;     // sup-diff from previous eps
    std::vector<double> continuation_min_gap;   // most negative (u_new - u_prev)

    double penalty_residual = 0.0;       // max obstacle undershoot at final eps
    double complementarity = 0.0;        // (1/eps) * (max undershoot)^2
    double supersolution_defect = 0.0;   // most negative mass-scaled row residual

    bool in_contact(std::size_t k, std::size_t i) const {
        return contact[k * value.n_space() + i] != 0;
    }
};

namespace detail {

struct MarchStats {
    std::size_t total_solves = 0;
    std::size_t worst_slice_solves = 0;
};

// Backward march of the penalized scheme at fixed eps.  Each slice solves
//   (M/dt + K + alpha M) u - (1/eps) M (u - g)^- = M u_next / dt + M f
// by the primal-dual active-set iteration; for a fixed active set the update
// is one linear solve, and a repeated active set certifies the exact
// solution of the piecewise-linear system, so no residual threshold enters.
inline ScalarField penalized_march(OperatorTable& ops, const ScalarField& g,
                                   double alpha, double eps,
                                   const PenaltyConfig& cfg, const ScalarField* f,
                                   const ScalarField* bc, const ScalarField* warm,
                                   MarchStats* stats = nullptr) {
    const SpaceTimeGrid& grid = ops.grid();
    const std::size_t n = grid.n_space();
    const std::size_t M = grid.n_slices() - 1;
    const ScalarField& bcf = bc ? *bc : g;

    ScalarField u(grid, 0.0);
    for (std::size_t i = 0; i < n; ++i) u(M, i) = bcf(M, i);

    std::vector<double> rhs(n), rhs_pen(n), extra(n), bc_slice(n), cur(n), next(n);
    std::vector<std::uint8_t> active(n), prev_active(n);

    for (std::size_t k = M; k-- > 0;) {
        const SliceOperator& op = ops.at(k);
        const double dt = grid.dt(k);
        SliceSystem sys(grid, op, alpha, dt);

        for (std::size_t i = 0; i < n; ++i) {
            rhs[i] = op.mass[i] * (u(k + 1, i) / dt + (f ? (*f)(k, i) : 0.0));
            bc_slice[i] = bcf(k, i);
            cur[i] = warm ? (*warm)(k, i) : u(k + 1, i);
        }

        bool converged = false;
        bool have_prev = false;
        std::size_t solves = 0;
        while (solves < cfg.max_inner_iters) {
            for (std::size_t i = 0; i < n; ++i) {
                active[i] = (!grid.is_boundary(i) && cur[i] < g(k, i)) ? 1 : 0;
            }
            if (have_prev && active == prev_active) {
                converged = true;
                break;
            }
            for (std::size_t i = 0; i < n; ++i) {
                if (active[i]) {
                    extra[i] = op.mass[i] / eps;
                    rhs_pen[i] = rhs[i] + op.mass[i] / eps * g(k, i);
                } else {
                    extra[i] = 0.0;
                    rhs_pen[i] = rhs[i];
                }
            }
            sys.solve(rhs_pen, extra, bc_slice, next);
            cur.swap(next);
            prev_active = active;
            have_prev = true;
            ++solves;
        }
        if (!converged) {
            throw PenaltyDivergence("active-set iteration did not settle within " +
                                        std::to_string(cfg.max_inner_iters) +
                                        " solves at slice " + std::to_string(k),
                                    k);
        }
        if (stats) {
            stats->total_solves += solves;
            stats->worst_slice_solves = std::max(stats->worst_slice_solves, solves);
        }
        for (std::size_t i = 0; i < n; ++i) u(k, i) = cur[i];
    }
    return u;
}

// Most negative interior row residual (A u^k - M u^{k+1}/dt - M f^k) / m_i.
// Non-negative up to rounding for a converged penalized solution; certifies
// the discrete supersolution (alpha-potential) property.
inline double supersolution_defect(OperatorTable& ops, const ScalarField& u,
                                   const ScalarField* f, double alpha) {
    const SpaceTimeGrid& grid = ops.grid();
    const std::size_t n = grid.n_space();
    double worst = 0.0;
    Eigen::VectorXd uk(n), Ku(n);
    for (std::size_t k = 0; k + 1 < grid.n_slices(); ++k) {
        const SliceOperator& op = ops.at(k);
        const double dt = grid.dt(k);
        for (std::size_t i = 0; i < n; ++i) uk[static_cast<Eigen::Index>(i)] = u(k, i);
        Ku = op.stiffness * uk;
        for (std::size_t i = 0; i < n; ++i) {
            if (grid.is_boundary(i)) continue;
            const double m = op.mass[i];
            const double row = m * (u(k, i) - u(k + 1, i)) / dt +
                               Ku[static_cast<Eigen::Index>(i)] + alpha * m * u(k, i) -
                               m * (f ? (*f)(k, i) : 0.0);
            worst = std::min(worst, row / m);
        }
    }
    return worst;
}

}  // namespace detail

// One penalized solve at fixed eps.
inline ScalarField solve_penalized(OperatorTable& ops, const ScalarField& g,
                                   double alpha, double eps, const PenaltyConfig& cfg,
                                   const ScalarField* f = nullptr,
                                   const ScalarField* bc = nullptr,
                                   const ScalarField* warm = nullptr) {
    cfg.validate();
    if (!(eps > 0.0)) throw ConfigError("penalty eps must be positive");
    return detail::penalized_march(ops, g, alpha, eps, cfg, f, bc, warm);
}

// Run the eps-schedule with warm starts; stop early once successive
// eps-solutions differ by less than inner_tol in sup norm.
inline VISolution solve_obstacle(OperatorTable& ops, const ScalarField& g,
                                 double alpha, const PenaltyConfig& cfg,
                                 const ScalarField* f = nullptr,
                                 const ScalarField* bc = nullptr) {
    cfg.validate();
    if (!(alpha >= 0.0)) throw ConfigError("alpha must be non-negative");
    const SpaceTimeGrid& grid = ops.grid();
    if (g.n_slices() != grid.n_slices() || g.n_space() != grid.n_space()) {
        throw AssemblyError("obstacle shape does not match grid");
    }
    if (!g.all_finite()) throw AssemblyError("obstacle field has non-finite values");

    VISolution sol;
    ScalarField prev;
    bool have_prev = false;
    for (double eps : cfg.eps_schedule) {
        detail::MarchStats stats;
        ScalarField u = detail::penalized_march(ops, g, alpha, eps, cfg, f, bc,
                                                have_prev ? &prev : nullptr, &stats);
        sol.eps_used.push_back(eps);
        sol.newton_iters.push_back(stats.total_solves);
        double delta = 0.0;
        if (have_prev) {
            delta = max_abs_diff(u, prev);
            sol.continuation_delta.push_back(delta);
            sol.continuation_min_gap.push_back(min_gap(u, prev));
        }
        prev = std::move(u);
        have_prev = true;
        if (!cfg.full_schedule && !sol.continuation_delta.empty() &&
            delta < cfg.inner_tol) {
            break;
        }
    }
    sol.value = std::move(prev);

    const double eps_final = sol.eps_used.back();
    double undershoot = 0.0;
    for (std::size_t j = 0; j < sol.value.data().size(); ++j) {
        undershoot = std::max(undershoot, g.data()[j] - sol.value.data()[j]);
    }
    sol.penalty_residual = undershoot;
    sol.complementarity = undershoot * undershoot / eps_final;
    sol.supersolution_defect = detail::supersolution_defect(ops, sol.value, f, alpha);

    sol.contact_tol = resolve_contact_tol(cfg, g);
    sol.contact.assign(sol.value.data().size(), 0);
    for (std::size_t j = 0; j < sol.value.data().size(); ++j) {
        sol.contact[j] = (sol.value.data()[j] - g.data()[j] <= sol.contact_tol) ? 1 : 0;
    }
    return sol;
}

// Holding-cost problem via the resolvent reduction: subtract the resolvent
// of the cost from the obstacle, solve the plain problem, add it back.  The
// penalized slice systems of the two formulations are identical after the
// shift, so this agrees with a direct costed march to rounding.
inline VISolution solve_obstacle_with_cost(OperatorTable& ops, const ScalarField& g,
                                           const ScalarField& f, double alpha,
                                           const PenaltyConfig& cfg) {
    cfg.validate();
    ScalarField r = resolvent_apply(ops, f, alpha);
    ScalarField ghat = g;
    for (std::size_t j = 0; j < ghat.data().size(); ++j) {
        ghat.data()[j] -= r.data()[j];
    }
    PenaltyConfig sub_cfg = cfg;
    sub_cfg.contact_tol = resolve_contact_tol(cfg, g);
    VISolution sol = solve_obstacle(ops, ghat, alpha, sub_cfg);
    for (std::size_t j = 0; j < sol.value.data().size(); ++j) {
        sol.value.data()[j] += r.data()[j];
    }
    return sol;
}

// Convenience wrappers assembling their own operator table.
inline VISolution solve_obstacle(const DiffusionModel& model,
                                 const SymmetrizingDensity& density,
                                 const SpaceTimeGrid& grid, const ScalarField& g,
                                 double alpha, const PenaltyConfig& cfg) {
    OperatorTable ops(model, density, grid);
    return solve_obstacle(ops, g, alpha, cfg);
}

inline VISolution solve_obstacle_with_cost(const DiffusionModel& model,
                                           const SymmetrizingDensity& density,
                                           const SpaceTimeGrid& grid,
                                           const ScalarField& g, const ScalarField& f,
                                           double alpha, const PenaltyConfig& cfg) {
    OperatorTable ops(model, density, grid);
    return solve_obstacle_with_cost(ops, g, f, alpha, cfg);
}

// Weak-form check of the converged solution: for trial fields psi >= g that
// agree with the solution on the spatial boundary and the terminal slice,
//   E_alpha(u, psi - u) - (f, psi - u)_nu >= 0
// must hold.  Trials are the obstacle itself, smooth bumps, and random
// non-negative bumps.  Returns the worst normalized violation (0 = clean).
inline double vi_residual_check(OperatorTable& ops, const VISolution& sol,
                               const ScalarField& g, double alpha,
                               std::size_t trial_count, std::uint64_t seed,
                               const ScalarField* f = nullptr) {
    const SpaceTimeGrid& grid = ops.grid();
    const ScalarField& u = sol.value;
    const std::size_t n = grid.n_space();
    const std::size_t M = grid.n_slices() - 1;
    const double amp = 0.25 * (1.0 + u.max_norm());

    double worst = 0.0;
    for (std::size_t trial = 0; trial <= trial_count; ++trial) {
        ScalarField theta(grid, 0.0);
        if (trial == 0) {
            // Obstacle trial: psi = max(g, u).
            for (std::size_t k = 0; k < M; ++k) {
                for (std::size_t i = 0; i < n; ++i) {
                    if (!grid.is_boundary(i)) {
                        theta(k, i) = std::max(g(k, i) - u(k, i), 0.0);
                    }
                }
            }
        } else if (trial % 2 == 1) {
            PathRng rng(seed, trial);
            for (std::size_t k = 0; k < M; ++k) {
                for (std::size_t i = 0; i < n; ++i) {
                    if (!grid.is_boundary(i)) theta(k, i) = amp * rng.next_uniform();
                }
            }
        } else {
            PathRng rng(seed, trial);
            std::array<double, 2> c{}, w{};
            for (int d = 0; d < grid.dim(); ++d) {
                const double lo = grid.axis(d).front();
                const double hi = grid.axis(d).back();
                c[d] = lo + (hi - lo) * rng.next_uniform();
                w[d] = 0.1 * (hi - lo) * (0.5 + rng.next_uniform());
            }
            for (std::size_t k = 0; k < M; ++k) {
                for (std::size_t i = 0; i < n; ++i) {
                    if (grid.is_boundary(i)) continue;
                    const auto p = grid.point(i);
                    double b = 1.0;
                    for (int d = 0; d < grid.dim(); ++d) {
                        const double z = (p[d] - c[d]) / w[d];
                        b *= std::max(0.0, 1.0 - z * z);
                    }
                    theta(k, i) = amp * b;
                }
            }
        }

        // E_alpha(u, psi - u) evaluated directly on theta = psi - u; the
        // form is linear in its test argument.
        const double form =
            spacetime_form(ops, u, theta, alpha, TimeDerivativeSide::FirstArg);
        double load = 0.0;
        double theta_mass = 0.0;
        for (std::size_t k = 0; k < M; ++k) {
            const auto& m = ops.at(k).mass;
            const double dt = grid.dt(k);
            for (std::size_t i = 0; i < n; ++i) {
                if (f) load += dt * m[i] * (*f)(k, i) * theta(k, i);
                theta_mass += dt * m[i] * std::fabs(theta(k, i));
            }
        }
        const double violation = (load - form) / (1.0 + theta_mass);
        worst = std::max(worst, violation);
    }
    return worst;
}

}  // namespace dvi
