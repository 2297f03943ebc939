#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dvi/assembly.hpp"
#include "dvi/errors.hpp"
#include "dvi/fields.hpp"
#include "dvi/lcp.hpp"
#include "dvi/obstacle.hpp"
#include "dvi/resolvent.hpp"

namespace dvi {

// Zero-sum stopping game between a player paying h when stopping first
// (ties included) and a player receiving g.  Obstacles must satisfy g <= h;
// the optional witness (v1, v2) documents the separability condition
// g <= v1 - v2 <= h and is validated pointwise on the grid when present.
struct GameProblem {
    ScalarField lower;  // g
    ScalarField upper;  // h
    std::optional<ScalarField> cost;  // holding-cost density f
    double alpha = 0.0;
    std::optional<std::pair<ScalarField, ScalarField>> witness;
};

struct GameConfig {
    PenaltyConfig penalty;
    double outer_tol = 1e-7;
    std::size_t max_outer_iters = 200;

    void validate() const {
        penalty.validate();
        if (!(outer_tol > 0.0)) throw ConfigError("game.outer_tol: must be positive");
        if (max_outer_iters == 0) throw ConfigError("game.max_outer_iters: must be positive");
    }
};

struct GameSolution {
    ScalarField value;     // w = phi - psi (+ resolvent of the cost, if any)
    ScalarField phi_bar;   // limit of the upper envelope iterates
    ScalarField psi_bar;   // limit of the lower envelope iterates
    std::vector<std::uint8_t> region_lower;  // {value = g}: stop region of sigma
    std::vector<std::uint8_t> region_upper;  // {value = h}: stop region of tau
    double contact_tol = 0.0;

    std::size_t outer_iters = 0;
    std::vector<double> outer_delta;   // sup change per outer iteration
    double monotonicity_defect = 0.0;  // most negative iterate increment
};

// Boundary/terminal data of the game: the zero of the complementarity
// bracket, median(g, 0, h) pointwise.
inline ScalarField game_boundary_data(const ScalarField& g, const ScalarField& h) {
    ScalarField chi = g;
    for (std::size_t j = 0; j < chi.data().size(); ++j) {
        chi.data()[j] = std::min(std::max(g.data()[j], 0.0), h.data()[j]);
    }
    return chi;
}

namespace detail {

inline void check_game_obstacles(const GameProblem& prob, const SpaceTimeGrid& grid) {
    const ScalarField& g = prob.lower;
    const ScalarField& h = prob.upper;
    if (g.n_slices() != grid.n_slices() || g.n_space() != grid.n_space() ||
        !h.same_shape(g)) {
        throw AssemblyError("game obstacle shape does not match grid");
    }
    if (!g.all_finite() || !h.all_finite()) {
        throw AssemblyError("game obstacles have non-finite values");
    }
    if (min_gap(h, g) < 0.0) {
        throw ConfigError("problem obstacles: lower exceeds upper somewhere on the grid");
    }
    if (prob.witness) {
        const auto& [v1, v2] = *prob.witness;
        if (!v1.same_shape(g) || !v2.same_shape(g)) {
            throw AssemblyError("separability witness shape does not match grid");
        }
        const double slack = 1e-9 * (1.0 + g.max_norm() + h.max_norm());
        for (std::size_t j = 0; j < g.data().size(); ++j) {
            const double d = v1.data()[j] - v2.data()[j];
            if (d < g.data()[j] - slack || d > h.data()[j] + slack) {
                throw ConfigError("problem.witness: v1 - v2 leaves [g, h] on the grid");
            }
        }
    }
}

}  // namespace detail

// Alternating two-obstacle iteration: from phi_0 = psi_0 = 0,
//   psi_n = envelope(phi_{n-1} - h),   phi_n = envelope(psi_n + g),
// each envelope solved by the penalized one-obstacle march with fixed
// boundary data chi^+ resp. chi^-.  Both sequences increase; iteration
// stops when one round moves neither by more than outer_tol.
inline GameSolution iterate_game(OperatorTable& ops, const GameProblem& prob,
                                 const GameConfig& cfg) {
    cfg.validate();
    const SpaceTimeGrid& grid = ops.grid();
    detail::check_game_obstacles(prob, grid);
    if (prob.cost) {
        throw ConfigError("iterate_game solves the costless game; use solve_game_with_cost");
    }
    const ScalarField& g = prob.lower;
    const ScalarField& h = prob.upper;

    const ScalarField chi = game_boundary_data(g, h);
    ScalarField bc_phi = chi, bc_psi = chi;
    for (std::size_t j = 0; j < chi.data().size(); ++j) {
        bc_phi.data()[j] = std::max(chi.data()[j], 0.0);
        bc_psi.data()[j] = std::max(-chi.data()[j], 0.0);
    }

    // Half-solves must apply the same obstacle-to-envelope map every round,
    // so the continuation runs its full schedule with no early stop.
    PenaltyConfig inner = cfg.penalty;
    inner.full_schedule = true;
    const auto envelope = [&](const ScalarField& obstacle, const ScalarField& bc) {
        return solve_obstacle(ops, obstacle, prob.alpha, inner, nullptr, &bc).value;
    };

    GameSolution sol;
    ScalarField phi(grid, 0.0), psi(grid, 0.0);
    ScalarField obstacle(grid, 0.0);
    bool converged = false;
    for (std::size_t n = 1; n <= cfg.max_outer_iters; ++n) {
        for (std::size_t j = 0; j < obstacle.data().size(); ++j) {
            obstacle.data()[j] = phi.data()[j] - h.data()[j];
        }
        ScalarField psi_next = envelope(obstacle, bc_psi);
        for (std::size_t j = 0; j < obstacle.data().size(); ++j) {
            obstacle.data()[j] = psi_next.data()[j] + g.data()[j];
        }
        ScalarField phi_next = envelope(obstacle, bc_phi);

        sol.monotonicity_defect = std::min(sol.monotonicity_defect,
                                           std::min(min_gap(psi_next, psi),
                                                    min_gap(phi_next, phi)));
        const double delta =
            std::max(max_abs_diff(phi_next, phi), max_abs_diff(psi_next, psi));
        sol.outer_delta.push_back(delta);
        phi = std::move(phi_next);
        psi = std::move(psi_next);
        sol.outer_iters = n;
        if (delta < cfg.outer_tol) {
            converged = true;
            break;
        }
    }
    if (!converged) {
        throw GameDivergence("two-obstacle iteration did not converge within " +
                             std::to_string(cfg.max_outer_iters) + " rounds");
    }

    sol.phi_bar = std::move(phi);
    sol.psi_bar = std::move(psi);
    sol.value = sol.phi_bar;
    for (std::size_t j = 0; j < sol.value.data().size(); ++j) {
        sol.value.data()[j] -= sol.psi_bar.data()[j];
    }

    sol.contact_tol = 1e-6 * (1.0 + std::max(g.max_norm(), h.max_norm()));
    sol.region_lower.assign(sol.value.data().size(), 0);
    sol.region_upper.assign(sol.value.data().size(), 0);
    for (std::size_t j = 0; j < sol.value.data().size(); ++j) {
        sol.region_lower[j] = (sol.value.data()[j] - g.data()[j] <= sol.contact_tol) ? 1 : 0;
        sol.region_upper[j] = (h.data()[j] - sol.value.data()[j] <= sol.contact_tol) ? 1 : 0;
    }
    return sol;
}

// Game with holding cost: subtract the resolvent of f from both obstacles,
// solve the costless game, add it back to the value.  The stop regions are
// unchanged by the shift and are recomputed against the original obstacles.
inline GameSolution solve_game_with_cost(OperatorTable& ops, const GameProblem& prob,
                                         const GameConfig& cfg) {
    cfg.validate();
    detail::check_game_obstacles(prob, ops.grid());
    if (!prob.cost) {
        return iterate_game(ops, prob, cfg);
    }
    ScalarField r = resolvent_apply(ops, *prob.cost, prob.alpha);
    GameProblem reduced;
    reduced.alpha = prob.alpha;
    reduced.lower = prob.lower;
    reduced.upper = prob.upper;
    for (std::size_t j = 0; j < r.data().size(); ++j) {
        reduced.lower.data()[j] -= r.data()[j];
        reduced.upper.data()[j] -= r.data()[j];
    }
    GameSolution sol = iterate_game(ops, reduced, cfg);
    for (std::size_t j = 0; j < sol.value.data().size(); ++j) {
        sol.value.data()[j] += r.data()[j];
    }
    return sol;
}

// Independent two-obstacle oracle on the same grid: clamped projected SOR
// march with the same boundary data convention.
inline ScalarField double_obstacle_oracle(OperatorTable& ops, const GameProblem& prob,
                                          const PsorConfig& cfg) {
    detail::check_game_obstacles(prob, ops.grid());
    const ScalarField chi = game_boundary_data(prob.lower, prob.upper);
    return psor_double_obstacle_march(ops, prob.lower, prob.upper, chi, prob.alpha,
                                      cfg, prob.cost ? &*prob.cost : nullptr);
}

// Stop-region masks of the saddle candidate, slice-major like the fields.
inline std::pair<std::vector<std::uint8_t>, std::vector<std::uint8_t>>
extract_saddle_regions(const GameSolution& sol) {
    return {sol.region_lower, sol.region_upper};
}

inline GameSolution iterate_game(const DiffusionModel& model,
                                 const SymmetrizingDensity& density,
                                 const SpaceTimeGrid& grid, const GameProblem& prob,
                                 const GameConfig& cfg) {
    OperatorTable ops(model, density, grid);
    return iterate_game(ops, prob, cfg);
}

}  // namespace dvi
