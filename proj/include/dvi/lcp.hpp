#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "dvi/assembly.hpp"
#include "dvi/errors.hpp"
#include "dvi/fields.hpp"
#include "dvi/grid.hpp"

namespace dvi {

// Projected SOR oracle for the slice complementarity problems.  Entirely
// independent of the penalty path: it never forms a penalty term and solves
// each backward-Euler slice as a (one- or two-sided) LCP by relaxation
// sweeps with clamping.
struct PsorConfig {
    double omega = 1.9;          // relaxation factor in (0, 2)
    double tol = 1e-10;          // sweep-to-sweep sup change, relative scale
    std::size_t max_sweeps = 50000;

    void validate() const {
        if (!(omega > 0.0 && omega < 2.0)) throw ConfigError("psor.omega: need 0 < omega < 2");
        if (!(tol > 0.0)) throw ConfigError("psor.tol: must be positive");
        if (max_sweeps == 0) throw ConfigError("psor.max_sweeps: must be positive");
    }
};

namespace detail {

struct RowEntry {
    std::size_t col;
    double val;
};

// Row lists of A = M/dt + K + alpha M for one slice, diagonal separated.
struct SliceRows {
    std::vector<std::vector<RowEntry>> off;
    std::vector<double> diag;

    SliceRows(const SpaceTimeGrid& grid, const SliceOperator& op, double alpha,
              double dt) {
        const std::size_t n = grid.n_space();
        off.resize(n);
        diag.assign(n, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            diag[i] = op.mass[i] / dt + alpha * op.mass[i];
        }
        const auto& K = op.stiffness;
        for (int c = 0; c < K.outerSize(); ++c) {
            for (Eigen::SparseMatrix<double>::InnerIterator it(K, c); it; ++it) {
                const auto r = static_cast<std::size_t>(it.row());
                const auto cc = static_cast<std::size_t>(it.col());
                if (r == cc) {
                    diag[r] += it.value();
                } else {
                    off[r].push_back({cc, it.value()});
                }
            }
        }
    }
};

// Clamped double-sweep relaxation on one slice.  lower/upper are the slice
// obstacle rows; boundary nodes stay at bc.  u holds the warm start and the
// result.
inline void psor_slice(const SpaceTimeGrid& grid, const SliceRows& rows,
                       const std::vector<double>& rhs, const double* lower,
                       const double* upper, const std::vector<double>& bc,
                       const PsorConfig& cfg, std::size_t slice_for_message,
                       std::vector<double>& u) {
    const std::size_t n = grid.n_space();
    for (std::size_t i = 0; i < n; ++i) {
        if (grid.is_boundary(i)) u[i] = bc[i];
    }
    auto relax = [&](std::size_t i, double& change) {
        if (grid.is_boundary(i)) return;
        double s = rhs[i];
        for (const auto& e : rows.off[i]) s -= e.val * u[e.col];
        double v = u[i] + cfg.omega * (s / rows.diag[i] - u[i]);
        if (lower) v = std::max(v, lower[i]);
        if (upper) v = std::min(v, upper[i]);
        change = std::max(change, std::fabs(v - u[i]));
        u[i] = v;
    };
    double scale = 1.0;
    for (std::size_t i = 0; i < n; ++i) scale = std::max(scale, std::fabs(u[i]));
    for (std::size_t sweep = 0; sweep < cfg.max_sweeps; ++sweep) {
        double change = 0.0;
        for (std::size_t i = 0; i < n; ++i) relax(i, change);
        for (std::size_t i = n; i-- > 0;) relax(i, change);
        if (change <= cfg.tol * scale) return;
    }
    throw SchemeError("projected SOR did not converge at slice " +
                      std::to_string(slice_for_message));
}

// Shared backward march; upper == nullptr gives the one-obstacle problem.
inline ScalarField psor_march(OperatorTable& ops, const ScalarField& lower,
                              const ScalarField* upper, const ScalarField& bc,
                              double alpha, const PsorConfig& cfg,
                              const ScalarField* f) {
    cfg.validate();
    const SpaceTimeGrid& grid = ops.grid();
    const std::size_t n = grid.n_space();
    const std::size_t M = grid.n_slices() - 1;
    ScalarField u(grid, 0.0);
    for (std::size_t i = 0; i < n; ++i) u(M, i) = bc(M, i);

    std::vector<double> rhs(n), bc_slice(n), cur(n);
    for (std::size_t k = M; k-- > 0;) {
        const SliceOperator& op = ops.at(k);
        const double dt = grid.dt(k);
        SliceRows rows(grid, op, alpha, dt);
        for (std::size_t i = 0; i < n; ++i) {
            rhs[i] = op.mass[i] * (u(k + 1, i) / dt + (f ? (*f)(k, i) : 0.0));
            bc_slice[i] = bc(k, i);
            double v = u(k + 1, i);
            v = std::max(v, lower(k, i));
            if (upper) v = std::min(v, (*upper)(k, i));
            cur[i] = v;
        }
        psor_slice(grid, rows, rhs, lower.slice(k), upper ? upper->slice(k) : nullptr,
                   bc_slice, cfg, k, cur);
        for (std::size_t i = 0; i < n; ++i) {
            if (!std::isfinite(cur[i])) throw SchemeError("PSOR produced non-finite value");
            u(k, i) = cur[i];
        }
    }
    return u;
}

}  // namespace detail

// One-obstacle oracle: backward-Euler LCP marched by projected SOR.
// Boundary and terminal data default to the obstacle, matching the penalty
// path's convention.
inline ScalarField psor_obstacle_march(OperatorTable& ops, const ScalarField& g,
                                       double alpha, const PsorConfig& cfg,
                                       const ScalarField* f = nullptr,
                                       const ScalarField* bc = nullptr) {
    return detail::psor_march(ops, g, nullptr, bc ? *bc : g, alpha, cfg, f);
}

// Two-obstacle oracle: clamps into [g, h]; bc supplies boundary and
// terminal data (the solver convention is the median of g, 0, h).
inline ScalarField psor_double_obstacle_march(OperatorTable& ops,
                                              const ScalarField& g,
                                              const ScalarField& h,
                                              const ScalarField& bc, double alpha,
                                              const PsorConfig& cfg,
                                              const ScalarField* f = nullptr) {
    if (min_gap(h, g) < 0.0) throw ConfigError("two-obstacle oracle needs g <= h");
    return detail::psor_march(ops, g, &h, bc, alpha, cfg, f);
}

// Worst violation of the slice complementarity systems for a marched field:
// obstacle bounds, vanishing mass-scaled residual strictly between the
// obstacles, and one-sided residual signs on the contact sets.  band picks
// the obstacle classification width; residuals are scaled by dual-cell mass.
inline double lcp_residual(OperatorTable& ops, const ScalarField& u,
                           const ScalarField& g, const ScalarField* h,
                           double alpha, double band,
                           const ScalarField* f = nullptr) {
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
            const double r = (m * (u(k, i) - u(k + 1, i)) / dt +
                              Ku[static_cast<Eigen::Index>(i)] + alpha * m * u(k, i) -
                              m * (f ? (*f)(k, i) : 0.0)) /
                             m;
            const double lo_gap = u(k, i) - g(k, i);
            const double hi_gap = h ? (*h)(k, i) - u(k, i)
                                    : std::numeric_limits<double>::infinity();
            worst = std::max(worst, -lo_gap);
            worst = std::max(worst, -hi_gap);
            const bool at_lower = lo_gap <= band;
            const bool at_upper = hi_gap <= band;
            if (!at_lower && !at_upper) {
                worst = std::max(worst, std::fabs(r));
            } else if (at_lower) {
                worst = std::max(worst, -r);
            } else {
                worst = std::max(worst, r);
            }
        }
    }
    return worst;
}

}  // namespace dvi
