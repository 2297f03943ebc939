#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "dvi/dynkin.hpp"
#include "dvi/fields.hpp"
#include "dvi/grid.hpp"
#include "dvi/mc.hpp"
#include "dvi/obstacle.hpp"

namespace dvi {

struct NamedRegion {
    std::string name;
    PolicyRegion region;
};

inline PolicyRegion solid_region(const SpaceTimeGrid& grid) {
    PolicyRegion out;
    out.n_space = grid.n_space();
    out.mask.assign(grid.n_slices() * grid.n_space(), 1);
    return out;
}

inline PolicyRegion repeat_dilate(const SpaceTimeGrid& grid, const PolicyRegion& r,
                                  std::size_t k) {
    PolicyRegion out = r;
    for (std::size_t j = 0; j < k; ++j) out = dilate_region(grid, out);
    return out;
}

inline PolicyRegion repeat_erode(const SpaceTimeGrid& grid, const PolicyRegion& r,
                                 std::size_t k) {
    PolicyRegion out = r;
    for (std::size_t j = 0; j < k; ++j) out = erode_region(grid, out);
    return out;
}

// Dilations and erosions by 1..3 cells, a mid-horizon deterministic time,
// and "wait to expiry".  Every policy here is admissible, so each one is a
// one-sided test of the solver value's optimality.
inline std::vector<NamedRegion> perturbation_suite(const SpaceTimeGrid& grid,
                                                   const PolicyRegion& base) {
    std::vector<NamedRegion> out;
    for (std::size_t k = 1; k <= 3; ++k) {
        out.push_back({"dilate" + std::to_string(k), repeat_dilate(grid, base, k)});
    }
    for (std::size_t k = 1; k <= 3; ++k) {
        out.push_back({"erode" + std::to_string(k), repeat_erode(grid, base, k)});
    }
    out.push_back({"fixed_mid", fixed_time_region(grid, grid.n_steps() / 2)});
    out.push_back({"never", empty_region(grid)});
    return out;
}

inline std::vector<NamedRegion> stopping_policy_suite(const SpaceTimeGrid& grid,
                                                      const PolicyRegion& contact) {
    std::vector<NamedRegion> out = perturbation_suite(grid, contact);
    const std::size_t M = grid.n_steps();
    out.push_back({"fixed_q1", fixed_time_region(grid, M / 4)});
    out.push_back({"fixed_q3", fixed_time_region(grid, (3 * M) / 4)});
    out.push_back({"immediate", solid_region(grid)});
    return out;
}

// |MC estimate - solver value at the start point| <= 3 stderr + scheme_tol.
inline McCheck check_value_match(const std::string& name, const PathBundle& b,
                                 const PolicyRegion& contact, const SpaceTimeFn& payoff,
                                 const SpaceTimeFn* cost, double alpha,
                                 double solver_value, double scheme_tol) {
    const MCEstimate est = evaluate_stopping_value(b, contact, payoff, alpha, cost);
    McCheck chk;
    chk.name = name;
    chk.estimate = est.mean - solver_value;
    chk.std_error = est.std_error;
    chk.bound = 3.0 * est.std_error + scheme_tol;
    chk.pass = std::fabs(chk.estimate) <= chk.bound;
    return chk;
}

// Every admissible policy must earn at most the solver value: the paired
// estimate of (perturbed - contact policy) payoff stays below tolerance.
inline std::vector<McCheck> check_stopping_suboptimality(
    const PathBundle& b, const PolicyRegion& contact,
    const std::vector<NamedRegion>& suite, const SpaceTimeFn& payoff,
    const SpaceTimeFn* cost, double alpha, double scheme_tol,
    const std::string& name_prefix) {
    std::vector<const PolicyRegion*> policies;
    policies.push_back(&contact);
    for (const auto& nr : suite) policies.push_back(&nr.region);
    const MultiPolicyResult res = evaluate_stopping_multi(b, policies, payoff, cost, alpha);

    std::vector<McCheck> checks;
    for (std::size_t q = 1; q < policies.size(); ++q) {
        const MCEstimate& d = res.diff_vs_first[q];
        McCheck chk;
        chk.name = name_prefix + "_subopt_" + suite[q - 1].name;
        chk.estimate = d.mean;
        chk.std_error = d.std_error;
        chk.bound = 3.0 * d.std_error + scheme_tol;
        chk.pass = chk.estimate <= chk.bound;
        checks.push_back(chk);
    }
    return checks;
}

// Saddle point test.  sigma maximizes (collects the lower obstacle, stops
// on {w = g}); tau minimizes (pays the upper obstacle, stops on {w = h}).
// Unilateral deviation cannot help either player:
//   J(tau_hat, sigma) <= J(tau_hat, sigma_hat) <= J(tau, sigma_hat).
// One common-random-numbers pass evaluates the saddle pair and every
// perturbed pair on identical paths; the identity perturbation is included
// and must come out exactly tied.
inline std::vector<McCheck> check_saddle(const PathBundle& b, const PolicyRegion& tau_hat,
                                         const PolicyRegion& sigma_hat,
                                         const SpaceTimeFn& g, const SpaceTimeFn& h,
                                         const SpaceTimeFn* cost, double alpha,
                                         double scheme_tol,
                                         const std::string& name_prefix) {
    const SpaceTimeGrid& grid = *b.grid;
    const std::vector<NamedRegion> tau_pert = perturbation_suite(grid, tau_hat);
    const std::vector<NamedRegion> sigma_pert = perturbation_suite(grid, sigma_hat);

    std::vector<std::pair<const PolicyRegion*, const PolicyRegion*>> pairs;
    pairs.emplace_back(&tau_hat, &sigma_hat);
    pairs.emplace_back(&tau_hat, &sigma_hat);  // identity perturbation, ties exactly
    for (const auto& nr : tau_pert) pairs.emplace_back(&nr.region, &sigma_hat);
    for (const auto& nr : sigma_pert) pairs.emplace_back(&tau_hat, &nr.region);

    const MultiPolicyResult res = evaluate_game_multi(b, pairs, g, h, cost, alpha);

    std::vector<McCheck> checks;
    {
        const MCEstimate& d = res.diff_vs_first[1];
        McCheck chk;
        chk.name = name_prefix + "_saddle_identity";
        chk.estimate = d.mean;
        chk.std_error = d.std_error;
        chk.bound = 2.0 * d.std_error;
        chk.pass = std::fabs(chk.estimate) <= chk.bound;
        checks.push_back(chk);
    }
    std::size_t q = 2;
    for (const auto& nr : tau_pert) {
        const MCEstimate& d = res.diff_vs_first[q++];
        McCheck chk;
        chk.name = name_prefix + "_saddle_tau_" + nr.name;
        chk.estimate = d.mean;
        chk.std_error = d.std_error;
        chk.bound = 3.0 * d.std_error + scheme_tol;
        chk.pass = chk.estimate >= -chk.bound;  // J(tau', sigma_hat) >= saddle value
        checks.push_back(chk);
    }
    for (const auto& nr : sigma_pert) {
        const MCEstimate& d = res.diff_vs_first[q++];
        McCheck chk;
        chk.name = name_prefix + "_saddle_sigma_" + nr.name;
        chk.estimate = d.mean;
        chk.std_error = d.std_error;
        chk.bound = 3.0 * d.std_error + scheme_tol;
        chk.pass = chk.estimate <= chk.bound;  // J(tau_hat, sigma') <= saddle value
        checks.push_back(chk);
    }
    return checks;
}

inline std::vector<std::size_t> checkpoint_slices(const SpaceTimeGrid& grid,
                                                  const std::vector<double>& times) {
    std::vector<std::size_t> out;
    for (double t : times) {
        std::size_t best = 0;
        double err = std::fabs(grid.time(0) - t);
        for (std::size_t k = 1; k < grid.n_slices(); ++k) {
            const double e = std::fabs(grid.time(k) - t);
            if (e < err) {
                err = e;
                best = k;
            }
        }
        if (out.empty() || best > out.back()) out.push_back(best);
    }
    return out;
}

}  // namespace dvi
