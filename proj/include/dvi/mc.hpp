#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "dvi/errors.hpp"
#include "dvi/fields.hpp"
#include "dvi/grid.hpp"
#include "dvi/model.hpp"
#include "dvi/parallel.hpp"
#include "dvi/rng.hpp"

namespace dvi {

struct MCConfig {
    std::size_t n_paths = 100000;
    // Simulation step; substep counts per grid interval are rounded so that
    // simulated times land exactly on grid times.
    double dt = 0.0;
    std::uint64_t seed = 0;
    bool antithetic = false;

    void validate() const {
        if (n_paths == 0) throw ConfigError("mc.n_paths: must be positive");
        if (!(dt > 0.0)) throw ConfigError("mc.dt: must be positive");
        if (antithetic && n_paths % 2 != 0) {
            throw ConfigError("mc.n_paths: antithetic sampling needs an even path count");
        }
    }
};

// Stopping rule "enter this set": membership is tested at grid times via
// the nearest grid node.  Slice-major mask, same layout as ScalarField.
struct PolicyRegion {
    std::size_t n_space = 0;
    std::vector<std::uint8_t> mask;

    PolicyRegion() = default;
    PolicyRegion(const SpaceTimeGrid& grid, std::vector<std::uint8_t> m)
        : n_space(grid.n_space()), mask(std::move(m)) {}

    bool at(std::size_t k, std::size_t node) const {
        return mask[k * n_space + node] != 0;
    }
};

struct MCEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    std::size_t n_effective = 0;
};

// One verification inequality: pass iff estimate <= bound (the caller
// encodes two-sided checks as two entries or via |estimate|).
struct McCheck {
    std::string name;
    double estimate = 0.0;
    double std_error = 0.0;
    double bound = 0.0;
    bool pass = false;
};

using SpaceTimeFn = std::function<double(double, const std::array<double, 2>&)>;

// Lazy handle on a deterministic family of Euler paths from one start
// point.  Nothing is materialized: every evaluation replays paths from the
// counter-based per-path streams, so repeated passes see identical paths
// (common random numbers) at O(1) memory.
struct PathBundle {
    const DiffusionModel* model = nullptr;
    const SpaceTimeGrid* grid = nullptr;
    MCConfig cfg;
    double t0 = 0.0;
    std::array<double, 2> x0{};
    std::size_t first_slice = 0;
};

inline PathBundle simulate_paths(const DiffusionModel& model,
                                 const SpaceTimeGrid& grid, const MCConfig& cfg,
                                 double t0, const std::array<double, 2>& x0) {
    cfg.validate();
    if (t0 < grid.time(0) - 1e-12 || t0 > grid.horizon() + 1e-12) {
        throw ConfigError("mc start time outside the time window");
    }
    for (int d = 0; d < grid.dim(); ++d) {
        if (x0[d] < grid.axis(d).front() || x0[d] > grid.axis(d).back()) {
            throw ConfigError("mc start point outside the spatial box");
        }
    }
    PathBundle b;
    b.model = &model;
    b.grid = &grid;
    b.cfg = cfg;
    b.t0 = t0;
    b.x0 = x0;
    std::size_t k = 0;
    while (grid.time(k) < t0 - 1e-12) ++k;
    b.first_slice = k;
    return b;
}

namespace detail {

// States at grid times plus the absorption record of one replayed path.
struct PathTrace {
    std::vector<std::array<double, 2>> state;  // indexed by slice, valid from first_slice
    std::vector<double> cost;                  // discounted running cost at grid times
    bool exited = false;
    double exit_time = 0.0;
    std::array<double, 2> exit_state{};
    double cost_at_exit = 0.0;
};

// Euler-Maruyama replay of path `index`.  Antithetic pairs (2p, 2p+1)
// share stream p with flipped increments.  The cost integral (discounted to
// t0) is accumulated by the trapezoid rule on substeps and stops at
// absorption, matching the killed-process resolvent convention.
inline void replay_path(const PathBundle& b, std::size_t index, const SpaceTimeFn* cost,
                        PathTrace& tr) {
    const SpaceTimeGrid& grid = *b.grid;
    const DiffusionModel& model = *b.model;
    const int dim = grid.dim();
    const std::size_t M = grid.n_slices() - 1;
    const std::uint64_t stream = b.cfg.antithetic ? index / 2 : index;
    const double flip = (b.cfg.antithetic && index % 2 == 1) ? -1.0 : 1.0;
    PathRng rng(b.cfg.seed, stream);

    tr.state.assign(grid.n_slices(), {0.0, 0.0});
    tr.cost.assign(cost ? grid.n_slices() : 0, 0.0);
    tr.exited = false;
    tr.cost_at_exit = 0.0;

    std::array<double, 2> x = b.x0;
    double t = b.t0;
    double c_acc = 0.0;
    double f_prev = cost ? (*cost)(t, x) : 0.0;

    const double alpha = model.alpha;
    auto record_slice = [&](std::size_t k) {
        tr.state[k] = x;
        if (cost) tr.cost[k] = c_acc;
    };
    if (grid.time(b.first_slice) <= b.t0 + 1e-12) record_slice(b.first_slice);

    std::size_t k_begin = b.first_slice;
    if (grid.time(b.first_slice) <= b.t0 + 1e-12) k_begin = b.first_slice + 1;

    for (std::size_t k = k_begin; k <= M; ++k) {
        if (tr.exited) {
            tr.state[k] = tr.exit_state;
            if (cost) tr.cost[k] = tr.cost_at_exit;
            continue;
        }
        const double t_target = grid.time(k);
        const double span = t_target - t;
        const std::size_t n_sub = std::max<std::size_t>(
            1, static_cast<std::size_t>(std::llround(std::ceil(span / b.cfg.dt - 1e-9))));
        const double h = span / static_cast<double>(n_sub);
        const double sqrt_h = std::sqrt(h);
        for (std::size_t j = 0; j < n_sub && !tr.exited; ++j) {
            std::array<double, 2> xn = x;
            for (int d = 0; d < dim; ++d) {
                const double xi = flip * rng.next_normal();
                xn[d] = x[d] + model.drift_at(d, t, x[d]) * h +
                        model.vol_at(d, t, x[d]) * sqrt_h * xi;
            }
            const double t_next = (j + 1 == n_sub) ? t_target : t + h;
            bool out = false;
            for (int d = 0; d < dim; ++d) {
                const double lo = grid.axis(d).front();
                const double hi = grid.axis(d).back();
                if (xn[d] <= lo || xn[d] >= hi) {
                    out = true;
                    xn[d] = std::min(std::max(xn[d], lo), hi);
                }
            }
            if (cost) {
                const double f_next = (*cost)(t_next, xn);
                c_acc += 0.5 * h *
                         (std::exp(-alpha * (t - b.t0)) * f_prev +
                          std::exp(-alpha * (t_next - b.t0)) * f_next);
                f_prev = f_next;
            }
            x = xn;
            t = t_next;
            if (out) {
                tr.exited = true;
                tr.exit_time = t;
                tr.exit_state = x;
                tr.cost_at_exit = c_acc;
            }
        }
        t = t_target;
        if (tr.exited) {
            tr.state[k] = tr.exit_state;
            if (cost) tr.cost[k] = tr.cost_at_exit;
        } else {
            record_slice(k);
        }
    }
}

// Serial reduction in path order: results are identical for every worker
// count.  With antithetic sampling the sample unit is the pair mean.
inline MCEstimate reduce_slots(const std::vector<double>& slot, bool antithetic) {
    MCEstimate e;
    const std::size_t n_eff = antithetic ? slot.size() / 2 : slot.size();
    if (n_eff == 0) return e;
    double sum = 0.0;
    for (std::size_t j = 0; j < n_eff; ++j) {
        const double v = antithetic ? 0.5 * (slot[2 * j] + slot[2 * j + 1]) : slot[j];
        sum += v;
    }
    const double mean = sum / static_cast<double>(n_eff);
    double ss = 0.0;
    for (std::size_t j = 0; j < n_eff; ++j) {
        const double v = antithetic ? 0.5 * (slot[2 * j] + slot[2 * j + 1]) : slot[j];
        ss += (v - mean) * (v - mean);
    }
    e.mean = mean;
    e.n_effective = n_eff;
    if (n_eff > 1) {
        e.std_error = std::sqrt(ss / static_cast<double>(n_eff - 1) /
                                static_cast<double>(n_eff));
    }
    return e;
}

}  // namespace detail

// Bilinear interpolation of a slice of a grid field.
inline double interp_space(const SpaceTimeGrid& grid, const ScalarField& v,
                           std::size_t k, const std::array<double, 2>& p) {
    auto bracket = [&](int d, double z, std::size_t& i0, double& w) {
        const auto& a = grid.axis(d);
        if (z <= a.front()) {
            i0 = 0;
            w = 0.0;
            return;
        }
        if (z >= a.back()) {
            i0 = a.size() - 2;
            w = 1.0;
            return;
        }
        std::size_t lo = 0, hi = a.size() - 1;
        while (hi - lo > 1) {
            const std::size_t mid = (lo + hi) / 2;
            (a[mid] <= z ? lo : hi) = mid;
        }
        i0 = lo;
        w = (z - a[lo]) / (a[lo + 1] - a[lo]);
    };
    std::size_t ix;
    double wx;
    bracket(0, p[0], ix, wx);
    if (grid.dim() == 1) {
        return (1.0 - wx) * v(k, ix) + wx * v(k, ix + 1);
    }
    std::size_t iy;
    double wy;
    bracket(1, p[1], iy, wy);
    const double v00 = v(k, grid.flatten(ix, iy));
    const double v10 = v(k, grid.flatten(ix + 1, iy));
    const double v01 = v(k, grid.flatten(ix, iy + 1));
    const double v11 = v(k, grid.flatten(ix + 1, iy + 1));
    return (1.0 - wy) * ((1.0 - wx) * v00 + wx * v10) +
           wy * ((1.0 - wx) * v01 + wx * v11);
}

// Discounted payoff of several stopping policies evaluated on the same
// paths in one pass.  Per policy: stop at the first grid time whose nearest
// node lies in the region; absorption at the spatial box pays the payoff at
// the exit point, expiry pays it at the horizon.  diff_vs_first[j] is the
// paired per-path difference policy j minus policy 0.
struct MultiPolicyResult {
    std::vector<MCEstimate> value;
    std::vector<MCEstimate> diff_vs_first;
};

inline MultiPolicyResult evaluate_stopping_multi(
    const PathBundle& b, const std::vector<const PolicyRegion*>& policies,
    const SpaceTimeFn& payoff, const SpaceTimeFn* cost, double alpha) {
    const SpaceTimeGrid& grid = *b.grid;
    const std::size_t M = grid.n_slices() - 1;
    const std::size_t np = policies.size();
    if (np == 0) throw ConfigError("no stopping policies supplied");
    std::vector<std::vector<double>> slots(np,
                                           std::vector<double>(b.cfg.n_paths, 0.0));

    parallel_for(b.cfg.n_paths, [&](std::size_t p) {
        thread_local detail::PathTrace tr;
        detail::replay_path(b, p, cost, tr);
        for (std::size_t q = 0; q < np; ++q) {
            const PolicyRegion& region = *policies[q];
            double pay = 0.0;
            bool settled = false;
            for (std::size_t k = b.first_slice; k <= M && !settled; ++k) {
                const double tk = grid.time(k);
                if (tr.exited && tr.exit_time <= tk) {
                    pay = (cost ? tr.cost_at_exit : 0.0) +
                          std::exp(-alpha * (tr.exit_time - b.t0)) *
                              payoff(tr.exit_time, tr.exit_state);
                    settled = true;
                } else if (region.at(k, grid.nearest_node(tr.state[k])) || k == M) {
                    pay = (cost ? tr.cost[k] : 0.0) +
                          std::exp(-alpha * (tk - b.t0)) * payoff(tk, tr.state[k]);
                    settled = true;
                }
            }
            slots[q][p] = pay;
        }
    });

    MultiPolicyResult out;
    out.value.reserve(np);
    for (std::size_t q = 0; q < np; ++q) {
        out.value.push_back(detail::reduce_slots(slots[q], b.cfg.antithetic));
    }
    std::vector<double> diff(b.cfg.n_paths);
    out.diff_vs_first.resize(np);
    for (std::size_t q = 1; q < np; ++q) {
        for (std::size_t p = 0; p < b.cfg.n_paths; ++p) {
            diff[p] = slots[q][p] - slots[0][p];
        }
        out.diff_vs_first[q] = detail::reduce_slots(diff, b.cfg.antithetic);
    }
    return out;
}

inline MCEstimate evaluate_stopping_value(const PathBundle& b,
                                          const PolicyRegion& region,
                                          const SpaceTimeFn& payoff, double alpha,
                                          const SpaceTimeFn* cost = nullptr) {
    return evaluate_stopping_multi(b, {&region}, payoff, cost, alpha).value[0];
}

// Game payoff of (tau, sigma) policy pairs under the convention that ties
// pay the upper obstacle: the first grid time in either region settles the
// game, h if tau fired (ties included), g if only sigma did.  Absorption
// pays median(g, 0, h) at the exit point; so does expiry at the horizon.
inline MultiPolicyResult evaluate_game_multi(
    const PathBundle& b,
    const std::vector<std::pair<const PolicyRegion*, const PolicyRegion*>>& pairs,
    const SpaceTimeFn& g, const SpaceTimeFn& h, const SpaceTimeFn* cost,
    double alpha) {
    const SpaceTimeGrid& grid = *b.grid;
    const std::size_t M = grid.n_slices() - 1;
    const std::size_t np = pairs.size();
    if (np == 0) throw ConfigError("no game policy pairs supplied");

    // Distinct regions get their hitting slice computed once per path.
    std::vector<const PolicyRegion*> regions;
    auto region_id = [&](const PolicyRegion* r) {
        for (std::size_t j = 0; j < regions.size(); ++j) {
            if (regions[j] == r) return j;
        }
        regions.push_back(r);
        return regions.size() - 1;
    };
    std::vector<std::pair<std::size_t, std::size_t>> pair_ids;
    pair_ids.reserve(np);
    for (const auto& pr : pairs) {
        pair_ids.emplace_back(region_id(pr.first), region_id(pr.second));
    }

    auto chi = [&](double t, const std::array<double, 2>& x) {
        return std::min(std::max(g(t, x), 0.0), h(t, x));
    };

    std::vector<std::vector<double>> slots(np,
                                           std::vector<double>(b.cfg.n_paths, 0.0));
    const std::size_t kNever = std::numeric_limits<std::size_t>::max();

    parallel_for(b.cfg.n_paths, [&](std::size_t p) {
        thread_local detail::PathTrace tr;
        detail::replay_path(b, p, cost, tr);

        // Grid slice at or after which the path is absorbed, horizon slice
        // counts as expiry.
        std::size_t exit_slice = kNever;
        if (tr.exited) {
            exit_slice = b.first_slice;
            while (grid.time(exit_slice) < tr.exit_time) ++exit_slice;
        }
        thread_local std::vector<std::size_t> hit;
        hit.assign(regions.size(), kNever);
        const std::size_t live_end = std::min(exit_slice, M + 1);
        for (std::size_t j = 0; j < regions.size(); ++j) {
            for (std::size_t k = b.first_slice; k < live_end; ++k) {
                if (tr.exited && tr.exit_time <= grid.time(k)) break;
                if (regions[j]->at(k, grid.nearest_node(tr.state[k]))) {
                    hit[j] = k;
                    break;
                }
            }
        }

        for (std::size_t q = 0; q < np; ++q) {
            const std::size_t tau_k = hit[pair_ids[q].first];
            const std::size_t sigma_k = hit[pair_ids[q].second];
            const std::size_t settle = std::min(tau_k, sigma_k);
            double pay;
            if (tr.exited && (settle == kNever || tr.exit_time <= grid.time(settle))) {
                pay = (cost ? tr.cost_at_exit : 0.0) +
                      std::exp(-alpha * (tr.exit_time - b.t0)) *
                          chi(tr.exit_time, tr.exit_state);
            } else if (settle == kNever) {
                pay = (cost ? tr.cost[M] : 0.0) +
                      std::exp(-alpha * (grid.horizon() - b.t0)) *
                          chi(grid.horizon(), tr.state[M]);
            } else {
                const double ts = grid.time(settle);
                const auto& xs = tr.state[settle];
                const double obstacle = (tau_k <= sigma_k) ? h(ts, xs) : g(ts, xs);
                pay = (cost ? tr.cost[settle] : 0.0) +
                      std::exp(-alpha * (ts - b.t0)) * obstacle;
            }
            slots[q][p] = pay;
        }
    });

    MultiPolicyResult out;
    out.value.reserve(np);
    for (std::size_t q = 0; q < np; ++q) {
        out.value.push_back(detail::reduce_slots(slots[q], b.cfg.antithetic));
    }
    std::vector<double> diff(b.cfg.n_paths);
    out.diff_vs_first.resize(np);
    for (std::size_t q = 1; q < np; ++q) {
        for (std::size_t p = 0; p < b.cfg.n_paths; ++p) {
            diff[p] = slots[q][p] - slots[0][p];
        }
        out.diff_vs_first[q] = detail::reduce_slots(diff, b.cfg.antithetic);
    }
    return out;
}

inline MCEstimate evaluate_game_payoff(const PathBundle& b, const PolicyRegion& tau,
                                       const PolicyRegion& sigma, const SpaceTimeFn& g,
                                       const SpaceTimeFn& h, double alpha,
                                       const SpaceTimeFn* cost = nullptr) {
    return evaluate_game_multi(b, {{&tau, &sigma}}, g, h, cost, alpha).value[0];
}

// Policy perturbations used by the verification harness.
inline PolicyRegion dilate_region(const SpaceTimeGrid& grid, const PolicyRegion& r) {
    PolicyRegion out(grid, r.mask);
    for (std::size_t k = 0; k < grid.n_slices(); ++k) {
        for (std::size_t i = 0; i < grid.n_space(); ++i) {
            if (r.at(k, i)) continue;
            const auto [ix, iy] = grid.unflatten(i);
            bool near = false;
            if (ix > 0) near = near || r.at(k, grid.flatten(ix - 1, iy));
            if (ix + 1 < grid.axis_size(0)) near = near || r.at(k, grid.flatten(ix + 1, iy));
            if (grid.dim() == 2) {
                if (iy > 0) near = near || r.at(k, grid.flatten(ix, iy - 1));
                if (iy + 1 < grid.axis_size(1)) near = near || r.at(k, grid.flatten(ix, iy + 1));
            }
            if (near) out.mask[k * grid.n_space() + i] = 1;
        }
    }
    return out;
}

inline PolicyRegion erode_region(const SpaceTimeGrid& grid, const PolicyRegion& r) {
    PolicyRegion out(grid, r.mask);
    for (std::size_t k = 0; k < grid.n_slices(); ++k) {
        for (std::size_t i = 0; i < grid.n_space(); ++i) {
            if (!r.at(k, i)) continue;
            const auto [ix, iy] = grid.unflatten(i);
            bool all = true;
            if (ix > 0) all = all && r.at(k, grid.flatten(ix - 1, iy));
            if (ix + 1 < grid.axis_size(0)) all = all && r.at(k, grid.flatten(ix + 1, iy));
            if (grid.dim() == 2) {
                if (iy > 0) all = all && r.at(k, grid.flatten(ix, iy - 1));
                if (iy + 1 < grid.axis_size(1)) all = all && r.at(k, grid.flatten(ix, iy + 1));
            }
            if (!all) out.mask[k * grid.n_space() + i] = 0;
        }
    }
    return out;
}

inline PolicyRegion fixed_time_region(const SpaceTimeGrid& grid, std::size_t slice) {
    PolicyRegion out;
    out.n_space = grid.n_space();
    out.mask.assign(grid.n_slices() * grid.n_space(), 0);
    for (std::size_t i = 0; i < grid.n_space(); ++i) {
        out.mask[slice * grid.n_space() + i] = 1;
    }
    return out;
}

inline PolicyRegion empty_region(const SpaceTimeGrid& grid) {
    PolicyRegion out;
    out.n_space = grid.n_space();
    out.mask.assign(grid.n_slices() * grid.n_space(), 0);
    return out;
}

inline PolicyRegion full_slice_region(const SpaceTimeGrid& grid, std::size_t slice) {
    return fixed_time_region(grid, slice);
}

// Supermartingale checkpoints: along paths stopped at the checkpoint slice,
// at absorption (value given by boundary_fn), or optionally at first entry
// into stop_mask (martingale variant), the discounted field value plus the
// discounted running cost must not rise in expectation.  Checks compare the
// start value against the first checkpoint and then consecutive checkpoints
// pairwise, each as a paired per-path difference (estimate <= 3 stderr +
// scheme_tol; two_sided turns the bound into |estimate| <= bound for the
// martingale equality).
inline std::vector<McCheck> check_supermartingale(
    const PathBundle& b, const ScalarField& v, const SpaceTimeFn& boundary_fn,
    double alpha, const std::vector<std::size_t>& checkpoint_slices,
    double scheme_tol, const SpaceTimeFn* cost = nullptr,
    const PolicyRegion* stop_mask = nullptr, bool two_sided = false) {
    const SpaceTimeGrid& grid = *b.grid;
    if (checkpoint_slices.empty()) return {};
    const double reference = interp_space(grid, v, b.first_slice, b.x0);
    std::vector<std::vector<double>> slots(checkpoint_slices.size(),
                                           std::vector<double>(b.cfg.n_paths, 0.0));

    parallel_for(b.cfg.n_paths, [&](std::size_t p) {
        thread_local detail::PathTrace tr;
        detail::replay_path(b, p, cost, tr);
        for (std::size_t c = 0; c < checkpoint_slices.size(); ++c) {
            const std::size_t kc = checkpoint_slices[c];
            double val = 0.0;
            bool settled = false;
            for (std::size_t k = b.first_slice; k <= kc && !settled; ++k) {
                const double tk = grid.time(k);
                if (tr.exited && tr.exit_time <= tk) {
                    val = (cost ? tr.cost_at_exit : 0.0) +
                          std::exp(-alpha * (tr.exit_time - b.t0)) *
                              boundary_fn(tr.exit_time, tr.exit_state);
                    settled = true;
                } else if ((stop_mask &&
                            stop_mask->at(k, grid.nearest_node(tr.state[k]))) ||
                           k == kc) {
                    val = (cost ? tr.cost[k] : 0.0) +
                          std::exp(-alpha * (tk - b.t0)) *
                              interp_space(grid, v, k, tr.state[k]);
                    settled = true;
                }
            }
            slots[c][p] = val;
        }
    });

    const char* prefix = stop_mask ? "martingale" : "supermartingale";
    auto time_label = [&](std::size_t c) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%g", grid.time(checkpoint_slices[c]));
        return std::string(buf);
    };

    std::vector<McCheck> checks;
    std::vector<double> diff(b.cfg.n_paths);
    for (std::size_t c = 0; c < checkpoint_slices.size(); ++c) {
        for (std::size_t p = 0; p < b.cfg.n_paths; ++p) {
            diff[p] = slots[c][p] - (c == 0 ? reference : slots[c - 1][p]);
        }
        const MCEstimate est = detail::reduce_slots(diff, b.cfg.antithetic);
        McCheck chk;
        chk.name = std::string(prefix) + "_" +
                   (c == 0 ? "start" : ("t" + time_label(c - 1))) + "_to_t" +
                   time_label(c);
        chk.estimate = est.mean;
        chk.std_error = est.std_error;
        chk.bound = 3.0 * est.std_error + scheme_tol;
        chk.pass = two_sided ? std::fabs(chk.estimate) <= chk.bound
                             : chk.estimate <= chk.bound;
        checks.push_back(chk);
    }
    return checks;
}

inline double scheme_tolerance(const SpaceTimeGrid& grid, double c) {
    return c * (grid.max_dx() + grid.max_dt());
}

}  // namespace dvi
