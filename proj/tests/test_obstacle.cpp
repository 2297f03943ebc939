#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "dvi/lcp.hpp"
#include "dvi/obstacle.hpp"

using namespace dvi;

namespace {

DiffusionModel gbm_model(double rate = 0.06, double vol = 0.2) {
    DiffusionModel m;
    m.dim = 1;
    m.alpha = rate;
    m.drift[0] = AxisCoef{AxisCoef::Family::Gbm, rate, 0.0, 0.0};
    m.vol[0] = AxisCoef{AxisCoef::Family::Gbm, vol, 0.0, 0.0};
    return m;
}

SymmetrizingDensity gbm_density(const DiffusionModel& m) {
    DensityRequest req;
    req.mode = SymmetrizingDensity::Mode::User;
    req.axes[0].family = SymmetrizingDensity::Axis::Family::Power;
    req.axes[0].param = 1.0;
    return build_density(m, req);
}

struct PutSetup {
    DiffusionModel model = gbm_model();
    SymmetrizingDensity density = gbm_density(model);
    SpaceTimeGrid grid{linspace(0.0, 1.0, 21), {linspace(0.2, 3.0, 41)}};
    OperatorTable ops{model, density, grid};
    ScalarField g{FieldSpec::put(1.0).on(grid)};
};

}  // namespace

TEST_CASE("constant obstacle with discounting settles just below the obstacle") {
    DiffusionModel m;
    m.dim = 1;
    m.alpha = 0.5;
    m.vol[0] = AxisCoef{AxisCoef::Family::Constant, std::sqrt(2.0), 0.0, 0.0};
    SymmetrizingDensity rho(SymmetrizingDensity::Mode::Unit, 1, {});
    SpaceTimeGrid grid(linspace(0.0, 1.0, 11), {linspace(0.0, 1.0, 21)});
    OperatorTable ops(m, rho, grid);
    ScalarField g(grid, 1.0);

    PenaltyConfig cfg;
    VISolution sol = solve_obstacle(ops, g, m.alpha, cfg);

    const double eps_final = sol.eps_used.back();
    CHECK(min_gap(sol.value, g) >= -m.alpha * eps_final * 1.01);
    // Never above: the exact solution IS the obstacle here.
    CHECK(min_gap(g, sol.value) >= -1e-13);
    CHECK(sol.penalty_residual <= m.alpha * eps_final * 1.01);
    CHECK(sol.supersolution_defect >= -1e-9);
    // Undershoot is far below the classification threshold.
    for (std::size_t i = 1; i + 1 < grid.n_space(); ++i) {
        CHECK(sol.in_contact(0, i));
    }
}

TEST_CASE("eps-continuation is nondecreasing and the put solution is certified") {
    PutSetup s;
    PenaltyConfig cfg;
    cfg.eps_schedule = {1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8, 1e-9, 1e-10};
    VISolution sol = solve_obstacle(s.ops, s.g, s.model.alpha, cfg);

    REQUIRE(sol.continuation_delta.size() >= 2);
    for (double gap : sol.continuation_min_gap) CHECK(gap >= -1e-9);
    CHECK(sol.continuation_delta.back() < 1e-7);
    CHECK(min_gap(sol.value, s.g) >= -1e-9);

    const double worst = vi_residual_check(s.ops, sol, s.g, s.model.alpha, 20, 7);
    CHECK(worst <= 1e-8);

    // Deep in the money the put is exercised immediately.  At 1.5 the value
    // is small but still orders of magnitude above the contact tolerance, so
    // the node must classify as continuation.  (Far out, near 2.5, the value
    // itself drops below the tolerance and the label is legitimately moot.)
    CHECK(sol.in_contact(0, s.grid.nearest_node({0.3, 0.0})));
    CHECK_FALSE(sol.in_contact(0, s.grid.nearest_node({1.5, 0.0})));
    // Terminal slice sits on the obstacle by construction.
    CHECK(sol.in_contact(s.grid.n_steps(), s.grid.nearest_node({1.5, 0.0})));
}

TEST_CASE("raising the obstacle raises the value by at most the shift") {
    PutSetup s;
    PenaltyConfig cfg;
    VISolution lo = solve_obstacle(s.ops, s.g, s.model.alpha, cfg);

    ScalarField g2 = s.g;
    for (double& v : g2.data()) v += 0.1;
    VISolution hi = solve_obstacle(s.ops, g2, s.model.alpha, cfg);

    CHECK(min_gap(hi.value, lo.value) >= -1e-9);
    for (std::size_t j = 0; j < lo.value.data().size(); ++j) {
        CHECK(hi.value.data()[j] - lo.value.data()[j] <= 0.1 + 1e-9);
    }
}

TEST_CASE("penalized solve matches the projected-relaxation oracle") {
    PutSetup s;
    PenaltyConfig cfg;
    cfg.eps_schedule = {1e-2, 1e-4, 1e-6, 1e-8};
    VISolution sol = solve_obstacle(s.ops, s.g, s.model.alpha, cfg);

    PsorConfig pcfg;
    ScalarField psor = psor_obstacle_march(s.ops, s.g, s.model.alpha, pcfg);
    CHECK(max_abs_diff(sol.value, psor) <= 1e-6);

    const double lcp = lcp_residual(s.ops, psor, s.g, nullptr, s.model.alpha, 1e-9);
    CHECK(lcp <= 1e-6);
}

TEST_CASE("holding-cost reduction agrees with the direct costed march") {
    PutSetup s;
    ScalarField f(s.grid, 0.05);
    PenaltyConfig cfg;

    VISolution direct = solve_obstacle(s.ops, s.g, s.model.alpha, cfg, &f);
    VISolution reduced = solve_obstacle_with_cost(s.ops, s.g, f, s.model.alpha, cfg);
    CHECK(max_abs_diff(direct.value, reduced.value) <= 1e-9);

    const double worst = vi_residual_check(s.ops, reduced, s.g, s.model.alpha, 10, 3, &f);
    CHECK(worst <= 1e-6);
}

TEST_CASE("schedule control: full schedule runs every eps, loose tol stops early") {
    PutSetup s;
    PenaltyConfig cfg;
    cfg.eps_schedule = {1e-2, 1e-3, 1e-4};
    cfg.full_schedule = true;
    VISolution full = solve_obstacle(s.ops, s.g, s.model.alpha, cfg);
    CHECK(full.eps_used.size() == 3);
    CHECK(full.eps_used == cfg.eps_schedule);

    PenaltyConfig loose;
    loose.eps_schedule = {1e-2, 1e-3, 1e-4, 1e-5};
    loose.inner_tol = 1e30;  // first delta already beats it
    VISolution early = solve_obstacle(s.ops, s.g, s.model.alpha, loose);
    CHECK(early.eps_used.size() == 2);
}

TEST_CASE("an active-set budget of one cannot certify and reports the slice") {
    PutSetup s;
    PenaltyConfig cfg;
    cfg.max_inner_iters = 1;
    try {
        solve_obstacle(s.ops, s.g, s.model.alpha, cfg);
        FAIL("expected PenaltyDivergence");
    } catch (const PenaltyDivergence& e) {
        CHECK(e.slice_index == s.grid.n_steps() - 1);
    }
}

TEST_CASE("config validation rejects malformed schedules") {
    PenaltyConfig cfg;
    cfg.eps_schedule = {1e-2, 1e-2};
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg.eps_schedule = {};
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg.eps_schedule = {1e-2, -1e-3};
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg.eps_schedule = {1e-2};
    cfg.inner_tol = 0.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}
