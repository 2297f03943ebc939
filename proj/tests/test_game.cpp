#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "dvi/dynkin.hpp"

using namespace dvi;

namespace {

DiffusionModel gbm_model() {
    DiffusionModel m;
    m.dim = 1;
    m.alpha = 0.06;
    m.drift[0] = AxisCoef{AxisCoef::Family::Gbm, 0.06, 0.0, 0.0};
    m.vol[0] = AxisCoef{AxisCoef::Family::Gbm, 0.2, 0.0, 0.0};
    return m;
}

struct GameSetup {
    DiffusionModel model = gbm_model();
    SymmetrizingDensity density;
    // 29 nodes put x = 1.0 on the grid: the put's time value peaks there
    // above the 0.05 gap, so the cap has somewhere to bind.
    SpaceTimeGrid grid{linspace(0.0, 1.0, 21), {linspace(0.2, 3.0, 29)}};
    OperatorTable ops;
    ScalarField g, h;

    GameSetup()
        : density([this] {
              DensityRequest req;
              req.mode = SymmetrizingDensity::Mode::User;
              req.axes[0].family = SymmetrizingDensity::Axis::Family::Power;
              req.axes[0].param = 1.0;
              return build_density(model, req);
          }()),
          ops(model, density, grid),
          g(FieldSpec::put(1.0).on(grid)),
          h(grid, 0.0) {
        h = g;
        for (double& v : h.data()) v += 0.05;
    }

    GameProblem problem() const {
        GameProblem p;
        p.lower = g;
        p.upper = h;
        p.alpha = model.alpha;
        return p;
    }

    GameConfig config() const {
        GameConfig c;
        c.penalty.eps_schedule = {1e-2, 1e-4, 1e-6, 1e-8, 1e-9};
        return c;
    }
};

}  // namespace

TEST_CASE("symmetric obstacles give the zero game value in one round") {
    GameSetup s;
    GameProblem p;
    p.lower = ScalarField(s.grid, -0.3);
    p.upper = ScalarField(s.grid, 0.3);
    p.alpha = s.model.alpha;

    GameSolution sol = iterate_game(s.ops, p, s.config());
    CHECK(sol.outer_iters == 1);
    CHECK(sol.value.max_norm() <= 1e-12);
    CHECK(sol.phi_bar.max_norm() <= 1e-12);
    // Neither stop region can be active away from the obstacles.
    for (auto b : sol.region_lower) CHECK(b == 0);
    for (auto b : sol.region_upper) CHECK(b == 0);
}

TEST_CASE("game value stays between the obstacles and the iterates increase") {
    GameSetup s;
    GameSolution sol = iterate_game(s.ops, s.problem(), s.config());

    CHECK(min_gap(sol.value, s.g) >= -1e-9);
    CHECK(min_gap(s.h, sol.value) >= -1e-9);
    CHECK(sol.monotonicity_defect >= -1e-9);
    CHECK(sol.outer_delta.back() < 1e-7);

    // The cap binds where the unconstrained stopping value would exceed h:
    // around the money the value sits on the upper obstacle.
    bool upper_hit = false;
    for (auto b : sol.region_upper) upper_hit |= (b != 0);
    CHECK(upper_hit);
    // Deep in the money the lower obstacle binds.
    CHECK(sol.region_lower[s.grid.nearest_node({0.25, 0.0})] != 0);
}

TEST_CASE("alternating envelopes match the clamped relaxation oracle") {
    GameSetup s;
    GameSolution sol = iterate_game(s.ops, s.problem(), s.config());

    PsorConfig pcfg;
    ScalarField oracle = double_obstacle_oracle(s.ops, s.problem(), pcfg);
    CHECK(max_abs_diff(sol.value, oracle) <= 1e-6);
}

TEST_CASE("game with holding cost agrees with the direct costed oracle") {
    GameSetup s;
    GameProblem p = s.problem();
    p.cost = ScalarField(s.grid, 0.02);

    GameConfig cfg = s.config();
    GameSolution sol = solve_game_with_cost(s.ops, p, cfg);
    CHECK_THROWS_AS(iterate_game(s.ops, p, cfg), ConfigError);

    PsorConfig pcfg;
    ScalarField oracle = double_obstacle_oracle(s.ops, p, pcfg);
    CHECK(max_abs_diff(sol.value, oracle) <= 1e-6);
    CHECK(min_gap(sol.value, s.g) >= -1e-9);
    CHECK(min_gap(s.h, sol.value) >= -1e-9);
}

TEST_CASE("obstacle order and witness bounds are enforced") {
    GameSetup s;
    GameProblem bad;
    bad.lower = s.h;  // lower above upper
    bad.upper = s.g;
    bad.alpha = s.model.alpha;
    CHECK_THROWS_AS(iterate_game(s.ops, bad, s.config()), ConfigError);

    GameProblem p = s.problem();
    ScalarField mid = s.g;
    for (std::size_t j = 0; j < mid.data().size(); ++j) {
        mid.data()[j] = 0.5 * (s.g.data()[j] + s.h.data()[j]);
    }
    p.witness = std::make_pair(mid, ScalarField(s.grid, 0.0));
    CHECK_NOTHROW(iterate_game(s.ops, p, s.config()));

    ScalarField above = s.h;
    for (double& v : above.data()) v += 1.0;
    p.witness = std::make_pair(above, ScalarField(s.grid, 0.0));
    CHECK_THROWS_AS(iterate_game(s.ops, p, s.config()), ConfigError);
}

TEST_CASE("boundary data is the clamped median of the obstacles") {
    GameSetup s;
    ScalarField chi = game_boundary_data(s.g, s.h);
    // Put payoffs are non-negative, so chi collapses to the lower obstacle.
    CHECK(max_abs_diff(chi, s.g) == 0.0);

    ScalarField lo(s.grid, -0.2), hi(s.grid, 0.4);
    ScalarField mid = game_boundary_data(lo, hi);
    CHECK(mid.max_norm() == 0.0);  // 0 lies between the obstacles
}
