#include <catch2/catch_amalgamated.hpp>

#include <string>

#include "dvi/config.hpp"

using namespace dvi;

namespace {

json base_config() {
    return json::parse(R"({
      "schema_version": 1,
      "model": {
        "dim": 1,
        "alpha": 0.06,
        "drift": [{"family": "gbm", "rate": 0.06}],
        "diffusion": [{"family": "gbm", "vol": 0.2}],
        "density": {"mode": "user", "axes": [{"family": "power", "param": 1.0}]}
      },
      "grid": {
        "t_max": 1.0,
        "t_steps": 50,
        "axes": [{"min": 0.2, "max": 3.0, "nodes": 61}]
      },
      "problem": {
        "kind": "stopping",
        "obstacle": {"family": "put", "strike": 1.0},
        "start_points": [[1.0], [0.8]]
      }
    })");
}

std::string error_of(const json& j) {
    try {
        ProblemConfig::from_json(j);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

}  // namespace

TEST_CASE("a minimal config parses and fills every default") {
    ProblemConfig cfg = ProblemConfig::from_json(base_config());
    CHECK(cfg.kind == ProblemConfig::Kind::Stopping);
    CHECK(cfg.model.alpha == 0.06);
    CHECK(cfg.model.dim == 1);
    CHECK(cfg.obstacle.family == FieldSpec::Family::Put);
    CHECK(cfg.obstacle.strike == 1.0);
    CHECK(cfg.start_points.size() == 2);

    CHECK(cfg.penalty.eps_schedule.size() == 6);
    CHECK(cfg.penalty.inner_tol == 1e-10);
    CHECK(cfg.psor.omega == 1.9);
    CHECK(cfg.mc.n_paths == 100000);
    CHECK(cfg.mc.dt_factor == 0.25);
    CHECK(cfg.mc_dt() == Catch::Approx(0.25 / 50.0));

    SpaceTimeGrid grid = cfg.build_grid();
    CHECK(grid.n_slices() == 51);
    CHECK(grid.n_space() == 61);
    CHECK(grid.horizon() == 1.0);
}

TEST_CASE("canonical serialization round-trips byte for byte") {
    ProblemConfig cfg = ProblemConfig::from_json(base_config());
    const std::string canon = cfg.canonical();
    ProblemConfig again = ProblemConfig::from_json(json::parse(canon));
    CHECK(again.canonical() == canon);

    json game = base_config();
    game["problem"].erase("obstacle");
    game["problem"]["kind"] = "game";
    game["problem"]["lower_obstacle"] = {{"family", "put"}, {"strike", 1.0}};
    game["problem"]["upper_obstacle"] = {{"family", "put"}, {"strike", 1.0}, {"shift", 0.05}};
    game["problem"]["cost"] = {{"family", "constant"}, {"value", 0.02}};
    game["mc"] = {{"checkpoint_times", {0.25, 0.5}}, {"control_point", {1.0}}};
    ProblemConfig gcfg = ProblemConfig::from_json(game);
    CHECK(gcfg.kind == ProblemConfig::Kind::Game);
    REQUIRE(gcfg.cost.has_value());
    const std::string gcanon = gcfg.canonical();
    CHECK(ProblemConfig::from_json(json::parse(gcanon)).canonical() == gcanon);
}

TEST_CASE("unknown keys are rejected by name") {
    json j = base_config();
    j["frobnicate"] = 1;
    CHECK(error_of(j).find("frobnicate") != std::string::npos);

    j = base_config();
    j["problem"]["extra_knob"] = true;
    CHECK(error_of(j).find("problem.extra_knob") != std::string::npos);

    j = base_config();
    j["model"]["diffusion"][0]["sigma"] = 0.3;
    CHECK(error_of(j).find("sigma") != std::string::npos);
}

TEST_CASE("kind and obstacle keys must agree") {
    json j = base_config();
    j["problem"]["lower_obstacle"] = {{"family", "constant"}, {"value", 0.0}};
    CHECK_THROWS_AS(ProblemConfig::from_json(j), ConfigError);

    j = base_config();
    j["problem"]["kind"] = "game";
    // still has "obstacle", lacks lower/upper
    CHECK_THROWS_AS(ProblemConfig::from_json(j), ConfigError);

    j = base_config();
    j["problem"]["kind"] = "game";
    j["problem"].erase("obstacle");
    j["problem"]["lower_obstacle"] = {{"family", "constant"}, {"value", 0.0}};
    CHECK(error_of(j).find("upper_obstacle") != std::string::npos);
}

TEST_CASE("cross-field invariants are enforced at parse time") {
    json j = base_config();
    j["problem"]["start_points"] = {{5.0}};  // outside [0.2, 3.0]
    CHECK(error_of(j).find("start_points") != std::string::npos);

    j = base_config();
    j["penalty"] = {{"eps_schedule", {1e-3, 1e-2}}};
    CHECK_THROWS_AS(ProblemConfig::from_json(j), ConfigError);

    j = base_config();
    j["mc"] = {{"checkpoint_times", {0.5, 0.5}}};
    CHECK_THROWS_AS(ProblemConfig::from_json(j), ConfigError);

    j = base_config();
    j["mc"] = {{"checkpoint_times", {2.0}}};
    CHECK(error_of(j).find("checkpoint_times") != std::string::npos);

    j = base_config();
    j["mc"] = {{"control_point", {1.0, 2.0}}};  // dim is 1
    CHECK_THROWS_AS(ProblemConfig::from_json(j), ConfigError);

    j = base_config();
    j["grid"]["axes"][0]["nodes"] = 2;
    CHECK_THROWS_AS(ProblemConfig::from_json(j), ConfigError);

    j = base_config();
    j["schema_version"] = 2;
    CHECK(error_of(j).find("schema_version") != std::string::npos);
}

TEST_CASE("field and coefficient specs evaluate as configured") {
    json j = base_config();
    j["problem"]["obstacle"] = {{"family", "call"},
                                {"strike", 2.0},
                                {"scale", 3.0},
                                {"shift", -1.0}};
    ProblemConfig cfg = ProblemConfig::from_json(j);
    CHECK(cfg.obstacle(0.0, {2.5, 0.0}) == Catch::Approx(3.0 * 0.5 - 1.0));

    CHECK(cfg.model.drift_at(0, 0.3, 2.0) == Catch::Approx(0.12));  // gbm rate * x
    CHECK(cfg.model.vol_at(0, 0.3, 2.0) == Catch::Approx(0.4));     // gbm vol * x
}
