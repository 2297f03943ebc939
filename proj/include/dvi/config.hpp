#pragma once

#include <array>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "dvi/dynkin.hpp"
#include "dvi/errors.hpp"
#include "dvi/fields.hpp"
#include "dvi/grid.hpp"
#include "dvi/lcp.hpp"
#include "dvi/mc.hpp"
#include "dvi/model.hpp"
#include "dvi/obstacle.hpp"

namespace dvi {

using json = nlohmann::json;

namespace cfgdetail {

inline void require_object(const json& j, const std::string& ctx) {
    if (!j.is_object()) throw ConfigError(ctx + ": expected an object");
}

inline void check_keys(const json& j, const std::string& ctx,
                       std::initializer_list<const char*> allowed) {
    require_object(j, ctx);
    for (const auto& item : j.items()) {
        bool ok = false;
        for (const char* a : allowed) {
            if (item.key() == a) {
                ok = true;
                break;
            }
        }
        if (!ok) throw ConfigError(ctx + "." + item.key() + ": unknown key");
    }
}

inline double num(const json& j, const std::string& ctx, const char* key,
                  std::optional<double> def = std::nullopt) {
    if (!j.contains(key)) {
        if (def) return *def;
        throw ConfigError(ctx + "." + key + ": missing");
    }
    if (!j.at(key).is_number()) throw ConfigError(ctx + "." + key + ": expected a number");
    return j.at(key).get<double>();
}

inline std::size_t count(const json& j, const std::string& ctx, const char* key,
                         std::optional<std::size_t> def = std::nullopt) {
    if (!j.contains(key)) {
        if (def) return *def;
        throw ConfigError(ctx + "." + key + ": missing");
    }
    if (!j.at(key).is_number_unsigned() && !j.at(key).is_number_integer()) {
        throw ConfigError(ctx + "." + key + ": expected a non-negative integer");
    }
    const auto v = j.at(key).get<std::int64_t>();
    if (v < 0) throw ConfigError(ctx + "." + key + ": expected a non-negative integer");
    return static_cast<std::size_t>(v);
}

inline std::string str(const json& j, const std::string& ctx, const char* key,
                       std::optional<std::string> def = std::nullopt) {
    if (!j.contains(key)) {
        if (def) return *def;
        throw ConfigError(ctx + "." + key + ": missing");
    }
    if (!j.at(key).is_string()) throw ConfigError(ctx + "." + key + ": expected a string");
    return j.at(key).get<std::string>();
}

inline bool flag(const json& j, const std::string& ctx, const char* key, bool def) {
    if (!j.contains(key)) return def;
    if (!j.at(key).is_boolean()) throw ConfigError(ctx + "." + key + ": expected a boolean");
    return j.at(key).get<bool>();
}

}  // namespace cfgdetail

// --- coefficient specs -----------------------------------------------------

inline AxisCoef parse_drift(const json& j, const std::string& ctx) {
    using cfgdetail::check_keys;
    using cfgdetail::num;
    using cfgdetail::str;
    AxisCoef c;
    const std::string fam = str(j, ctx, "family");
    if (fam == "constant") {
        check_keys(j, ctx, {"family", "value", "time_scale"});
        c.family = AxisCoef::Family::Constant;
        c.p0 = num(j, ctx, "value");
    } else if (fam == "affine") {
        check_keys(j, ctx, {"family", "intercept", "slope", "time_scale"});
        c.family = AxisCoef::Family::Affine;
        c.p0 = num(j, ctx, "intercept");
        c.p1 = num(j, ctx, "slope");
    } else if (fam == "gbm") {
        check_keys(j, ctx, {"family", "rate", "time_scale"});
        c.family = AxisCoef::Family::Gbm;
        c.p0 = num(j, ctx, "rate");
    } else {
        throw ConfigError(ctx + ".family: unknown drift family '" + fam + "'");
    }
    c.time_scale = num(j, ctx, "time_scale", 0.0);
    return c;
}

inline AxisCoef parse_diffusion(const json& j, const std::string& ctx) {
    using cfgdetail::check_keys;
    using cfgdetail::num;
    using cfgdetail::str;
    AxisCoef c;
    const std::string fam = str(j, ctx, "family");
    if (fam == "constant") {
        check_keys(j, ctx, {"family", "value", "time_scale"});
        c.family = AxisCoef::Family::Constant;
        c.p0 = num(j, ctx, "value");
    } else if (fam == "affine") {
        check_keys(j, ctx, {"family", "intercept", "slope", "time_scale"});
        c.family = AxisCoef::Family::Affine;
        c.p0 = num(j, ctx, "intercept");
        c.p1 = num(j, ctx, "slope");
    } else if (fam == "gbm") {
        check_keys(j, ctx, {"family", "vol", "time_scale"});
        c.family = AxisCoef::Family::Gbm;
        c.p0 = num(j, ctx, "vol");
    } else {
        throw ConfigError(ctx + ".family: unknown diffusion family '" + fam + "'");
    }
    c.time_scale = num(j, ctx, "time_scale", 0.0);
    return c;
}

inline json drift_to_json(const AxisCoef& c) {
    json j;
    switch (c.family) {
        case AxisCoef::Family::Constant:
            j["family"] = "constant";
            j["value"] = c.p0;
            break;
        case AxisCoef::Family::Affine:
            j["family"] = "affine";
            j["intercept"] = c.p0;
            j["slope"] = c.p1;
            break;
        case AxisCoef::Family::Gbm:
            j["family"] = "gbm";
            j["rate"] = c.p0;
            break;
    }
    j["time_scale"] = c.time_scale;
    return j;
}

inline json diffusion_to_json(const AxisCoef& c) {
    json j = drift_to_json(c);
    if (c.family == AxisCoef::Family::Gbm) {
        j.erase("rate");
        j["vol"] = c.p0;
    }
    return j;
}

// --- analytic field specs --------------------------------------------------

inline FieldSpec parse_field(const json& j, const std::string& ctx, int dim) {
    using cfgdetail::check_keys;
    using cfgdetail::num;
    using cfgdetail::str;
    FieldSpec s;
    const std::string fam = str(j, ctx, "family");
    if (fam == "constant") {
        check_keys(j, ctx, {"family", "value", "scale", "shift"});
        s.family = FieldSpec::Family::Constant;
        s.value = num(j, ctx, "value");
    } else if (fam == "linear") {
        check_keys(j, ctx, {"family", "value", "weights", "scale", "shift"});
        s.family = FieldSpec::Family::Linear;
        s.value = num(j, ctx, "value", 0.0);
    } else if (fam == "put" || fam == "call") {
        check_keys(j, ctx, {"family", "strike", "weights", "scale", "shift"});
        s.family = fam == "put" ? FieldSpec::Family::Put : FieldSpec::Family::Call;
        s.strike = num(j, ctx, "strike");
    } else {
        throw ConfigError(ctx + ".family: unknown field family '" + fam + "'");
    }
    if (j.contains("weights")) {
        const json& w = j.at("weights");
        if (!w.is_array() || w.empty() || w.size() > 2 ||
            static_cast<int>(w.size()) > dim) {
            throw ConfigError(ctx + ".weights: expected an array of up to dim numbers");
        }
        s.weights = {0.0, 0.0};
        for (std::size_t d = 0; d < w.size(); ++d) {
            if (!w[d].is_number()) throw ConfigError(ctx + ".weights: expected numbers");
            s.weights[d] = w[d].get<double>();
        }
    }
    s.scale = num(j, ctx, "scale", 1.0);
    s.shift = num(j, ctx, "shift", 0.0);
    return s;
}

inline json field_to_json(const FieldSpec& s, int dim) {
    json j;
    json w = json::array();
    for (int d = 0; d < dim; ++d) w.push_back(s.weights[d]);
    switch (s.family) {
        case FieldSpec::Family::Constant:
            j["family"] = "constant";
            j["value"] = s.value;
            break;
        case FieldSpec::Family::Linear:
            j["family"] = "linear";
            j["value"] = s.value;
            j["weights"] = w;
            break;
        case FieldSpec::Family::Put:
            j["family"] = "put";
            j["strike"] = s.strike;
            j["weights"] = w;
            break;
        case FieldSpec::Family::Call:
            j["family"] = "call";
            j["strike"] = s.strike;
            j["weights"] = w;
            break;
    }
    j["scale"] = s.scale;
    j["shift"] = s.shift;
    return j;
}

// --- top-level config ------------------------------------------------------

struct GridConfig {
    double t_max = 1.0;
    std::size_t t_steps = 100;
    struct AxisCfg {
        double min = 0.0;
        double max = 1.0;
        std::size_t nodes = 101;
    };
    std::vector<AxisCfg> axes;
};

struct McSettings {
    std::size_t n_paths = 100000;
    double dt_factor = 0.25;  // simulation step = dt_factor * grid dt
    std::uint64_t seed = 1;
    bool antithetic = false;
    double scheme_tol_c = 0.5;
    std::vector<double> checkpoint_times;
    std::optional<std::array<double, 2>> control_point;
};

struct ProblemConfig {
    int schema_version = 1;

    DiffusionModel model;
    DensityRequest density;
    double density_check_tol = 1e-2;

    GridConfig grid;

    enum class Kind { Stopping, Game } kind = Kind::Stopping;
    FieldSpec obstacle;             // stopping
    FieldSpec lower, upper;         // game
    std::optional<FieldSpec> cost;  // holding cost, either kind
    std::vector<std::array<double, 2>> start_points;

    PenaltyConfig penalty;
    double outer_tol = 1e-7;
    std::size_t max_outer_iters = 200;

    PsorConfig psor;
    double oracle_compare_tol = 1e-6;

    McSettings mc;

    static ProblemConfig from_json(const json& root);
    static ProblemConfig load(const std::string& path);
    json to_json() const;
    std::string canonical() const { return to_json().dump(2) + "\n"; }

    std::vector<double> time_nodes() const {
        return linspace(0.0, t_max_checked(), t_steps_checked() + 1);
    }

    SpaceTimeGrid build_grid() const {
        std::vector<std::vector<double>> axes;
        for (const auto& a : grid.axes) {
            axes.push_back(linspace(a.min, a.max, a.nodes));
        }
        return SpaceTimeGrid(time_nodes(), std::move(axes));
    }

    double mc_dt() const { return mc.dt_factor * t_max_checked() / static_cast<double>(t_steps_checked()); }

  private:
    double t_max_checked() const {
        if (!(grid.t_max > 0.0)) throw ConfigError("grid.t_max: must be positive");
        return grid.t_max;
    }
    std::size_t t_steps_checked() const {
        if (grid.t_steps < 1) throw ConfigError("grid.t_steps: must be at least 1");
        return grid.t_steps;
    }
};

inline ProblemConfig ProblemConfig::from_json(const json& root) {
    using namespace cfgdetail;
    ProblemConfig cfg;
    check_keys(root, "config",
               {"schema_version", "model", "grid", "problem", "penalty", "psor", "mc"});
    if (!root.contains("schema_version")) throw ConfigError("config.schema_version: missing");
    cfg.schema_version = static_cast<int>(count(root, "config", "schema_version"));
    if (cfg.schema_version != 1) {
        throw ConfigError("config.schema_version: unsupported version " +
                          std::to_string(cfg.schema_version));
    }

    // model
    if (!root.contains("model")) throw ConfigError("config.model: missing");
    const json& jm = root.at("model");
    check_keys(jm, "model",
               {"dim", "alpha", "drift", "diffusion", "density", "lambda_min",
                "density_check_tol"});
    const std::size_t dim = count(jm, "model", "dim");
    if (dim != 1 && dim != 2) throw ConfigError("model.dim: must be 1 or 2");
    cfg.model.dim = static_cast<int>(dim);
    cfg.model.alpha = num(jm, "model", "alpha");
    if (!(cfg.model.alpha >= 0.0)) throw ConfigError("model.alpha: must be non-negative");
    cfg.model.lambda_min = num(jm, "model", "lambda_min", 1e-8);
    if (!(cfg.model.lambda_min > 0.0)) throw ConfigError("model.lambda_min: must be positive");
    cfg.density_check_tol = num(jm, "model", "density_check_tol", 1e-2);

    auto parse_coef_array = [&](const char* key, bool is_drift) {
        if (!jm.contains(key)) throw ConfigError(std::string("model.") + key + ": missing");
        const json& arr = jm.at(key);
        if (!arr.is_array() || arr.size() != dim) {
            throw ConfigError(std::string("model.") + key +
                              ": expected an array with one entry per dimension");
        }
        std::array<AxisCoef, 2> out{};
        for (std::size_t d = 0; d < dim; ++d) {
            const std::string ctx = std::string("model.") + key + "[" + std::to_string(d) + "]";
            out[d] = is_drift ? parse_drift(arr[d], ctx) : parse_diffusion(arr[d], ctx);
        }
        return out;
    };
    cfg.model.drift = parse_coef_array("drift", true);
    cfg.model.vol = parse_coef_array("diffusion", false);

    if (!jm.contains("density")) throw ConfigError("model.density: missing");
    const json& jd = jm.at("density");
    check_keys(jd, "model.density", {"mode", "axes"});
    const std::string mode = str(jd, "model.density", "mode");
    if (mode == "unit") {
        cfg.density.mode = SymmetrizingDensity::Mode::Unit;
    } else if (mode == "closed-form") {
        cfg.density.mode = SymmetrizingDensity::Mode::ClosedForm;
    } else if (mode == "user") {
        cfg.density.mode = SymmetrizingDensity::Mode::User;
        if (!jd.contains("axes")) throw ConfigError("model.density.axes: missing for user mode");
        const json& axes = jd.at("axes");
        if (!axes.is_array() || axes.size() != dim) {
            throw ConfigError("model.density.axes: expected one entry per dimension");
        }
        for (std::size_t d = 0; d < dim; ++d) {
            const std::string ctx = "model.density.axes[" + std::to_string(d) + "]";
            check_keys(axes[d], ctx, {"family", "param"});
            const std::string fam = str(axes[d], ctx, "family");
            auto& ax = cfg.density.axes[d];
            if (fam == "power") {
                ax.family = SymmetrizingDensity::Axis::Family::Power;
            } else if (fam == "exponential") {
                ax.family = SymmetrizingDensity::Axis::Family::Exponential;
            } else if (fam == "one") {
                ax.family = SymmetrizingDensity::Axis::Family::One;
            } else {
                throw ConfigError(ctx + ".family: unknown density family '" + fam + "'");
            }
            ax.param = num(axes[d], ctx, "param", 0.0);
        }
    } else {
        throw ConfigError("model.density.mode: unknown mode '" + mode + "'");
    }

    // grid
    if (!root.contains("grid")) throw ConfigError("config.grid: missing");
    const json& jg = root.at("grid");
    check_keys(jg, "grid", {"t_max", "t_steps", "axes"});
    cfg.grid.t_max = num(jg, "grid", "t_max");
    if (!(cfg.grid.t_max > 0.0)) throw ConfigError("grid.t_max: must be positive");
    cfg.grid.t_steps = count(jg, "grid", "t_steps");
    if (cfg.grid.t_steps < 1) throw ConfigError("grid.t_steps: must be at least 1");
    if (!jg.contains("axes")) throw ConfigError("grid.axes: missing");
    const json& jaxes = jg.at("axes");
    if (!jaxes.is_array() || jaxes.size() != dim) {
        throw ConfigError("grid.axes: expected one entry per dimension");
    }
    for (std::size_t d = 0; d < dim; ++d) {
        const std::string ctx = "grid.axes[" + std::to_string(d) + "]";
        check_keys(jaxes[d], ctx, {"min", "max", "nodes"});
        GridConfig::AxisCfg a;
        a.min = num(jaxes[d], ctx, "min");
        a.max = num(jaxes[d], ctx, "max");
        a.nodes = count(jaxes[d], ctx, "nodes");
        if (!(a.max > a.min)) throw ConfigError(ctx + ": need max > min");
        if (a.nodes < 3) throw ConfigError(ctx + ".nodes: need at least 3");
        cfg.grid.axes.push_back(a);
    }

    // problem
    if (!root.contains("problem")) throw ConfigError("config.problem: missing");
    const json& jp = root.at("problem");
    check_keys(jp, "problem",
               {"kind", "obstacle", "lower_obstacle", "upper_obstacle", "cost",
                "start_points"});
    const std::string kind = str(jp, "problem", "kind");
    if (kind == "stopping") {
        cfg.kind = Kind::Stopping;
        if (!jp.contains("obstacle")) throw ConfigError("problem.obstacle: missing");
        cfg.obstacle = parse_field(jp.at("obstacle"), "problem.obstacle", cfg.model.dim);
        if (jp.contains("lower_obstacle") || jp.contains("upper_obstacle")) {
            throw ConfigError("problem: lower/upper_obstacle only apply to kind 'game'");
        }
    } else if (kind == "game") {
        cfg.kind = Kind::Game;
        if (!jp.contains("lower_obstacle")) throw ConfigError("problem.lower_obstacle: missing");
        if (!jp.contains("upper_obstacle")) throw ConfigError("problem.upper_obstacle: missing");
        cfg.lower = parse_field(jp.at("lower_obstacle"), "problem.lower_obstacle", cfg.model.dim);
        cfg.upper = parse_field(jp.at("upper_obstacle"), "problem.upper_obstacle", cfg.model.dim);
        if (jp.contains("obstacle")) {
            throw ConfigError("problem.obstacle: only applies to kind 'stopping'");
        }
    } else {
        throw ConfigError("problem.kind: must be 'stopping' or 'game'");
    }
    if (jp.contains("cost")) {
        cfg.cost = parse_field(jp.at("cost"), "problem.cost", cfg.model.dim);
    }
    if (jp.contains("start_points")) {
        const json& sp = jp.at("start_points");
        if (!sp.is_array()) throw ConfigError("problem.start_points: expected an array");
        for (std::size_t s = 0; s < sp.size(); ++s) {
            const json& pt = sp[s];
            if (!pt.is_array() || pt.size() != dim) {
                throw ConfigError("problem.start_points[" + std::to_string(s) +
                                  "]: expected " + std::to_string(dim) + " coordinates");
            }
            std::array<double, 2> x{0.0, 0.0};
            for (std::size_t d = 0; d < dim; ++d) {
                if (!pt[d].is_number()) {
                    throw ConfigError("problem.start_points[" + std::to_string(s) +
                                      "]: expected numbers");
                }
                x[d] = pt[d].get<double>();
            }
            cfg.start_points.push_back(x);
        }
    }

    // penalty
    const json jpen = root.contains("penalty") ? root.at("penalty") : json::object();
    check_keys(jpen, "penalty",
               {"eps_schedule", "inner_tol", "max_inner_iters", "contact_tol",
                "outer_tol", "max_outer_iters"});
    if (jpen.contains("eps_schedule")) {
        const json& es = jpen.at("eps_schedule");
        if (!es.is_array() || es.empty()) {
            throw ConfigError("penalty.eps_schedule: expected a non-empty array");
        }
        cfg.penalty.eps_schedule.clear();
        for (const auto& e : es) {
            if (!e.is_number()) throw ConfigError("penalty.eps_schedule: expected numbers");
            cfg.penalty.eps_schedule.push_back(e.get<double>());
        }
    }
    cfg.penalty.inner_tol = num(jpen, "penalty", "inner_tol", 1e-10);
    cfg.penalty.max_inner_iters = count(jpen, "penalty", "max_inner_iters", std::size_t{200});
    if (jpen.contains("contact_tol")) {
        cfg.penalty.contact_tol = num(jpen, "penalty", "contact_tol");
        if (!(*cfg.penalty.contact_tol > 0.0)) {
            throw ConfigError("penalty.contact_tol: must be positive");
        }
    }
    cfg.outer_tol = num(jpen, "penalty", "outer_tol", 1e-7);
    cfg.max_outer_iters = count(jpen, "penalty", "max_outer_iters", std::size_t{200});
    cfg.penalty.validate();

    // psor
    const json jpsor = root.contains("psor") ? root.at("psor") : json::object();
    check_keys(jpsor, "psor", {"omega", "tol", "max_sweeps", "compare_tol"});
    cfg.psor.omega = num(jpsor, "psor", "omega", 1.9);
    cfg.psor.tol = num(jpsor, "psor", "tol", 1e-10);
    cfg.psor.max_sweeps = count(jpsor, "psor", "max_sweeps", std::size_t{50000});
    cfg.oracle_compare_tol = num(jpsor, "psor", "compare_tol", 1e-6);
    cfg.psor.validate();

    // mc
    const json jmc = root.contains("mc") ? root.at("mc") : json::object();
    check_keys(jmc, "mc",
               {"n_paths", "dt_factor", "seed", "antithetic", "scheme_tol_c",
                "checkpoint_times", "control_point"});
    cfg.mc.n_paths = count(jmc, "mc", "n_paths", std::size_t{100000});
    cfg.mc.dt_factor = num(jmc, "mc", "dt_factor", 0.25);
    if (!(cfg.mc.dt_factor > 0.0 && cfg.mc.dt_factor <= 1.0)) {
        throw ConfigError("mc.dt_factor: must lie in (0, 1]");
    }
    cfg.mc.seed = static_cast<std::uint64_t>(count(jmc, "mc", "seed", std::size_t{1}));
    cfg.mc.antithetic = flag(jmc, "mc", "antithetic", false);
    cfg.mc.scheme_tol_c = num(jmc, "mc", "scheme_tol_c", 0.5);
    if (!(cfg.mc.scheme_tol_c >= 0.0)) throw ConfigError("mc.scheme_tol_c: must be non-negative");
    if (jmc.contains("checkpoint_times")) {
        const json& ct = jmc.at("checkpoint_times");
        if (!ct.is_array()) throw ConfigError("mc.checkpoint_times: expected an array");
        for (const auto& t : ct) {
            if (!t.is_number()) throw ConfigError("mc.checkpoint_times: expected numbers");
            cfg.mc.checkpoint_times.push_back(t.get<double>());
        }
        for (std::size_t c = 0; c < cfg.mc.checkpoint_times.size(); ++c) {
            const double t = cfg.mc.checkpoint_times[c];
            if (!(t > 0.0 && t <= cfg.grid.t_max)) {
                throw ConfigError("mc.checkpoint_times: must lie in (0, t_max]");
            }
            if (c > 0 && !(t > cfg.mc.checkpoint_times[c - 1])) {
                throw ConfigError("mc.checkpoint_times: must be strictly increasing");
            }
        }
    }
    if (jmc.contains("control_point")) {
        const json& cp = jmc.at("control_point");
        if (!cp.is_array() || cp.size() != dim) {
            throw ConfigError("mc.control_point: expected " + std::to_string(dim) +
                              " coordinates");
        }
        std::array<double, 2> x{0.0, 0.0};
        for (std::size_t d = 0; d < dim; ++d) x[d] = cp[d].get<double>();
        cfg.mc.control_point = x;
    }

    // Cross-field invariants.
    for (std::size_t s = 0; s < cfg.start_points.size(); ++s) {
        for (std::size_t d = 0; d < dim; ++d) {
            const auto& a = cfg.grid.axes[d];
            const double x = cfg.start_points[s][d];
            if (x < a.min || x > a.max) {
                throw ConfigError("problem.start_points[" + std::to_string(s) +
                                  "]: outside the grid box");
            }
        }
    }
    return cfg;
}

inline ProblemConfig ProblemConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    json root;
    try {
        root = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("config parse error in " + path + ": " + e.what());
    }
    return from_json(root);
}

inline json ProblemConfig::to_json() const {
    json root;
    root["schema_version"] = schema_version;

    json jm;
    jm["dim"] = model.dim;
    jm["alpha"] = model.alpha;
    jm["lambda_min"] = model.lambda_min;
    jm["density_check_tol"] = density_check_tol;
    json jdr = json::array(), jdf = json::array();
    for (int d = 0; d < model.dim; ++d) {
        jdr.push_back(drift_to_json(model.drift[d]));
        jdf.push_back(diffusion_to_json(model.vol[d]));
    }
    jm["drift"] = jdr;
    jm["diffusion"] = jdf;
    json jd;
    switch (density.mode) {
        case SymmetrizingDensity::Mode::Unit: jd["mode"] = "unit"; break;
        case SymmetrizingDensity::Mode::ClosedForm: jd["mode"] = "closed-form"; break;
        case SymmetrizingDensity::Mode::User: {
            jd["mode"] = "user";
            json axes = json::array();
            for (int d = 0; d < model.dim; ++d) {
                json ja;
                switch (density.axes[d].family) {
                    case SymmetrizingDensity::Axis::Family::One: ja["family"] = "one"; break;
                    case SymmetrizingDensity::Axis::Family::Power: ja["family"] = "power"; break;
                    case SymmetrizingDensity::Axis::Family::Exponential:
                        ja["family"] = "exponential";
                        break;
                }
                ja["param"] = density.axes[d].param;
                axes.push_back(ja);
            }
            jd["axes"] = axes;
            break;
        }
    }
    jm["density"] = jd;
    root["model"] = jm;

    json jg;
    jg["t_max"] = grid.t_max;
    jg["t_steps"] = grid.t_steps;
    json jaxes = json::array();
    for (const auto& a : grid.axes) {
        jaxes.push_back({{"min", a.min}, {"max", a.max}, {"nodes", a.nodes}});
    }
    jg["axes"] = jaxes;
    root["grid"] = jg;

    json jp;
    jp["kind"] = kind == Kind::Stopping ? "stopping" : "game";
    if (kind == Kind::Stopping) {
        jp["obstacle"] = field_to_json(obstacle, model.dim);
    } else {
        jp["lower_obstacle"] = field_to_json(lower, model.dim);
        jp["upper_obstacle"] = field_to_json(upper, model.dim);
    }
    if (cost) jp["cost"] = field_to_json(*cost, model.dim);
    json sp = json::array();
    for (const auto& x : start_points) {
        json pt = json::array();
        for (int d = 0; d < model.dim; ++d) pt.push_back(x[d]);
        sp.push_back(pt);
    }
    jp["start_points"] = sp;
    root["problem"] = jp;

    json jpen;
    jpen["eps_schedule"] = penalty.eps_schedule;
    jpen["inner_tol"] = penalty.inner_tol;
    jpen["max_inner_iters"] = penalty.max_inner_iters;
    if (penalty.contact_tol) jpen["contact_tol"] = *penalty.contact_tol;
    jpen["outer_tol"] = outer_tol;
    jpen["max_outer_iters"] = max_outer_iters;
    root["penalty"] = jpen;

    json jpsor;
    jpsor["omega"] = psor.omega;
    jpsor["tol"] = psor.tol;
    jpsor["max_sweeps"] = psor.max_sweeps;
    jpsor["compare_tol"] = oracle_compare_tol;
    root["psor"] = jpsor;

    json jmc;
    jmc["n_paths"] = mc.n_paths;
    jmc["dt_factor"] = mc.dt_factor;
    jmc["seed"] = mc.seed;
    jmc["antithetic"] = mc.antithetic;
    jmc["scheme_tol_c"] = mc.scheme_tol_c;
    jmc["checkpoint_times"] = mc.checkpoint_times;
    if (mc.control_point) {
        json cp = json::array();
        for (int d = 0; d < model.dim; ++d) cp.push_back((*mc.control_point)[d]);
        jmc["control_point"] = cp;
    }
    root["mc"] = jmc;
    return root;
}

}  // namespace dvi
