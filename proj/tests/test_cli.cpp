#include <catch2/catch_amalgamated.hpp>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string binary() {
    const char* b = std::getenv("DYNKIN_VI_BIN");
    REQUIRE(b != nullptr);
    return b;
}

fs::path fresh_dir(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / "dvi-cli-tests" / name;
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

int run(const std::string& args) {
    const std::string cmd = binary() + " " + args;
    const int rc = std::system(cmd.c_str());
    REQUIRE(rc != -1);
    REQUIRE(WIFEXITED(rc));
    return WEXITSTATUS(rc);
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

json tiny_put_config() {
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
        "t_steps": 100,
        "axes": [{"min": 0.2, "max": 3.0, "nodes": 61}]
      },
      "problem": {
        "kind": "stopping",
        "obstacle": {"family": "put", "strike": 1.0},
        "start_points": [[1.0], [0.8]]
      },
      "penalty": {"eps_schedule": [1e-2, 1e-4, 1e-6]},
      "mc": {
        "n_paths": 2000,
        "dt_factor": 1.0,
        "seed": 1,
        "checkpoint_times": [0.5, 1.0],
        "control_point": [1.0]
      }
    })");
}

fs::path write_config(const fs::path& dir, const json& j) {
    const fs::path p = dir / "config.json";
    std::ofstream out(p);
    out << j.dump(2) << "\n";
    return p;
}

}  // namespace

TEST_CASE("solve writes deterministic artifacts") {
    const fs::path dir = fresh_dir("solve");
    const fs::path cfg = write_config(dir, tiny_put_config());

    const fs::path out1 = dir / "a", out2 = dir / "b";
    CHECK(run("solve --config " + cfg.string() + " --out " + out1.string()) == 0);
    CHECK(run("solve --config " + cfg.string() + " --out " + out2.string()) == 0);

    const std::string csv = slurp(out1 / "value.csv");
    CHECK(csv.rfind("t,x1,value\n", 0) == 0);
    CHECK(csv == slurp(out2 / "value.csv"));
    CHECK(slurp(out1 / "diagnostics.json") == slurp(out2 / "diagnostics.json"));
    CHECK(fs::exists(out1 / "contact.csv"));

    // The stored canonical config reloads to the same bytes.
    const std::string canon = slurp(out1 / "config_canonical.json");
    const fs::path cfg2 = dir / "canon.json";
    std::ofstream(cfg2) << canon;
    const fs::path out3 = dir / "c";
    CHECK(run("solve --config " + cfg2.string() + " --out " + out3.string()) == 0);
    CHECK(slurp(out3 / "config_canonical.json") == canon);
}

TEST_CASE("verify passes, is thread-invariant, and honours the negative control") {
    const fs::path dir = fresh_dir("verify");
    const fs::path cfg = write_config(dir, tiny_put_config());

    const fs::path out1 = dir / "a", out2 = dir / "b";
    CHECK(run("verify --config " + cfg.string() + " --out " + out1.string() +
              " --negative-control") == 0);
    // Same seed, different worker count: byte-identical report.
    setenv("DYNKIN_VI_THREADS", "3", 1);
    CHECK(run("verify --config " + cfg.string() + " --out " + out2.string() +
              " --negative-control") == 0);
    unsetenv("DYNKIN_VI_THREADS");
    CHECK(slurp(out1 / "verify_report.json") == slurp(out2 / "verify_report.json"));

    const json rep = json::parse(slurp(out1 / "verify_report.json"));
    CHECK(rep.at("all_pass").get<bool>());
    CHECK(rep.at("negative_control").at("flagged").get<bool>());
    CHECK(rep.at("checks").size() >= 10);

    // Without the flag the control section is absent.
    const fs::path out3 = dir / "c";
    CHECK(run("verify --config " + cfg.string() + " --out " + out3.string()) == 0);
    const json rep3 = json::parse(slurp(out3 / "verify_report.json"));
    CHECK_FALSE(rep3.contains("negative_control"));

    // A different seed produces a different (but still passing) report.
    const fs::path out4 = dir / "d";
    CHECK(run("verify --config " + cfg.string() + " --out " + out4.string() +
              " --seed 99") == 0);
    CHECK(slurp(out4 / "verify_report.json") != slurp(out3 / "verify_report.json"));

    // Path-count override.
    const fs::path out5 = dir / "e";
    CHECK(run("verify --config " + cfg.string() + " --out " + out5.string() +
              " --paths 500") == 0);
}

TEST_CASE("compare-oracle agrees and report summarizes the artifacts") {
    const fs::path dir = fresh_dir("oracle");
    const fs::path cfg = write_config(dir, tiny_put_config());
    const fs::path out = dir / "a";

    CHECK(run("compare-oracle --config " + cfg.string() + " --out " + out.string()) == 0);
    const json rep = json::parse(slurp(out / "compare_report.json"));
    CHECK(rep.at("pass").get<bool>());
    CHECK(rep.at("max_abs_diff").get<double>() <= 1e-6);

    const fs::path text = dir / "report.txt";
    CHECK(run("report --out " + out.string() + " > " + text.string()) == 0);
    const std::string body = slurp(text);
    CHECK(body.find("problem kind: stopping") != std::string::npos);
    CHECK(body.find("oracle max diff") != std::string::npos);
}

TEST_CASE("config problems exit with the configuration code") {
    const fs::path dir = fresh_dir("badcfg");

    const fs::path broken = dir / "broken.json";
    std::ofstream(broken) << "{ this is not json";
    CHECK(run("solve --config " + broken.string() + " --out " + (dir / "x").string() +
              " 2> /dev/null") == 2);

    json unknown = tiny_put_config();
    unknown["bogus_key"] = 1;
    const fs::path ucfg = write_config(dir, unknown);
    const fs::path errfile = dir / "err.txt";
    CHECK(run("solve --config " + ucfg.string() + " --out " + (dir / "y").string() +
              " 2> " + errfile.string()) == 2);
    CHECK(slurp(errfile).find("bogus_key") != std::string::npos);

    json inverted = tiny_put_config();
    inverted["problem"] = json::parse(R"({
      "kind": "game",
      "lower_obstacle": {"family": "constant", "value": 1.0},
      "upper_obstacle": {"family": "constant", "value": 0.0},
      "start_points": [[1.0]]
    })");
    const fs::path icfg = dir / "inverted.json";
    std::ofstream(icfg) << inverted.dump(2) << "\n";
    CHECK(run("solve --config " + icfg.string() + " --out " + (dir / "z").string() +
              " 2> /dev/null") == 2);

    CHECK(run("report --out " + (dir / "nothing-here").string() + " > /dev/null") == 4);
}

TEST_CASE("solver failures exit with the scheme code") {
    const fs::path dir = fresh_dir("diverge");
    json j = tiny_put_config();
    j["penalty"] = {{"eps_schedule", {1e-2, 1e-4, 1e-6}}, {"max_inner_iters", 1}};
    const fs::path cfg = write_config(dir, j);
    CHECK(run("solve --config " + cfg.string() + " --out " + (dir / "x").string() +
              " 2> /dev/null") == 3);
}
