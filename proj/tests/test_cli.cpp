#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

std::string cli_path() {
    const char* p = std::getenv("MVTC_CLI_PATH");
    REQUIRE_MESSAGE(p != nullptr, "MVTC_CLI_PATH must point at the built binary");
    return p;
}

int run(const std::string& args) {
    const std::string cmd = cli_path() + " " + args + " >/dev/null 2>&1";
    const int rc = std::system(cmd.c_str());
    return WEXITSTATUS(rc);
}

fs::path fresh_dir(const std::string& name) {
    const fs::path d = fs::temp_directory_path() / ("mvtc_cli_test_" + name);
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

void write(const fs::path& p, const std::string& text) {
    std::ofstream out(p);
    out << text;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

// Reference market on a coarse grid so the whole binary stays fast.
std::string good_config(const std::string& extra = "") {
    return R"({
  "market": {
    "r_per_year": 0.05, "alpha_per_year": 0.15, "sigma_per_sqrt_year": 0.2,
    "lambda_buy_fee": 0.02, "mu_sell_fee": 0.02, "horizon_years": 2.0
  },
  "position": {"bond": -1.0, "stock": 1.0},
  "targets": [1.1],
  "grid": {"n_z": 200, "n_t": 200})" +
           extra + "\n}\n";
}

}  // namespace

TEST_CASE("missing and malformed configs exit 2") {
    CHECK(run("solve /nonexistent/config.json") == 2);
    const auto d = fresh_dir("badjson");
    write(d / "c.json", "{ not json");
    CHECK(run("solve " + (d / "c.json").string()) == 2);
    write(d / "missing.json", R"({"position": {"bond": 1, "stock": 0}})");
    CHECK(run("solve " + (d / "missing.json").string()) == 2);
    CHECK(run("") == 2);  // no subcommand
}

TEST_CASE("infeasible target exits 3") {
    const auto d = fresh_dir("infeasible");
    write(d / "c.json", R"({
  "market": {"r_per_year": 0.05, "alpha_per_year": 0.15, "sigma_per_sqrt_year": 0.2,
             "lambda_buy_fee": 0.02, "mu_sell_fee": 0.02, "horizon_years": 0.2},
  "position": {"bond": 1.0, "stock": -1.0},
  "targets": [1.5],
  "grid": {"n_z": 200, "n_t": 100}
})");
    CHECK(run("solve " + (d / "c.json").string() + " --out " + (d / "out").string()) == 3);
    // feasibility.json is still written before the failure
    CHECK(fs::exists(d / "out" / "feasibility.json"));
}

TEST_CASE("solve writes the full artifact set") {
    const auto d = fresh_dir("solve");
    write(d / "c.json", good_config());
    REQUIRE(run("solve " + (d / "c.json").string() + " --out " + (d / "out").string()) == 0);

    CHECK(fs::exists(d / "out" / "feasibility.json"));
    const std::string sol = slurp(d / "out" / "solution_0.json");
    CHECK(sol.find("\"ell_star\"") != std::string::npos);
    CHECK(sol.find("\"stay_put\": false") != std::string::npos);
    CHECK(sol.find("\"variance\"") != std::string::npos);

    const std::string csv = slurp(d / "out" / "boundaries.csv");
    CHECK(csv.rfind("t,x_s_star,x_b_star\n", 0) == 0);
    CHECK(csv.find("-inf") != std::string::npos);

    const std::string feas = slurp(d / "out" / "feasibility.json");
    CHECK(feas.find("\"t_star_years\"") != std::string::npos);
    CHECK(feas.find("\"z_sup\": null") != std::string::npos);  // long horizon
}

TEST_CASE("outputs are byte-identical across runs") {
    const auto d = fresh_dir("determinism");
    write(d / "c.json", good_config());
    REQUIRE(run("solve " + (d / "c.json").string() + " --out " + (d / "a").string()) == 0);
    REQUIRE(run("solve " + (d / "c.json").string() + " --out " + (d / "b").string()) == 0);
    CHECK(slurp(d / "a" / "boundaries.csv") == slurp(d / "b" / "boundaries.csv"));
    CHECK(slurp(d / "a" / "solution_0.json") == slurp(d / "b" / "solution_0.json"));
    CHECK(slurp(d / "a" / "feasibility.json") == slurp(d / "b" / "feasibility.json"));
}

TEST_CASE("environment variable supplies the default output directory") {
    const auto d = fresh_dir("envdir");
    write(d / "c.json", good_config());
    const std::string cmd = "MVTC_OUT_DIR=" + (d / "env_out").string() + " " + cli_path() +
                            " solve " + (d / "c.json").string() + " >/dev/null 2>&1";
    REQUIRE(WEXITSTATUS(std::system(cmd.c_str())) == 0);
    CHECK(fs::exists(d / "env_out" / "solution_0.json"));
}

TEST_CASE("plotdata emits boundaries, frontier and the schema sidecar") {
    const auto d = fresh_dir("plotdata");
    write(d / "c.json", good_config());
    REQUIRE(run("plotdata " + (d / "c.json").string() + " --out " + (d / "out").string()) == 0);
    CHECK(fs::exists(d / "out" / "schema.json"));

    const std::string csv = slurp(d / "out" / "boundaries.csv");
    // t strictly increasing, x_s_star nonincreasing, trailing -inf tail
    double prev_t = -1.0, prev_xs = 1e9;
    bool saw_inf = false;
    std::istringstream lines(csv);
    std::string line;
    std::getline(lines, line);  // header
    while (std::getline(lines, line)) {
        const auto c1 = line.find(','), c2 = line.find(',', c1 + 1);
        const double t = std::stod(line.substr(0, c1));
        const double xs = std::stod(line.substr(c1 + 1, c2 - c1 - 1));
        CHECK(t > prev_t);
        CHECK(xs <= prev_xs + 1e-15);
        if (line.substr(c2 + 1) == "-inf") saw_inf = true;
        prev_t = t;
        prev_xs = xs;
    }
    CHECK(saw_inf);

    const std::string frontier = slurp(d / "out" / "frontier.csv");
    CHECK(frontier.rfind("z,variance\n", 0) == 0);
    std::istringstream flines(frontier);
    std::getline(flines, line);
    int rows = 0;
    while (std::getline(flines, line)) {
        const auto c1 = line.find(',');
        if (c1 + 1 < line.size()) CHECK(std::stod(line.substr(c1 + 1)) >= 0.0);
        ++rows;
    }
    CHECK(rows > 0);
}
