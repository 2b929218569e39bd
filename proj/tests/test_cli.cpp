#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>
#include <sys/wait.h>

#include <json.hpp>

#include "dynascore/acceptance.hpp"
#include "dynascore/cli.hpp"
#include "dynascore/errors.hpp"

using namespace dynascore;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "dynascore-tests" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

fs::path write(const fs::path& path, const std::string& text) {
    std::ofstream(path) << text;
    return path;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

std::vector<std::vector<std::string>> read_csv(const fs::path& path) {
    std::vector<std::vector<std::string>> rows;
    std::istringstream in(slurp(path));
    std::string line;
    while (std::getline(in, line)) {
        std::vector<std::string> cells;
        std::istringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        rows.push_back(cells);
    }
    return rows;
}

int run_binary(const std::string& args) {
    const std::string cmd = std::string(DYNASCORE_BIN) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

const char* kPair =
    "market.p = 0.5\n"
    "run.n_samples = 200000\n"
    "run.seed = 42\n"
    "experiment.fpa.format = first-price\n"
    "experiment.spa.format = second-price\n";

}  // namespace

TEST_CASE("config parsing") {
    const auto cfg = Config::parse("# comment\n a = 1 \nb.c = x, y # trailing\n\nd = 0.5, 1.5\n", "t");
    CHECK(cfg.integer("a") == 1);
    CHECK(cfg.text("b.c") == "x, y");
    CHECK(cfg.reals("d") == std::vector<double>{0.5, 1.5});
    CHECK(cfg.real_or("missing", 2.5) == 2.5);
    CHECK_THROWS_AS(cfg.real("b.c"), Error);
    CHECK_THROWS_AS(Config::parse("a = 1\na = 2\n", "t"), Error);
    CHECK_THROWS_AS(Config::parse("no equals sign\n", "t"), Error);
    try {
        cfg.real("missing");
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::ConfigError);
        CHECK(std::string(e.what()).find("missing") != std::string::npos);
    }
}

TEST_CASE("config digest ignores key order and whitespace") {
    const auto a = Config::parse("market.p = 0.5\nrun.seed=3\n", "a");
    const auto b = Config::parse("run.seed   =   3\n# note\nmarket.p=0.5\n", "b");
    const auto c = Config::parse("run.seed = 4\nmarket.p = 0.5\n", "c");
    CHECK(a.digest() == b.digest());
    CHECK(a.digest() != c.digest());
    CHECK(a.digest().size() == 16);
}

TEST_CASE("unknown keys are rejected") {
    const auto cfg = Config::parse("market.p = 0.5\nmarket.q = 1\n", "t");
    CHECK_THROWS_AS(cfg.require_known(config_schema()), Error);
    CHECK_NOTHROW(Config::parse("experiment.x.format = fpa\n", "t").require_known(config_schema()));
}

TEST_CASE("number formatting round-trips") {
    for (double x : {0.1, 1.0 / 3.0, 2.0, 1e-17, 123456.789}) {
        CHECK(std::stod(format_real(x)) == x);
    }
    CHECK(format_real(0.5) == "0.5");
}

TEST_CASE("simulate writes revenue rows and a manifest") {
    const auto dir = scratch("simulate");
    RunOptions run;
    run.config = write(dir / "pair.cfg", kPair);
    run.out = dir / "out";
    CHECK(cmd_simulate(run) == exit_code::ok);

    const auto rows = read_csv(run.out / "revenue.csv");
    REQUIRE(rows.size() == 3);
    CHECK(rows[0] == std::vector<std::string>{"format", "reserve", "r", "p", "lambda", "bidding", "n_samples",
                                              "seed", "mean", "std_error"});
    CHECK(rows[1][0] == "first-price");
    CHECK(rows[2][0] == "second-price");
    const double ratio = std::stod(rows[2][8]) / std::stod(rows[1][8]);
    CHECK(ratio == doctest::Approx(2.0).epsilon(0.03));

    const auto manifest = nlohmann::json::parse(slurp(run.out / "manifest.json"));
    CHECK(manifest["command"] == "simulate");
    CHECK(manifest["seed"] == 42);
    CHECK(manifest["config_digest"] == Config::load(run.config).digest());
    std::set<std::string> declared;
    for (const auto& f : manifest["outputs"]) declared.insert(f.get<std::string>());
    for (const auto& entry : fs::directory_iterator(run.out)) {
        CHECK(declared.count(entry.path().filename().string()) == 1);
    }
}

TEST_CASE("reruns are byte-identical") {
    const auto dir = scratch("rerun");
    RunOptions run;
    run.config = write(dir / "pair.cfg", kPair);
    run.out = dir / "a";
    cmd_simulate(run);
    run.out = dir / "b";
    run.threads = 3;
    cmd_simulate(run);
    CHECK(slurp(dir / "a" / "revenue.csv") == slurp(dir / "b" / "revenue.csv"));
    run.seed = 43;
    run.out = dir / "c";
    cmd_simulate(run);
    CHECK(slurp(dir / "a" / "revenue.csv") != slurp(dir / "c" / "revenue.csv"));
}

TEST_CASE("missing prior is a config error naming the field") {
    const auto dir = scratch("missing");
    RunOptions run;
    run.config = write(dir / "bad.cfg", "experiment.a.format = second-price\n");
    run.out = dir / "out";
    try {
        cmd_simulate(run);
        FAIL("expected an error");
    } catch (const std::exception& e) {
        CHECK(exit_code_for(e) == exit_code::config_error);
        CHECK(std::string(e.what()).find("market.p") != std::string::npos);
    }
    CHECK(run_binary("simulate --config " + run.config.string() + " --out " + run.out.string()) ==
          exit_code::config_error);
    CHECK(run_binary("simulate --config " + (dir / "nope.cfg").string()) == exit_code::config_error);
}

TEST_CASE("equilibrium command") {
    const auto dir = scratch("equilibrium");
    RunOptions run;
    run.config = write(dir / "eq.cfg", "market.p = 0.5\n");
    run.out = dir / "r0";
    CHECK(cmd_equilibrium(run) == exit_code::ok);
    const auto rows = read_csv(run.out / "bids.csv");
    CHECK(rows.size() == 513);
    double d = 0.0;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const double v = std::stod(rows[i][0]);
        d = std::max(d, std::abs(std::stod(rows[i][1]) - 0.5 * v * v / (1.0 + v)));
    }
    CHECK(d <= 1e-3);

    run.config = write(dir / "eq01.cfg", "market.p = 0.5\nmarket.r = 0.01\n");
    run.out = dir / "r01";
    CHECK(cmd_equilibrium(run) == exit_code::ok);
    const auto report = nlohmann::json::parse(slurp(run.out / "solver.json"));
    CHECK(report["converged"] == true);
    CHECK(report["tolerance"] == 1e-4);

    run.config = write(dir / "static.cfg", "market.p = 0.999\nsolver.value_grid = 128\n");
    run.out = dir / "static";
    CHECK(cmd_equilibrium(run) == exit_code::ok);
    const auto stat = read_csv(run.out / "bids.csv");
    for (std::size_t i = 1; i < stat.size(); ++i) {
        CHECK(std::abs(std::stod(stat[i][1]) - std::stod(stat[i][0]) / 2.0) <= 2e-3);
    }

    run.config = write(dir / "cap.cfg", "market.p = 0.5\nmarket.r = 0.1\nsolver.max_iters = 1\n");
    run.out = dir / "cap";
    CHECK(cmd_equilibrium(run) == exit_code::not_converged);
}

TEST_CASE("value-function command") {
    const auto dir = scratch("value");
    auto column_max = [](const fs::path& csv, std::size_t col) {
        double m = 0.0;
        const auto rows = read_csv(csv);
        for (std::size_t i = 1; i < rows.size(); ++i) m = std::max(m, std::stod(rows[i][col]));
        return m;
    };

    ValueFunctionArgs a;
    a.b1 = 0.9;
    a.b2 = 0.6;
    a.reserve = 0.4;
    a.out = dir / "reserve";
    CHECK(cmd_value_function(a) == exit_code::ok);
    const auto header = read_csv(a.out / "value.csv").front();
    CHECK(header == std::vector<std::string>{"mu", "closed_form", "dp_oracle", "abs_diff", "stop", "boundary"});
    CHECK(column_max(a.out / "value.csv", 3) <= 1e-3);

    ValueFunctionArgs f;
    f.format = Format::FirstPrice;
    f.b1 = 1.0;
    f.b2 = 1.0;
    f.r = 0.1;
    f.out = dir / "fpa";
    cmd_value_function(f);
    const auto rows = read_csv(f.out / "value.csv");
    CHECK(std::abs(std::stod(rows[1][5]) - 0.9) <= 1e-3 + 1e-12);

    ValueFunctionArgs t;
    t.b1 = 1.0;
    t.b2 = 0.8;
    t.b3 = 0.3;
    t.out = dir / "three";
    cmd_value_function(t);
    for (const auto& row : read_csv(t.out / "value.csv")) {
        if (row[0] == "mu") continue;
        CHECK(std::stod(row[1]) == doctest::Approx(0.8 * std::stod(row[0])));
    }

    ValueFunctionArgs u = f;
    u.b3 = 0.5;
    CHECK_THROWS_AS(cmd_value_function(u), Error);
    CHECK(run_binary("value-function --format first-price --b1 1 --b2 0.8 --b3 0.5 --out " +
                     (dir / "x").string()) == exit_code::unsupported);
}

TEST_CASE("fault injection trips the dominance chain") {
    AcceptanceOptions o;
    o.inject_reserve_fault = true;
    const auto faulty = run_criterion(8, o);
    CHECK_FALSE(faulty.pass);
}
