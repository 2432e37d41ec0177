#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "lacelab/runner.hpp"

using nlohmann::json;

namespace {

const std::string kCli = LACELAB_CLI_PATH;

int run_cli(const std::string& args) {
    const std::string cmd = kCli + " " + args + " > cli_stdout.txt 2> cli_stderr.txt";
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

} // namespace

TEST_CASE("catalog subcommand lists eight graphs") {
    REQUIRE(run_cli("catalog") == 0);
    const std::string out = slurp("cli_stdout.txt");
    int lines = 0;
    for (char c : out) lines += (c == '\n');
    CHECK(lines == 8);
    CHECK(out.find("single-bond") != std::string::npos);
    CHECK(out.find("box-2x3") != std::string::npos);
}

TEST_CASE("verify-lace subcommand writes a report") {
    REQUIRE(run_cli("verify-lace --graph triangle --p 0.5 --order 1 --report lace.json") == 0);
    json rep = json::parse(slurp("lace.json"));
    CHECK(rep["pass"] == true);
    CHECK(rep["residual_max"].get<double>() <= 1e-9);
    std::remove("lace.json");
}

TEST_CASE("exit codes") {
    // unknown graph reference: config error, exit 2, message names the ref
    CHECK(run_cli("verify-lace --graph not-a-graph") == 2);
    CHECK(slurp("cli_stderr.txt").find("not-a-graph") != std::string::npos);

    // budget exceeded: exit 3 via the environment override
    CHECK(run_cli("run --config missing.json") == 2);

    {
        std::ofstream cfg("tiny_budget.json");
        cfg << R"({"suites":[{"kind":"verify-lace","graphs":["triangle"],"p":[0.5],"orders":[1]}]})";
    }
    const std::string cmd = "LACELAB_BUDGET=10 " + kCli +
                            " run --config tiny_budget.json > cli_stdout.txt 2> cli_stderr.txt";
    CHECK(WEXITSTATUS(std::system(cmd.c_str())) == 3);
    std::remove("tiny_budget.json");
}

TEST_CASE("run with an empty suite list passes") {
    {
        std::ofstream cfg("empty.json");
        cfg << R"({"suites":[]})";
    }
    CHECK(run_cli("run --config empty.json") == 0);
    std::remove("empty.json");
}

TEST_CASE("run executes suites from a config and writes deterministic reports") {
    {
        std::ofstream cfg("suite.json");
        cfg << R"({
  "output": {"dir": "reports_a"},
  "suites": [
    {"kind": "verify-lace", "name": "lace", "graphs": ["single-bond", "triangle"],
     "p": [0.5], "orders": [0, 1], "mixed_sign_instances": 1, "seed": 9},
    {"kind": "verify-switching", "name": "switching", "seed": 4, "instances": 10,
     "ghs_k1_instances": 5, "ghs_k2_instances": 3},
    {"kind": "check-conv", "name": "conv",
     "cases": [{"kind": "conv", "d": 1, "a": 2.0, "b": 2.0, "sides": [16, 32]}]}
  ]})";
    }
    REQUIRE(run_cli("run --config suite.json") == 0);
    REQUIRE(run_cli("run --config suite.json --out reports_b") == 0);

    for (const char* name : {"lace", "switching", "conv"}) {
        const std::string a = slurp(std::string("reports_a/") + name + ".json");
        const std::string b = slurp(std::string("reports_b/") + name + ".json");
        REQUIRE_FALSE(a.empty());
        CHECK(a == b);   // byte-identical across reruns
    }
    std::remove("suite.json");
    CHECK(std::system("rm -rf reports_a reports_b") == 0);
}

TEST_CASE("greens subcommand writes a CSV field") {
    REQUIRE(run_cli("greens --d 3 --side 9 --r 1 --cap 40 --csv field.csv") == 0);
    std::ifstream csv("field.csv");
    std::string header;
    std::getline(csv, header);
    CHECK(header == "x,S_r,predicted,ratio");
    int rows = 0;
    for (std::string line; std::getline(csv, line);) ++rows;
    CHECK(rows == 35);   // canonical orbit representatives of the 9^3 torus
    std::remove("field.csv");
}

TEST_CASE("library-level run_config rejects malformed configs") {
    using namespace lacelab;
    CHECK_THROWS_AS(run_config(json::parse(R"({"suites": 3})")), ConfigError);
    CHECK_THROWS_AS(run_config(json::parse(R"({"suites": [{"kind": "nope"}]})")), ConfigError);
    CHECK_THROWS_AS(load_config("really-not-here.json"), ConfigError);
}

TEST_CASE("deterministic coupling randomization") {
    using namespace lacelab;
    GraphSpec a = randomize_couplings(catalog_graph("K4"), 123);
    GraphSpec b = randomize_couplings(catalog_graph("K4"), 123);
    GraphSpec c = randomize_couplings(catalog_graph("K4"), 124);
    CHECK(a.coupling == b.coupling);
    CHECK(a.coupling != c.coupling);
    CHECK_FALSE(a.ferromagnetic());
    for (double J : a.coupling) CHECK(std::abs(J) >= 0.5);
}
