#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "lacelab/graph.hpp"

namespace lacelab {

// Config-driven experiment runner.  A config names a list of suites; each
// suite executes, asserts its tolerances and contributes one report.  Report
// files contain only deterministic content (no wall-clock fields), so
// identical config + seed reproduce them byte for byte; runtimes go to the
// console log instead.

struct SuiteOutcome {
    std::string name;
    bool pass = false;
    nlohmann::json report;
    double runtime_seconds = 0.0;   // console only, never written to the report
};

struct RunOutcome {
    std::vector<SuiteOutcome> suites;
    bool all_pass() const;
};

// Exit codes: 0 all assertions pass, 1 assertion failure, 2 config error,
// 3 budget exceeded.
enum ExitCode : int { kExitPass = 0, kExitAssert = 1, kExitConfig = 2, kExitBudget = 3 };

nlohmann::json load_config(const std::string& path);
RunOutcome run_config(const nlohmann::json& config);

// Writes one "<suite-name>.json" per suite under `dir`.
void write_reports(const RunOutcome& outcome, const std::string& dir);

// Deterministic mixed-sign coupling assignment: flips signs and perturbs
// magnitudes of the graph couplings from the given seed (at least one
// negative coupling guaranteed).
GraphSpec randomize_couplings(const GraphSpec& g, std::uint64_t seed);

// Random integer-current instance for the switching suites.
std::vector<int> random_multicurrent(int n_bonds, int max_total, std::uint64_t seed);

// Portable uniform helpers built on splitmix64 (stdlib distributions are not
// byte-stable across implementations).
std::uint64_t splitmix64(std::uint64_t& state);
double uniform01(std::uint64_t& state);
int uniform_int(std::uint64_t& state, int lo, int hi);   // inclusive

} // namespace lacelab
