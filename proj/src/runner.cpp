#include "lacelab/runner.hpp"

#include <atomic>
#include <bit>
#include <chrono>
#include <mutex>
#include <thread>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "lacelab/currents.hpp"
#include "lacelab/diagrams.hpp"
#include "lacelab/expansion.hpp"
#include "lacelab/greens.hpp"
#include "lacelab/kahan.hpp"
#include "lacelab/spin.hpp"
#include "lacelab/switching.hpp"

namespace lacelab {

using nlohmann::json;

std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

double uniform01(std::uint64_t& state) {
    return static_cast<double>(splitmix64(state) >> 11) * 0x1.0p-53;
}

int uniform_int(std::uint64_t& state, int lo, int hi) {
    const std::uint64_t span = static_cast<std::uint64_t>(hi - lo + 1);
    return lo + static_cast<int>(splitmix64(state) % span);
}

GraphSpec randomize_couplings(const GraphSpec& g, std::uint64_t seed) {
    GraphSpec out = g;
    std::uint64_t state = seed;
    bool any_negative = false;
    for (double& J : out.coupling) {
        const double magnitude = 0.5 + uniform01(state);
        const bool negative = uniform01(state) < 0.5;
        any_negative = any_negative || negative;
        J = (negative ? -magnitude : magnitude);
    }
    if (!any_negative && !out.coupling.empty()) {
        out.coupling[splitmix64(state) % out.coupling.size()] *= -1.0;
    }
    out.name = g.name + "#seed" + std::to_string(seed);
    out.endpoint_mask.clear();
    out.incident.clear();
    out.finalize();
    return out;
}

std::vector<int> random_multicurrent(int n_bonds, int max_total, std::uint64_t seed) {
    std::uint64_t state = seed;
    std::vector<int> N(n_bonds, 0);
    const int total = uniform_int(state, 1, max_total);
    for (int k = 0; k < total; ++k) N[uniform_int(state, 0, n_bonds - 1)] += 1;
    return N;
}

bool RunOutcome::all_pass() const {
    for (const auto& s : suites) {
        if (!s.pass) return false;
    }
    return true;
}

namespace {

std::vector<GraphSpec> resolve_graph_list(const json& suite, const char* fallback_all) {
    std::vector<GraphSpec> graphs;
    if (suite.contains("graphs")) {
        for (const auto& ref : suite.at("graphs")) graphs.push_back(resolve_graph(ref.get<std::string>()));
    } else if (fallback_all) {
        for (const CatalogEntry& e : builtin_catalog()) graphs.push_back(e.graph);
    }
    return graphs;
}

double positive_tolerance(const json& suite, const char* key, double fallback) {
    const double tol = suite.value(key, fallback);
    if (!(tol > 0.0)) throw ConfigError(std::string("suite: ") + key + " must be positive");
    return tol;
}

std::vector<double> p_values(const json& suite, std::vector<double> fallback) {
    if (suite.contains("p")) {
        if (suite.at("p").is_array()) return suite.at("p").get<std::vector<double>>();
        return {suite.at("p").get<double>()};
    }
    return fallback;
}

json report_margins(const std::vector<NamedMargin>& margins) {
    json out = json::array();
    for (const auto& m : margins) out.push_back({{"name", m.name}, {"value", m.value}});
    return out;
}

json lace_report_json(const ExpansionReport& rep) {
    json out;
    out["graph"] = rep.graph;
    out["p"] = rep.p;
    out["j"] = rep.order;
    out["pi"] = rep.pi;
    out["Pi"] = rep.Pi;
    out["R"] = rep.R;
    out["residual_max"] = rep.residual_max;
    out["pass"] = rep.pass;
    out["margins"] = report_margins(rep.margins);
    return out;
}

SuiteOutcome run_oracle_equivalence(const json& suite) {
    SuiteOutcome out;
    out.name = suite.value("name", "oracle-equivalence");
    const double tol = positive_tolerance(suite, "tolerance", 1e-12);
    auto graphs = resolve_graph_list(suite, "all");
    json checks = json::array();
    bool pass = true;
    double worst = 0.0;
    for (const GraphSpec& g : graphs) {
        for (double p : p_values(suite, {0.2, 0.5, 1.0})) {
            const double z_spin = partition_function(g, p);
            const double z_cur = current_weight_sum(g, p, all_bonds_mask(g.n_bonds()), 0);
            double dev = std::abs(z_cur - z_spin) / std::abs(z_spin);
            for (int x = 0; x < g.n_sites; ++x) {
                for (int y = x; y < g.n_sites; ++y) {
                    const double a = two_point(g, p, x, y);
                    const double b = two_point_via_currents(g, p, x, y);
                    dev = std::max(dev, std::abs(a - b) / std::max(1.0, std::abs(a)));
                }
            }
            worst = std::max(worst, dev);
            pass = pass && dev <= tol;
            checks.push_back({{"graph", g.name}, {"p", p}, {"max_rel_dev", dev}});
        }
    }
    out.report = {{"suite", out.name}, {"tolerance", tol}, {"max_rel_dev", worst},
                  {"checks", checks}, {"pass", pass}};
    out.pass = pass;
    return out;
}

SuiteOutcome run_verify_lace(const json& suite) {
    SuiteOutcome out;
    out.name = suite.value("name", "verify-lace");
    const double tol = positive_tolerance(suite, "tolerance", 1e-9);
    auto graphs = resolve_graph_list(suite, "all");
    std::vector<int> orders = suite.contains("orders")
                                  ? suite.at("orders").get<std::vector<int>>()
                                  : std::vector<int>{0, 1, 2};
    const int mixed = suite.value("mixed_sign_instances", 0);
    const std::uint64_t seed = suite.value("seed", 0);

    json checks = json::array();
    bool pass = true;
    double worst = 0.0;

    auto run_one = [&](const GraphSpec& g, double p) {
        Expansion exp(g, p);
        for (int j : orders) {
            const ExpansionReport rep = exp.verify_lace_identity(j, tol);
            worst = std::max(worst, rep.residual_max);
            pass = pass && rep.pass;
            checks.push_back(lace_report_json(rep));
        }
    };

    for (const GraphSpec& g : graphs) {
        for (double p : p_values(suite, {0.2, 0.5, 1.0})) run_one(g, p);
        for (int i = 0; i < mixed; ++i) {
            const GraphSpec mixed_graph = randomize_couplings(g, seed + 1 + i);
            for (double p : p_values(suite, {0.5, 1.0})) run_one(mixed_graph, p);
        }
    }
    out.report = {{"suite", out.name}, {"tolerance", tol}, {"residual_max", worst},
                  {"checks", checks}, {"pass", pass}};
    out.pass = pass;
    return out;
}

SuiteOutcome run_verify_through(const json& suite) {
    SuiteOutcome out;
    out.name = suite.value("name", "verify-through");
    const double tol = positive_tolerance(suite, "tolerance", 1e-9);
    const double mono_tol = positive_tolerance(suite, "monotonicity_tolerance", 1e-12);
    const int max_a = suite.value("max_a", 2);
    auto graphs = resolve_graph_list(suite, nullptr);
    if (graphs.empty()) {
        graphs.push_back(catalog_graph("triangle"));
        graphs.push_back(catalog_graph("square"));
    }

    json checks = json::array();
    bool pass = true;
    double worst_resid = 0.0, worst_margin = 0.0;
    for (const GraphSpec& g : graphs) {
        for (double p : p_values(suite, {0.5})) {
            Expansion exp(g, p);
            const SiteMask all = all_sites_mask(g.n_sites);
            double resid_max = 0.0, margin_min = 0.0;
            for (SiteMask A = 0; A <= all; ++A) {
                if ((A & all) != A) continue;
                if (std::popcount(A) > max_a) continue;
                for (int v = 0; v < g.n_sites; ++v) {
                    for (int x = 0; x < g.n_sites; ++x) {
                        resid_max = std::max(resid_max,
                                             std::abs(exp.through_identity_residual(A, v, x)));
                        if (g.ferromagnetic()) {
                            margin_min = std::min(
                                margin_min, two_point_monotonicity_margin(g, p, A, v, x));
                        }
                    }
                }
            }
            worst_resid = std::max(worst_resid, resid_max);
            worst_margin = std::min(worst_margin, margin_min);
            const bool ok = resid_max <= tol && margin_min >= -mono_tol;
            pass = pass && ok;
            checks.push_back({{"graph", g.name}, {"p", p}, {"residual_max", resid_max},
                              {"monotonicity_margin_min", margin_min}, {"pass", ok}});
        }
    }
    out.report = {{"suite", out.name}, {"tolerance", tol}, {"residual_max", worst_resid},
                  {"monotonicity_margin_min", worst_margin}, {"checks", checks}, {"pass", pass}};
    out.pass = pass;
    return out;
}

SuiteOutcome run_verify_switching(const json& suite) {
    SuiteOutcome out;
    out.name = suite.value("name", "verify-switching");
    const std::uint64_t seed = suite.value("seed", 12345);
    const int instances = suite.value("instances", 50);
    const int ghs_k1 = suite.value("ghs_k1_instances", 50);
    const int ghs_k2 = suite.value("ghs_k2_instances", 20);

    json checks = json::array();
    bool pass = true;

    // Fixed reference instance: the 5-bond path with N = (3,3,1,5,1) and no
    // through-set; both sides equal prod_b 2^{N_b - 1} = 256.
    {
        GraphSpec path = build_custom_graph(
            "path-6", 6, {{{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 5}}},
            {1.0, 1.0, 1.0, 1.0, 1.0}, 0, {{0}, {1}, {2}, {3}, {4}, {5}});
        const MultiCurrent mc = MultiCurrent::make(path, {3, 3, 1, 5, 1});
        const auto [lhs, rhs] = count_switching_sides(mc, 0, 0, 5);
        long long closed = 1;
        for (int N : mc.N) closed <<= (N - 1);
        const bool ok = (lhs == rhs) && (lhs == closed) && (closed == 256);
        pass = pass && ok;
        checks.push_back({{"check", "path-reference"}, {"lhs", lhs}, {"rhs", rhs},
                          {"closed_form", closed}, {"pass", ok}});
    }

    // Randomized instances on small catalog graphs with arbitrary A.
    {
        const std::vector<std::string> names{"single-bond", "path-3", "triangle", "square",
                                             "square-diag"};
        std::uint64_t state = seed;
        int failures = 0;
        for (int i = 0; i < instances; ++i) {
            const GraphSpec& g = catalog_graph(names[i % names.size()]);
            const MultiCurrent mc =
                MultiCurrent::make(g, random_multicurrent(g.n_bonds(), 10, splitmix64(state)));
            const SiteMask A = static_cast<SiteMask>(splitmix64(state)) & all_sites_mask(g.n_sites);
            int v = uniform_int(state, 0, g.n_sites - 1);
            int x = uniform_int(state, 0, g.n_sites - 1);
            if (v == x) x = (x + 1) % g.n_sites;
            const auto [lhs, rhs] = count_switching_sides(mc, A, v, x);
            if (lhs != rhs) ++failures;
        }
        pass = pass && failures == 0;
        checks.push_back({{"check", "switching-random"}, {"instances", instances},
                          {"failures", failures}, {"pass", failures == 0}});
    }

    // Multi-path switching counts at k = 1 and k = 2.  The ordered counts
    // are the asserted identity; the literal joint-tuple counts are reported
    // because the bare existence reading is known to separate the two sides.
    auto run_ghs = [&](int k, int count, std::uint64_t salt) {
        const std::vector<std::string> names{"single-bond", "path-3", "triangle", "square"};
        std::uint64_t state = seed ^ salt;
        int failures = 0;
        int literal_mismatches = 0;
        for (int i = 0; i < count; ++i) {
            const GraphSpec& g = catalog_graph(names[i % names.size()]);
            const int max_total = (k == 1) ? 10 : 8;
            const MultiCurrent mc = MultiCurrent::make(
                g, random_multicurrent(g.n_bonds(), max_total, splitmix64(state)));
            std::vector<std::pair<int, int>> zpairs;
            for (int kk = 0; kk < k; ++kk) {
                int z = uniform_int(state, 0, g.n_sites - 1);
                int zp = uniform_int(state, 0, g.n_sites - 1);
                if (z == zp) zp = (zp + 1) % g.n_sites;
                zpairs.push_back({z, zp});
            }
            SiteMask V = 0;
            if (uniform01(state) < 0.5) {
                V = site_bit(zpairs[0].first) ^ site_bit(zpairs[0].second);
            }
            const GhsBkCounts c = verify_ghs_bk(mc, V, zpairs);
            if (c.ordered_plain != c.ordered_switched) ++failures;
            if (c.literal_plain != c.literal_switched) ++literal_mismatches;
        }
        pass = pass && failures == 0;
        checks.push_back({{"check", "ghs-bk-k" + std::to_string(k)}, {"instances", count},
                          {"failures", failures},
                          {"literal_reading_mismatches", literal_mismatches},
                          {"pass", failures == 0}});
    };
    run_ghs(1, ghs_k1, 0x6b31ULL);
    run_ghs(2, ghs_k2, 0x6b32ULL);

    out.report = {{"suite", out.name}, {"seed", seed}, {"checks", checks}, {"pass", pass}};
    out.pass = pass;
    return out;
}

json bound_check_json(const BoundCheck& c, double tol) {
    json out;
    out["name"] = c.name;
    out["lhs"] = c.lhs;
    if (c.vacuous) {
        out["rhs"] = "divergent-series";
        out["vacuous"] = true;
    } else {
        out["rhs"] = c.rhs;
        out["margin"] = c.margin;
    }
    out["pass"] = c.pass(tol);
    return out;
}

SuiteOutcome run_verify_bounds(const json& suite) {
    SuiteOutcome out;
    out.name = suite.value("name", "verify-bounds");
    const double tol = positive_tolerance(suite, "tolerance", 1e-9);
    auto graphs = resolve_graph_list(suite, nullptr);
    if (graphs.empty()) {
        graphs.push_back(catalog_graph("triangle"));
        graphs.push_back(catalog_graph("square"));
        graphs.push_back(catalog_graph("square-diag"));
    }
    std::vector<int> orders = suite.contains("orders")
                                  ? suite.at("orders").get<std::vector<int>>()
                                  : std::vector<int>{0, 1};
    const bool with_aux = suite.value("aux", true);

    json checks = json::array();
    bool pass = true;
    double worst = 0.0;
    for (const GraphSpec& g : graphs) {
        for (double p : p_values(suite, {0.2, 0.5})) {
            Expansion exp(g, p);
            BoundSuite bounds(exp);
            json graph_checks = json::array();
            auto absorb = [&](const std::vector<BoundCheck>& cs) {
                for (const BoundCheck& c : cs) {
                    pass = pass && c.pass(tol);
                    if (!c.vacuous) worst = std::min(worst, c.margin);
                    graph_checks.push_back(bound_check_json(c, tol));
                }
            };
            for (int j : orders) absorb(bounds.diagrammatic(j));
            if (with_aux) {
                const SiteMask all = all_sites_mask(g.n_sites);
                for (SiteMask A = 0; A <= all; ++A) {
                    if ((A & all) != A) continue;
                    for (int y = 0; y < g.n_sites; ++y)
                        for (int x = 0; x < g.n_sites; ++x)
                            for (int v = 0; v < g.n_sites; ++v) absorb(bounds.aux(A, y, x, v));
                }
            }
            checks.push_back({{"graph", g.name}, {"p", p},
                              {"bubble_radius", bounds.bubble_radius()},
                              {"series_convergent", bounds.series_ok()},
                              {"checks", graph_checks}});
        }
    }
    out.report = {{"suite", out.name}, {"tolerance", tol}, {"margin_min", worst},
                  {"checks", checks}, {"pass", pass}};
    out.pass = pass;
    return out;
}

SuiteOutcome run_remainder_decay(const json& suite) {
    SuiteOutcome out;
    out.name = suite.value("name", "remainder-decay");
    auto graphs = resolve_graph_list(suite, "all");
    std::vector<int> orders = suite.contains("orders")
                                  ? suite.at("orders").get<std::vector<int>>()
                                  : std::vector<int>{1, 2, 3};
    json checks = json::array();
    bool pass = true;
    for (const GraphSpec& g : graphs) {
        for (double p : p_values(suite, {0.2, 0.35, 0.5})) {
            double tau_max = 0.0;
            for (double J : g.coupling) tau_max = std::max(tau_max, std::abs(std::tanh(p * J)));
            if (tau_max > 0.5) continue;   // decay claim applies in the dilute regime
            Expansion exp(g, p);
            std::vector<double> maxima;
            for (int j : orders) {
                double m = 0.0;
                for (int x = 0; x < g.n_sites; ++x) m = std::max(m, std::abs(exp.R_j(j, x)));
                maxima.push_back(m);
            }
            bool ok = true;
            for (std::size_t i = 1; i < maxima.size(); ++i) {
                ok = ok && maxima[i] <= maxima[i - 1] + 1e-15;
            }
            pass = pass && ok;
            checks.push_back({{"graph", g.name}, {"p", p}, {"R_max", maxima}, {"pass", ok}});
        }
    }
    out.report = {{"suite", out.name}, {"checks", checks}, {"pass", pass}};
    out.pass = pass;
    return out;
}

SuiteOutcome run_greens_asymptotics(const json& suite) {
    SuiteOutcome out;
    out.name = suite.value("name", "greens-asymptotics");
    const int d = suite.value("d", 5);
    const int side = suite.value("side", 33);
    const int cap = suite.value("cap", 0);
    const double tol = positive_tolerance(suite, "tolerance", 0.15);
    double lo = 5.0, hi = 8.0;
    if (suite.contains("window")) {
        lo = suite.at("window").at(0).get<double>();
        hi = suite.at("window").at(1).get<double>();
    }
    const double dev = check_green_asymptotics(d, side, 1.0, lo, hi, cap);
    const bool pass = dev <= tol;
    out.report = {{"suite", out.name}, {"d", d}, {"side", side}, {"window", {lo, hi}},
                  {"a_d", a_d(d)}, {"max_deviation", dev}, {"tolerance", tol}, {"pass", pass}};
    out.pass = pass;
    return out;
}

SuiteOutcome run_check_conv(const json& suite) {
    SuiteOutcome out;
    out.name = suite.value("name", "check-conv");
    const double growth_tol = positive_tolerance(suite, "growth_tolerance", 1.05);
    const std::uint64_t seed = suite.value("seed", 0);
    json checks = json::array();
    bool pass = true;

    json cases = suite.value("cases", json::array());
    if (cases.empty()) {
        cases.push_back({{"kind", "conv"}, {"d", 1}, {"a", 2.0}, {"b", 2.0}, {"sides", {64, 128}}});
        cases.push_back({{"kind", "conv"}, {"d", 2}, {"a", 3.0}, {"b", 2.0}, {"sides", {32, 64}}});
        cases.push_back({{"kind", "star"}, {"d", 3}, {"q", 2.0}, {"sides", {16, 32}}});
    }
    for (const auto& c : cases) {
        const std::string kind = c.value("kind", "conv");
        const int d = c.at("d").get<int>();
        const auto sides = c.at("sides").get<std::vector<int>>();
        SupRatioResult res;
        json entry;
        if (kind == "star") {
            const double q = c.at("q").get<double>();
            res = star_bound_check(d, q, sides, seed, c.value("samples", 20000));
            entry = {{"kind", kind}, {"d", d}, {"q", q}};
        } else {
            const double a = c.at("a").get<double>();
            const double b = c.at("b").get<double>();
            res = convolution_bound_check(d, a, b, sides, seed, c.value("samples", 100000));
            entry = {{"kind", kind}, {"d", d}, {"a", a}, {"b", b}};
        }
        const bool ok = res.max_growth() <= growth_tol;
        pass = pass && ok;
        entry["sides"] = res.sides;
        entry["sup"] = res.sup;
        entry["max_growth"] = res.max_growth();
        entry["pass"] = ok;
        checks.push_back(entry);
    }
    out.report = {{"suite", out.name}, {"growth_tolerance", growth_tol}, {"checks", checks},
                  {"pass", pass}};
    out.pass = pass;
    return out;
}

SuiteOutcome dispatch_suite(const json& suite) {
    const std::string name = suite.value("name", "");
    const std::string kind = suite.value("kind", name);
    const auto t0 = std::chrono::steady_clock::now();
    SuiteOutcome out;
    if (kind == "oracle-equivalence") {
        out = run_oracle_equivalence(suite);
    } else if (kind == "verify-lace") {
        out = run_verify_lace(suite);
    } else if (kind == "verify-through") {
        out = run_verify_through(suite);
    } else if (kind == "verify-switching") {
        out = run_verify_switching(suite);
    } else if (kind == "verify-bounds") {
        out = run_verify_bounds(suite);
    } else if (kind == "remainder-decay") {
        out = run_remainder_decay(suite);
    } else if (kind == "greens-asymptotics") {
        out = run_greens_asymptotics(suite);
    } else if (kind == "check-conv") {
        out = run_check_conv(suite);
    } else {
        throw ConfigError("unknown suite kind '" + kind + "'");
    }
    out.runtime_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return out;
}

} // namespace

json load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config '" + path + "'");
    json config;
    try {
        in >> config;
    } catch (const std::exception& e) {
        throw ConfigError("config '" + path + "': " + e.what());
    }
    return config;
}

RunOutcome run_config(const json& config) {
    RunOutcome outcome;
    if (!config.is_object()) throw ConfigError("config must be a JSON object");
    const json suites = config.value("suites", json::array());
    if (!suites.is_array()) throw ConfigError("config: suites must be an array");
    int workers = config.value("parallelism", 1);
    if (workers < 1) throw ConfigError("config: parallelism must be positive");

    // Suites are independent; each builds its own caches.  Outcomes land in
    // input order, so report content is scheduling-independent.
    outcome.suites.resize(suites.size());
    workers = std::min<int>(workers, static_cast<int>(suites.size()));
    if (workers <= 1) {
        for (std::size_t i = 0; i < suites.size(); ++i) {
            outcome.suites[i] = dispatch_suite(suites[i]);
        }
        return outcome;
    }

    std::atomic<std::size_t> cursor{0};
    std::mutex error_mutex;
    std::exception_ptr first_error;
    auto worker = [&] {
        while (true) {
            const std::size_t i = cursor.fetch_add(1);
            if (i >= suites.size()) return;
            try {
                outcome.suites[i] = dispatch_suite(suites[i]);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
    return outcome;
}

void write_reports(const RunOutcome& outcome, const std::string& dir) {
    std::filesystem::create_directories(dir);
    for (const auto& s : outcome.suites) {
        std::ofstream out(dir + "/" + s.name + ".json");
        out << s.report.dump(2) << "\n";
    }
}

} // namespace lacelab
