#include <doctest.h>

#include <cmath>

#include "lacelab/spin.hpp"

using namespace lacelab;

namespace {

GraphSpec single_bond(double J = 1.0) {
    return build_custom_graph("pair", 2, {{{0, 1}}}, {J}, 0, {{0}, {1}});
}

const GraphSpec& triangle() { return catalog_graph("triangle"); }

} // namespace

TEST_CASE("partition function closed forms") {
    // single site: no bonds, average of 1
    GraphSpec site = build_custom_graph("site", 1, {}, {}, 0, {{0}});
    for (double p : {0.0, 0.7, 2.0}) {
        SpinObservableRequest req{&site, p, 0.3, all_sites_mask(1)};
        // h shifts the energy but the 2^{-1} sum of cosh(ph) is not 1; use h=0 here
        req.h = 0.0;
        CHECK(partition_function(req) == doctest::Approx(1.0).epsilon(1e-15));
    }

    // two sites, one bond: Z = cosh(pJ), summed over 4 configurations
    for (double p : {0.2, 1.0}) {
        for (double J : {1.0, -0.8}) {
            GraphSpec g = single_bond(J);
            CHECK(partition_function(g, p) ==
                  doctest::Approx(std::cosh(p * J)).epsilon(1e-14));
        }
    }

    // triangle at uniform pJ = t: Z = (2 e^{3t} + 6 e^{-t})/8 = cosh^3 t + sinh^3 t
    for (double t : {0.2, 0.5, 1.0}) {
        const double z = partition_function(triangle(), t);
        const double by_configs = (2.0 * std::exp(3.0 * t) + 6.0 * std::exp(-t)) / 8.0;
        const double closed = std::pow(std::cosh(t), 3) + std::pow(std::sinh(t), 3);
        CHECK(z == doctest::Approx(by_configs).epsilon(1e-14));
        CHECK(z == doctest::Approx(closed).epsilon(1e-14));
    }

    // empty restriction: Z = 1
    SpinObservableRequest empty{&triangle(), 0.5, 0.0, 0};
    CHECK(partition_function(empty) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("partition function with external field") {
    // two sites, one bond, field h: direct 4-term sum as the oracle
    const double p = 0.6, J = 1.0, h = 0.4;
    GraphSpec g = single_bond(J);
    SpinObservableRequest req{&g, p, h, all_sites_mask(2)};
    const double expected =
        (std::exp(p * (J + 2 * h)) + std::exp(p * (J - 2 * h)) + 2.0 * std::exp(-p * J)) / 4.0;
    CHECK(partition_function(req) == doctest::Approx(expected).epsilon(1e-14));
}

TEST_CASE("two point closed forms and conventions") {
    // x = y inside the restriction
    CHECK(two_point(triangle(), 0.7, 1, 1) == 1.0);

    // single bond: tanh(pJ)
    for (double p : {0.2, 0.5, 1.0}) {
        GraphSpec g = single_bond();
        CHECK(two_point(g, p, 0, 1) == doctest::Approx(std::tanh(p)).epsilon(1e-14));
    }

    // triangle neighbors: sinh t cosh t (cosh t + sinh t) / (cosh^3 t + sinh^3 t)
    for (double t : {0.2, 0.5, 1.0}) {
        const double c = std::cosh(t), s = std::sinh(t);
        const double closed = s * c * (c + s) / (c * c * c + s * s * s);
        CHECK(two_point(triangle(), t, 0, 1) == doctest::Approx(closed).epsilon(1e-14));
    }

    // outside the restriction: zero by convention, one on the diagonal inside
    SpinObservableRequest restricted{&triangle(), 0.5, 0.0, site_bit(0) | site_bit(1)};
    CHECK(two_point(restricted, 0, 2) == 0.0);
    CHECK(two_point(restricted, 2, 2) == 0.0);
    CHECK(two_point(restricted, 0, 0) == 1.0);
    CHECK_THROWS_AS(two_point(restricted, 0, 7), ConfigError);
}

TEST_CASE("restriction consistency: restricted average equals the standalone subgraph") {
    // Restrict the triangle to {0,1}: only the bond {0,1} survives.
    SpinObservableRequest restricted{&triangle(), 0.8, 0.0, site_bit(0) | site_bit(1)};
    GraphSpec pair = single_bond();
    CHECK(two_point(restricted, 0, 1) ==
          doctest::Approx(two_point(pair, 0.8, 0, 1)).epsilon(1e-14));
    CHECK(partition_function(restricted) ==
          doctest::Approx(partition_function(pair, 0.8)).epsilon(1e-14));
}

TEST_CASE("two point stays within its bounds") {
    GraphSpec mixed = build_custom_graph("mixed", 3, {{{0, 1}, {1, 2}, {0, 2}}},
                                         {1.0, -1.3, 0.4}, 0);
    for (double p : {0.2, 0.7, 1.4}) {
        for (int x = 0; x < 3; ++x) {
            for (int y = 0; y < 3; ++y) {
                const double g_m = two_point(mixed, p, x, y);
                CHECK(g_m >= -1.0 - 1e-15);
                CHECK(g_m <= 1.0 + 1e-15);
                const double g_f = two_point(triangle(), p, x, y);
                CHECK(g_f >= -1e-15);      // ferromagnetic: nonnegative
                CHECK(g_f <= 1.0 + 1e-15);
            }
        }
    }
}

TEST_CASE("Griffiths-style monotonicity in p on a grid") {
    for (const char* name : {"triangle", "square", "K4"}) {
        const GraphSpec& g = catalog_graph(name);
        double prev = -1.0;
        for (double p = 0.0; p <= 1.6; p += 0.2) {
            const double v = two_point(g, p, 0, 1);
            CHECK(v >= prev - 1e-12);
            prev = v;
        }
    }
}

TEST_CASE("monotonicity margin under restriction") {
    // A empty: margins vanish identically.
    CHECK(two_point_monotonicity_margin(triangle(), 0.6, 0, 0, 1) ==
          doctest::Approx(0.0).epsilon(1e-15));

    // single bond, A = {0}, x = y = 1: both averages are 1.
    GraphSpec pair = single_bond();
    CHECK(two_point_monotonicity_margin(pair, 0.9, site_bit(0), 1, 1) == doctest::Approx(0.0));

    // triangle, A = {2}: margin = G_triangle - tanh(t) >= 0 for neighbors 0,1.
    for (double t : {0.2, 0.5, 1.0}) {
        const double margin = two_point_monotonicity_margin(triangle(), t, site_bit(2), 0, 1);
        CHECK(margin == doctest::Approx(two_point(triangle(), t, 0, 1) - std::tanh(t))
                            .epsilon(1e-12));
        CHECK(margin >= -1e-12);
    }

    // full sweep of subsets stays nonnegative on ferromagnetic graphs
    for (SiteMask A = 0; A < 8; ++A) {
        for (int x = 0; x < 3; ++x)
            for (int y = 0; y < 3; ++y) {
                CHECK(two_point_monotonicity_margin(triangle(), 0.5, A, x, y) >= -1e-12);
            }
    }

    GraphSpec glass = build_custom_graph("glass", 2, {{{0, 1}}}, {-1.0}, 0);
    CHECK_THROWS_AS(two_point_monotonicity_margin(glass, 0.5, 1, 0, 1), ConfigError);
}

TEST_CASE("spin oracle budget") {
    GraphSpec long_path = build_custom_graph(
        "path-25", 25,
        [] {
            std::vector<std::array<int, 2>> edges;
            for (int i = 0; i + 1 < 25; ++i) edges.push_back({i, i + 1});
            return edges;
        }(),
        std::vector<double>(24, 1.0), 0);
    SpinObservableRequest req{&long_path, 0.3, 0.0, all_sites_mask(25)};
    CHECK_THROWS_AS(partition_function(req), BudgetError);
}

TEST_CASE("restricted correlation cache") {
    SpinCache cache(triangle(), 0.5);
    CHECK(cache.Z(all_sites_mask(3)) ==
          doctest::Approx(partition_function(triangle(), 0.5)).epsilon(1e-14));
    CHECK(cache.G(all_sites_mask(3), 0, 1) ==
          doctest::Approx(two_point(triangle(), 0.5, 0, 1)).epsilon(1e-14));
    // conventions on the restricted matrix
    CHECK(cache.G(site_bit(0), 0, 1) == 0.0);
    CHECK(cache.G(site_bit(0), 0, 0) == 1.0);
    CHECK(cache.G(0, 1, 1) == 0.0);
    CHECK(cache.Z(0) == doctest::Approx(1.0));
}
