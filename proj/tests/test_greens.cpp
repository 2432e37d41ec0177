#include <doctest.h>

#include <cmath>

#include "lacelab/greens.hpp"
#include "lacelab/kahan.hpp"

using namespace lacelab;

TEST_CASE("stencils") {
    Stencil nn = nn_stencil(3);
    CHECK(nn.offsets.size() == 6);
    CHECK(nn.sigma2 == doctest::Approx(1.0));
    double mass = 0.0;
    for (double w : nn.weights) mass += w;
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-15));

    Stencil sp = spread_out_stencil(1, 2);
    CHECK(sp.offsets.size() == 4);
    CHECK(sp.sigma2 == doctest::Approx(2.5).epsilon(1e-14));
    CHECK_THROWS_AS(spread_out_stencil(0, 1), ConfigError);
}

TEST_CASE("r = 0 gives the point mass") {
    auto S = TorusGreens::solve(2, 9, nn_stencil(2), 0.0);
    CHECK(S.at({0, 0}) == doctest::Approx(1.0));
    CHECK(S.at({1, 0}) == doctest::Approx(0.0));
    CHECK(S.sum_all() == doctest::Approx(1.0));
}

TEST_CASE("d = 1 closed form and independent series oracle") {
    const double r = 0.5;
    auto S = TorusGreens::solve(1, 513, nn_stencil(1), r);

    // S_r(0) on Z: sum_k r^{2k} C(2k, k) / 4^k = 1 / sqrt(1 - r^2)
    KahanSum series;
    double term = 1.0;   // r^{2k} C(2k,k) 4^{-k}, k = 0
    for (int k = 0; term > 1e-18; ++k) {
        series.add(term);
        term *= r * r * (2.0 * k + 1.0) / (2.0 * k + 2.0);   // ratio of return-walk terms
    }
    CHECK(series.value() == doctest::Approx(1.0 / std::sqrt(1.0 - r * r)).epsilon(1e-12));
    CHECK(S.at({0}) == doctest::Approx(series.value()).epsilon(1e-11));

    // total mass: 1 / (1 - r)
    CHECK(S.sum_all() == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(S.residual() <= 1e-11);

    // geometric profile on Z: S(x) = S(0) lambda^{|x|}
    const double lambda = (1.0 - std::sqrt(1.0 - r * r)) / r;
    CHECK(S.at({3}) == doctest::Approx(S.at({0}) * std::pow(lambda, 3)).epsilon(1e-10));
    CHECK(S.at({-3}) == doctest::Approx(S.at({3})).epsilon(1e-14));
}

TEST_CASE("mass identity at r close to one") {
    auto S = TorusGreens::solve(2, 21, nn_stencil(2), 0.99, 1e-12, 0);
    CHECK(S.sum_all() == doctest::Approx(100.0).epsilon(1e-9));
    CHECK(S.residual() <= 1e-11);
}

TEST_CASE("r = 1 rules") {
    CHECK_THROWS_AS(TorusGreens::solve(2, 21, nn_stencil(2), 1.0), ConfigError);
    CHECK_THROWS_AS(TorusGreens::solve(1, 9, nn_stencil(1), 1.5), ConfigError);
    // d = 3 torus regularization runs to the cap
    auto S = TorusGreens::solve(3, 9, nn_stencil(3), 1.0, 1e-12, 50);
    CHECK(S.iterations() == 50);
    CHECK(S.sum_all() == doctest::Approx(51.0).epsilon(1e-12));   // one unit of mass per step
}

TEST_CASE("amplitude constant") {
    CHECK(a_d(4) == doctest::Approx(2.0 / (M_PI * M_PI)).epsilon(1e-14));
    CHECK(a_d(3) == doctest::Approx(1.5 / M_PI).epsilon(1e-14));
    // Gamma(1.5) = sqrt(pi)/2
    CHECK(a_d(5) == doctest::Approx(2.5 * std::sqrt(M_PI) / 2.0 * std::pow(M_PI, -2.5))
                        .epsilon(1e-14));
    CHECK(a_d(5) == doctest::Approx(0.1266515).epsilon(1e-6));
    CHECK_THROWS_AS(a_d(2), ConfigError);
}

TEST_CASE("asymptotics refuses r != 1") {
    CHECK_THROWS_AS(check_green_asymptotics(5, 17, 0.5, 3.0, 4.0), ConfigError);
    CHECK_THROWS_AS(check_green_asymptotics(2, 17, 1.0, 3.0, 4.0), ConfigError);
}

TEST_CASE("asymptotics smoke on a small d = 3 torus") {
    // coarse window on a small torus: only finiteness and rough scale here;
    // the d = 5 production check lives in the acceptance suite
    const double dev = check_green_asymptotics(3, 17, 1.0, 2.0, 3.0, 0);
    CHECK(std::isfinite(dev));
    CHECK(dev < 1.0);
}

TEST_CASE("convolution bound sup-ratios") {
    auto res = convolution_bound_check(1, 2.0, 2.0, {32, 64});
    REQUIRE(res.sup.size() == 2);
    CHECK(res.sup[0] > 0.0);
    CHECK(res.max_growth() <= 1.05);

    CHECK_THROWS_AS(convolution_bound_check(3, 1.0, 2.0, {8}), ConfigError);   // a < b
    CHECK_THROWS_AS(convolution_bound_check(3, 2.0, 0.5, {8}), ConfigError);   // a+b <= d
}

TEST_CASE("star bound sup-ratios") {
    auto res = star_bound_check(2, 1.5, {12, 24}, 0, 4000);
    REQUIRE(res.sup.size() == 2);
    CHECK(res.sup[0] > 0.0);
    CHECK(res.max_growth() <= 1.05);

    CHECK_THROWS_AS(star_bound_check(2, 0.9, {8}), ConfigError);   // q <= d/2
    CHECK_THROWS_AS(star_bound_check(2, 2.5, {8}), ConfigError);   // q >= d
}

TEST_CASE("bar norms") {
    // delta field: Gbar^(s) = 0 for s > 0, 1 at s = 0; Wbar likewise
    auto delta = TorusGreens::solve(1, 33, nn_stencil(1), 0.0);
    auto [g1, w1] = bar_norms(delta, 1.0, 1.0);
    CHECK(g1 == doctest::Approx(0.0));
    CHECK(w1 == doctest::Approx(0.0));
    auto [g0, w0] = bar_norms(delta, 0.0, 0.0);
    CHECK(g0 == doctest::Approx(1.0));
    CHECK(w0 == doctest::Approx(1.0));

    // regression-locked values for S_{0.5} on the d = 1 torus
    auto S = TorusGreens::solve(1, 65, nn_stencil(1), 0.5);
    auto [gs, wt] = bar_norms(S, 1.0, 1.0);
    CHECK(gs == doctest::Approx(0.3094010768).epsilon(1e-8));
    CHECK(wt == doctest::Approx(0.4444444444).epsilon(1e-8));
}

TEST_CASE("random-walk domination") {
    // p = 0: S = delta dominates G = delta
    GraphSpec box = build_box_graph(CouplingKind::NearestNeighbor, 2, 3);
    for (double m : random_walk_domination_check(box, 0.0)) CHECK(m >= -1e-12);

    // single bond with tau = 2 tanh(p) < 1
    GraphSpec pair = build_custom_graph("pair", 2, {{{0, 1}}}, {1.0}, 0, {{0}, {1}});
    for (double m : random_walk_domination_check(pair, 0.2)) CHECK(m >= -1e-9);

    // 3x3 box at tau = 0.9
    const double p = std::atanh(0.9 / 4.0);
    auto margins = random_walk_domination_check(box, p);
    REQUIRE(margins.size() == 9);
    for (double m : margins) CHECK(m >= -1e-9);

    // tau > 1 refused
    CHECK_THROWS_AS(random_walk_domination_check(box, 1.0), ConfigError);
    GraphSpec glass = build_custom_graph("glass", 2, {{{0, 1}}}, {-1.0}, 0, {{0}, {1}});
    CHECK_THROWS_AS(random_walk_domination_check(glass, 0.2), ConfigError);
}
