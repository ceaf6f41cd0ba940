#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>

#include "mvtc/errors.hpp"
#include "mvtc/mv_solver.hpp"
#include "mvtc/simulate.hpp"

using namespace mvtc;

namespace {

const MarketParams kBase{0.05, 0.15, 0.2, 0.02, 0.02, 2.0};

FreeBoundaries wide_bounds(double T = 1.0) {
    FreeBoundaries fb;
    fb.t = {0.0, T};
    fb.sell = {-1.05, -1.05};
    fb.buy = {-100.0, -100.0};
    fb.t0 = T;
    return fb;
}

const SolvedMarket& market() {
    static const SolvedMarket m = [] {
        SolverConfig c;
        c.n_z = 400;
        c.n_t = 500;
        return SolvedMarket::build(kBase, c);
    }();
    return m;
}

}  // namespace

TEST_CASE("pure drift step without boundary contact") {
    const auto fb = wide_bounds();
    PathState s{0.0, -2.0, 1.0, 0.0, 0.0};
    StepCounters c;
    const double dt = 1e-3;
    const PathState out = step(s, dt, 0.0, fb, kBase, &c);
    CHECK(out.t == doctest::Approx(dt));
    CHECK(out.bond == doctest::Approx(-2.0 * (1.0 + kBase.r * dt)).epsilon(1e-14));
    CHECK(out.stock == doctest::Approx(1.0 * (1.0 + kBase.alpha * dt)).epsilon(1e-14));
    CHECK(out.bought == 0.0);
    CHECK(out.sold == 0.0);
    CHECK(c.sell_contacts + c.buy_contacts == 0);
}

TEST_CASE("sell projection lands on the boundary and conserves x + (1-mu) y") {
    const auto fb = wide_bounds();
    // a stock rally pushes x/y up through the sell line
    PathState s{0.0, -1.1, 1.0, 0.0, 0.0};
    StepCounters c;
    const PathState out = step(s, 1e-3, 0.5, fb, kBase, &c);
    REQUIRE(c.sell_contacts == 1);
    CHECK(out.sold > 0.0);
    CHECK(out.bought == 0.0);
    CHECK(out.bond == doctest::Approx(-1.05 * out.stock).epsilon(1e-12));
    // conservation measured against the pre-projection free step
    const double xf = -1.1 * (1.0 + kBase.r * 1e-3);
    const double yf = 1.0 * (1.0 + kBase.alpha * 1e-3 + kBase.sigma * 0.5);
    CHECK(out.bond + (1.0 - kBase.mu) * out.stock ==
          doctest::Approx(xf + (1.0 - kBase.mu) * yf).epsilon(1e-14));
    CHECK(c.max_conservation_error <= 1e-12);
}

TEST_CASE("buy projection conserves x + (1+lambda) y") {
    FreeBoundaries fb = wide_bounds();
    fb.buy = {-1.5, -1.5};
    PathState s{0.0, -1.45, 1.0, 0.0, 0.0};
    StepCounters c;
    const PathState out = step(s, 1e-3, -1.5, fb, kBase, &c);  // stock drops, ratio sinks
    REQUIRE(c.buy_contacts == 1);
    CHECK(out.bought > 0.0);
    CHECK(out.bond == doctest::Approx(-1.5 * out.stock).epsilon(1e-12));
    const double xf = -1.45 * (1.0 + kBase.r * 1e-3);
    const double yf = 1.0 * (1.0 + kBase.alpha * 1e-3 + kBase.sigma * -1.5);
    CHECK(out.bond + (1.0 + kBase.lambda) * out.stock ==
          doctest::Approx(xf + (1.0 + kBase.lambda) * yf).epsilon(1e-14));
    CHECK(c.buy_contacts_after_t0 == 0);
}

TEST_CASE("short stock is covered immediately") {
    FreeBoundaries fb = wide_bounds();
    SUBCASE("before t0: projected to the buy boundary") {
        fb.buy = {-1.5, -1.5};
        fb.t0 = 1.0;
        PathState s{0.0, -1.2, 0.01, 0.0, 0.0};
        StepCounters c;
        const PathState out = step(s, 1e-3, -30.0, fb, kBase, &c);  // crash through zero
        CHECK(out.stock > 0.0);
        CHECK(out.bond == doctest::Approx(-1.5 * out.stock).epsilon(1e-10));
        CHECK(c.buy_contacts == 1);
        CHECK(c.short_covers == 0);
    }
    SUBCASE("after t0: straight to zero stock") {
        fb.t0 = 0.0;
        fb.buy = {-std::numeric_limits<double>::infinity(),
                  -std::numeric_limits<double>::infinity()};
        PathState s{0.0, -1.2, 0.01, 0.0, 0.0};
        StepCounters c;
        const PathState out = step(s, 1e-3, -30.0, fb, kBase, &c);
        CHECK(out.stock == 0.0);
        CHECK(c.short_covers == 1);
        CHECK(c.buy_contacts == 0);
        CHECK(out.bought > 0.0);  // covering is a purchase
    }
}

TEST_CASE("near-degenerate diffusion gives a deterministic wealth") {
    MarketParams p = kBase;
    p.sigma = 1e-8;
    McConfig cfg;
    cfg.n_paths = 64;
    cfg.n_steps = 100;
    cfg.seed = 1;
    const auto fb = wide_bounds(0.5);
    const auto rep = simulate({-2.0, 1.0}, 0.0, fb, p, cfg);
    CHECK(rep.var_w < 1e-10);
    const double expect = -2.0 * std::exp(p.r * 0.5) + 0.98 * std::exp(p.alpha * 0.5);
    CHECK(rep.mean_w == doctest::Approx(expect).epsilon(1e-3));  // Euler bias only
    CHECK(rep.mean_bought == 0.0);
    CHECK(rep.mean_sold == 0.0);
}

TEST_CASE("simulation on the solved boundaries") {
    const auto& m = market();
    const MVSolution s = solve_target(m, {{-1.0, 1.0}, 1.1});
    McConfig cfg;
    cfg.n_paths = 4000;
    cfg.n_steps = 250;
    cfg.seed = 42;
    const auto rep = simulate(s.post_trade, s.ell_star, m.boundaries(), kBase, cfg);
    CHECK(rep.discarded == 0);
    CHECK(rep.max_conservation_error <= 1e-12);
    CHECK(rep.buy_contacts_after_t0 == 0);
    CHECK(rep.mean_bought >= 0.0);
    CHECK(rep.mean_sold >= 0.0);
    CHECK(rep.fraction_time_on_sell > 0.0);
    CHECK(rep.fraction_time_on_buy > 0.0);
    // coarse-step run still lands in the right neighborhood of the target
    CHECK(std::abs(rep.mean_w - 1.1) < 0.1);

    SUBCASE("deterministic across thread counts and repeated runs") {
        auto again = simulate(s.post_trade, s.ell_star, m.boundaries(), kBase, cfg);
        CHECK(again.mean_w == rep.mean_w);
        CHECK(again.var_w == rep.var_w);
        McConfig single = cfg;
        single.n_threads = 1;
        auto serial = simulate(s.post_trade, s.ell_star, m.boundaries(), kBase, single);
        CHECK(serial.mean_w == rep.mean_w);
        CHECK(serial.var_w == rep.var_w);
    }
    SUBCASE("different seed moves the estimate within noise") {
        McConfig other = cfg;
        other.seed = 43;
        auto rep2 = simulate(s.post_trade, s.ell_star, m.boundaries(), kBase, other);
        CHECK(rep2.mean_w != rep.mean_w);
        CHECK(std::abs(rep2.mean_w - rep.mean_w) < 6.0 * rep.mean_w_ci);
    }
}

TEST_CASE("bad configs are rejected") {
    McConfig cfg;
    cfg.n_paths = 0;
    CHECK_THROWS_AS(simulate({-2.0, 1.0}, 0.0, wide_bounds(), kBase, cfg), ConfigError);
}
