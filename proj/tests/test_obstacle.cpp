#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "mvtc/errors.hpp"
#include "mvtc/obstacle_pde.hpp"

using namespace mvtc;

namespace {

const MarketParams kBase{0.05, 0.15, 0.2, 0.02, 0.02, 2.0};

SolverConfig reduced() {
    SolverConfig c;
    c.n_z = 400;
    c.n_t = 500;
    return c;
}

// One shared reduced-grid solve for the whole binary.
const ObstacleSolution& solution() {
    static const ObstacleSolution sol = solve_obstacle_adaptive(kBase, reduced());
    return sol;
}

}  // namespace

TEST_CASE("grid construction and validation") {
    const auto st = solve_stationary(kBase);
    const auto g = PdeGrid::make(kBase, st, reduced());
    CHECK(g.z.size() == 401);
    CHECK(g.t.size() == 501);
    CHECK(g.z.front() == doctest::Approx(std::log(-st.sell)).epsilon(1e-13));
    CHECK(g.t.back() == doctest::Approx(2.0));

    PdeGrid bad = g;
    bad.z.front() += 0.1;
    CHECK_THROWS_AS(bad.validate(st), ConfigError);
    SolverConfig tiny;
    tiny.n_z = 4;
    CHECK_THROWS_AS(PdeGrid::make(kBase, st, tiny), ConfigError);
}

TEST_CASE("spatial operator on affine value profiles") {
    // v = x + c maps to u = -e^z + c, and L(x + c) has the closed form
    // (alpha - r) c + sigma^2 c^2 / (x + c); the discrete operator must
    // reproduce it to the truncation order.
    const auto st = solve_stationary(kBase);
    const double s2 = kBase.sigma * kBase.sigma;
    for (double c : {1.0 - kBase.mu, 1.0 + kBase.lambda}) {
        for (int refine : {0, 1}) {
            SolverConfig cfg = reduced();
            cfg.n_z *= (1 + refine);
            const auto g = PdeGrid::make(kBase, st, cfg);
            std::vector<double> u(g.z.size());
            for (std::size_t i = 0; i < u.size(); ++i) u[i] = -std::exp(g.z[i]) + c;
            const auto Lu = spatial_operator(u, g.z, kBase);
            CHECK(std::isnan(Lu.front()));
            CHECK(std::isnan(Lu.back()));
            double worst = 0.0;
            for (std::size_t i = 1; i + 1 < u.size(); ++i) {
                const double x = -std::exp(g.z[i]);
                const double exact = (kBase.alpha - kBase.r) * c + s2 * c * c / (x + c);
                worst = std::max(worst, std::abs(Lu[i] - exact));
            }
            // second-order stencil: halving dz should cut the error ~4x
            CHECK(worst < (refine ? 6e-4 : 2.2e-3));
        }
    }
}

TEST_CASE("spatial operator rejects nonnegative u") {
    std::vector<double> z{0.0, 0.1, 0.2, 0.3};
    std::vector<double> u{-1.0, -1.0, 0.5, -1.0};
    CHECK_THROWS_AS(spatial_operator(u, z, kBase), NumericalError);
}

TEST_CASE("obstacle sandwich and monotonicity of the solved grid") {
    const auto& sol = solution();
    const double slack = 10.0 / sol.penalty_k;
    const int nt = sol.n_time(), nz = sol.n_space();
    double worst_lower = 0.0, worst_upper = 0.0, worst_vt = 0.0;
    for (int k = 0; k < nt; ++k)
        for (int i = 0; i < nz; ++i) {
            const double u = sol.at(k, i);
            worst_lower = std::max(worst_lower, sol.lower_obstacle(sol.grid.z[i]) - u);
            worst_upper = std::max(worst_upper, u - sol.upper_obstacle(sol.grid.z[i]));
            if (k + 1 < nt)
                worst_vt = std::max(worst_vt, (sol.at(k + 1, i) - u) / sol.grid.dt);
        }
    CHECK(worst_lower <= slack);
    CHECK(worst_upper <= slack);
    CHECK(worst_vt <= 1e-6);  // value decays toward maturity
}

TEST_CASE("v_x stays within the gradient cone") {
    const auto& sol = solution();
    const int nt = sol.n_time(), nz = sol.n_space();
    double lo = 1e9, hi = -1e9;
    for (int k = 0; k < nt; ++k)
        for (int i = 1; i + 1 < nz; ++i) {
            const double uz = (sol.at(k, i + 1) - sol.at(k, i - 1)) / (2.0 * sol.grid.dz);
            const double vx = -uz * std::exp(-sol.grid.z[i]);
            lo = std::min(lo, vx);
            hi = std::max(hi, vx);
        }
    // tolerance at the spatial truncation scale dz^2
    CHECK(lo >= -1e-4);
    CHECK(hi <= 1.0 + 1e-4);
}

TEST_CASE("extracted boundaries") {
    const auto& sol = solution();
    const auto& fb = sol.boundaries;
    const double t0_analytic = 2.0 - 0.40005334613699206;
    CHECK(std::abs(fb.t0 - t0_analytic) <= sol.grid.dt + 1e-12);

    // the tag is an exact IEEE -inf, never a large negative float
    for (std::size_t k = 0; k < fb.t.size(); ++k) {
        if (fb.t[k] >= fb.t0) {
            CHECK(std::isinf(fb.buy[k]));
        } else {
            CHECK(std::isfinite(fb.buy[k]));
            CHECK(fb.buy[k] < fb.sell[k]);
        }
        CHECK(std::isfinite(fb.sell[k]));
    }
    // both boundaries nonincreasing in t
    for (std::size_t k = 0; k + 1 < fb.t.size(); ++k) {
        CHECK(fb.sell[k] >= fb.sell[k + 1]);
        if (std::isfinite(fb.buy[k]) && std::isfinite(fb.buy[k + 1]))
            CHECK(fb.buy[k] >= fb.buy[k + 1]);
    }
    // long-horizon end anchored near the stationary levels, terminal end at
    // the known sell limit
    CHECK(fb.sell[0] == doctest::Approx(sol.stationary.sell).epsilon(5e-3));
    CHECK(fb.buy[0] == doctest::Approx(sol.stationary.buy).epsilon(2e-2));
    CHECK(fb.sell.back() == doctest::Approx(-1.372).epsilon(1e-12));
}

TEST_CASE("coarse grid reproduces the boundaries to a few cells") {
    const auto& fine = solution();
    SolverConfig coarse = reduced();
    coarse.n_z /= 2;
    coarse.n_t /= 2;
    const auto sol2 = solve_obstacle_adaptive(kBase, coarse);
    for (double t : {0.0, 0.5, 1.0}) {
        const double cell = std::abs(fine.boundaries.sell_at(t)) * fine.grid.dz;
        CHECK(std::abs(fine.boundaries.sell_at(t) - sol2.boundaries.sell_at(t)) < 4.0 * cell);
    }
}

TEST_CASE("short horizon: the buy region never exists") {
    SolverConfig cfg = reduced();
    cfg.n_t = 100;
    MarketParams p = kBase;
    p.horizon = 0.2;  // below the critical horizon
    const auto sol = solve_obstacle_adaptive(p, cfg);
    CHECK(sol.boundaries.t0 == 0.0);
    for (double b : sol.boundaries.buy) CHECK(std::isinf(b));
}
