#include "mvtc/mv_solver.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "mvtc/errors.hpp"

namespace mvtc {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
}

SolvedMarket SolvedMarket::build(const MarketParams& params, const SolverConfig& cfg) {
    params.validate();
    SolvedMarket m;
    m.params = params;
    m.stationary = solve_stationary(params);
    m.obstacle = std::make_shared<const ObstacleSolution>(solve_obstacle_adaptive(params, cfg));
    m.vf = std::make_shared<const ValueFunction>(m.obstacle);
    return m;
}

double lagrange_f(const SolvedMarket& m, const Position& initial, double ell) {
    const double disc = std::exp(-m.params.r * m.params.horizon);
    return disc * m.vf->value_x(0.0, {initial.bond - ell * disc, initial.stock}) + 2.0 * ell;
}

double solve_multiplier(const SolvedMarket& m, const TargetSpec& spec, double tol_z,
                        double* bracket_width) {
    const double z = spec.target_mean;
    // f(ell) <= 2 ell since V_x <= 0, so ell = z is always a left bracket
    double lo = z;
    double f_lo = lagrange_f(m, spec.initial, lo);
    if (f_lo > 2.0 * z + tol_z)
        throw NumericalError("multiplier solve: left bracket failed (V_x > 0?)");
    double hi = lo;
    double f_hi = f_lo;
    for (int it = 0; f_hi < 2.0 * z; ++it) {
        if (it > 200)
            throw NumericalError("multiplier solve: no upper bracket after 200 doublings");
        hi = std::max(2.0 * hi, 1.0);
        f_hi = lagrange_f(m, spec.initial, hi);
    }

    // spot-check monotonicity across the bracket before trusting bisection
    double prev = f_lo;
    const double slack = 1e-9 * (std::abs(f_lo) + std::abs(f_hi) + 1.0);
    for (int i = 1; i <= 100; ++i) {
        const double f = lagrange_f(m, spec.initial, lo + (hi - lo) * i / 100.0);
        if (f < prev - slack) {
            std::ostringstream os;
            os << "multiplier solve: f not monotone near ell = " << lo + (hi - lo) * i / 100.0;
            throw NumericalError(os.str());
        }
        prev = f;
    }

    for (int it = 0; it < 200 && hi - lo > tol_z * std::max(1.0, std::abs(z)); ++it) {
        const double mid = 0.5 * (lo + hi);
        if (lagrange_f(m, spec.initial, mid) < 2.0 * z)
            lo = mid;
        else
            hi = mid;
    }
    if (bracket_width) *bracket_width = hi - lo;
    return 0.5 * (lo + hi);
}

std::pair<Position, double> initial_trade(double t0, const Position& adjusted,
                                          const FreeBoundaries& bounds,
                                          const MarketParams& params) {
    const Region region = classify_region(t0, adjusted, bounds, params);
    if (region == Region::NoTrade || region == Region::Solvent) return {adjusted, 0.0};
    if (region == Region::Sell) {
        const double xs = bounds.sell_at(t0);
        const double c = adjusted.bond + (1.0 - params.mu) * adjusted.stock;
        const double y_post = c / (xs + 1.0 - params.mu);
        return {{xs * y_post, y_post}, y_post - adjusted.stock};
    }
    const double xb = bounds.buy_at(t0);
    if (!std::isfinite(xb))
        throw NumericalError("initial trade: buy projection requested but the buy region is empty");
    const double c = adjusted.bond + (1.0 + params.lambda) * adjusted.stock;
    const double y_post = c / (xb + 1.0 + params.lambda);
    return {{xb * y_post, y_post}, y_post - adjusted.stock};
}

MVSolution solve_target(const SolvedMarket& m, const TargetSpec& spec) {
    const FeasibilityReport rep = feasible_targets(spec.initial, m.params);
    const double z = spec.target_mean;
    if (!rep.targets.contains(z)) {
        std::ostringstream os;
        os << "target mean " << z << " outside the solvable interval " << rep.targets.describe();
        throw FeasibilityError(os.str());
    }

    MVSolution sol;
    if (!rep.targets.interior_contains(z)) {
        // the supremum itself: the only feasible strategy never trades, and
        // the multiplier/variance machinery does not apply at the corner
        sol.stay_put = true;
        sol.adjusted = spec.initial;
        sol.post_trade = spec.initial;
        sol.variance = kNaN;
        sol.value_at_adjusted = kNaN;
        return sol;
    }

    sol.ell_star = solve_multiplier(m, spec, 1e-10, &sol.bracket_width);
    const double disc = std::exp(-m.params.r * m.params.horizon);
    sol.adjusted = {spec.initial.bond - sol.ell_star * disc, spec.initial.stock};
    auto [post, trade] = initial_trade(0.0, sol.adjusted, m.boundaries(), m.params);
    sol.post_trade = post;
    sol.initial_trade = trade;
    sol.value_at_adjusted = m.vf->value(0.0, sol.adjusted);
    sol.variance = sol.value_at_adjusted - (sol.ell_star - z) * (sol.ell_star - z);
    if (sol.variance < 0.0) {
        if (sol.variance < -1e-6 * std::max(1.0, z * z))
            throw NumericalError("negative variance from the multiplier identity");
        sol.variance = 0.0;
    }
    return sol;
}

MVSolution solve(const TargetSpec& spec, const MarketParams& params, const SolverConfig& cfg) {
    return solve_target(SolvedMarket::build(params, cfg), spec);
}

std::vector<FrontierPoint> efficient_frontier(const SolvedMarket& m, const Position& initial,
                                              const std::vector<double>& targets) {
    std::vector<FrontierPoint> out;
    out.reserve(targets.size());
    for (double z : targets) {
        FrontierPoint pt;
        pt.target_mean = z;
        try {
            const MVSolution s = solve_target(m, {initial, z});
            pt.variance = s.variance;
            pt.ok = !s.stay_put;
            if (s.stay_put) pt.error = "stay-put corner, variance undefined";
        } catch (const FeasibilityError& e) {
            pt.error = e.what();
        }
        out.push_back(pt);
    }
    return out;
}

}  // namespace mvtc
