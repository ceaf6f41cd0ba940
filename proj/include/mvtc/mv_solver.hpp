#pragma once

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "mvtc/market.hpp"
#include "mvtc/obstacle_pde.hpp"
#include "mvtc/value_function.hpp"

namespace mvtc {

struct TargetSpec {
    Position initial;
    double target_mean;  // z, target expected terminal net wealth
};

struct MVSolution {
    double ell_star = 0.0;        // Lagrange multiplier
    Position adjusted{};          // (x - ell* e^{-rT}, y)
    Position post_trade{};        // after the time-0 jump to closure(NT)
    double initial_trade = 0.0;   // stock dollars bought at 0 (negative = sold)
    double variance = 0.0;        // minimal Var(W(T)); NaN when stay_put
    double value_at_adjusted = 0.0;  // V(0, adjusted)
    bool stay_put = false;
    double bracket_width = 0.0;   // final multiplier bracket, diagnostic
};

// Target-independent artifacts shared across all z: stationary boundaries,
// obstacle solution and value function.
struct SolvedMarket {
    MarketParams params;
    StationaryBoundaries stationary;
    std::shared_ptr<const ObstacleSolution> obstacle;
    std::shared_ptr<const ValueFunction> vf;

    static SolvedMarket build(const MarketParams& params, const SolverConfig& cfg);
    const FreeBoundaries& boundaries() const { return obstacle->boundaries; }
};

// f(ell) = e^{-rT} V_x(0, x - ell e^{-rT}, y) + 2 ell; increasing, the
// multiplier solves f(ell) = 2z.
double lagrange_f(const SolvedMarket& m, const Position& initial, double ell);

// Bracketed bisection for the multiplier. Requires z strictly inside the
// solvable interval; throws FeasibilityError otherwise and NumericalError if
// no bracket is found or f fails the monotonicity spot check.
double solve_multiplier(const SolvedMarket& m, const TargetSpec& spec,
                        double tol_z = 1e-8, double* bracket_width = nullptr);

// Time-t0 jump onto closure(NT): oblique projection along the transaction
// directions. Returns the post-trade position and the signed stock purchase.
std::pair<Position, double> initial_trade(double t0, const Position& adjusted,
                                          const FreeBoundaries& bounds,
                                          const MarketParams& params);

// Full pipeline for one target over prebuilt artifacts.
MVSolution solve_target(const SolvedMarket& m, const TargetSpec& spec);

// Convenience: builds the artifacts and solves a single target.
MVSolution solve(const TargetSpec& spec, const MarketParams& params, const SolverConfig& cfg);

struct FrontierPoint {
    double target_mean = 0.0;
    double variance = 0.0;
    bool ok = false;
    std::string error;
};

// Variance along a list of targets; the PDE artifacts are solved once and
// shared. Per-target feasibility failures are collected, not fatal.
std::vector<FrontierPoint> efficient_frontier(const SolvedMarket& m, const Position& initial,
                                              const std::vector<double>& targets);

}  // namespace mvtc
