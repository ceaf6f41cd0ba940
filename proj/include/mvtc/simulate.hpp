#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mvtc/boundaries.hpp"
#include "mvtc/market.hpp"

namespace mvtc {

struct McConfig {
    long n_paths = 100000;
    int n_steps = 2000;
    std::uint64_t seed = 0;
    int n_threads = 0;        // 0 = hardware concurrency
    int trace_paths = 0;      // export the first k paths when > 0
    std::string trace_dir;    // destination for path_<i>.csv traces
};

// One path of the reflected bond/stock diffusion. M and N are the cumulative
// dollars of stock bought / sold; both only ever increase.
struct PathState {
    double t = 0.0;
    double bond = 0.0;   // X, adjusted bond dollars
    double stock = 0.0;  // Y
    double bought = 0.0; // M
    double sold = 0.0;   // N
};

// Per-step diagnostics accumulated across a path.
struct StepCounters {
    long sell_contacts = 0;
    long buy_contacts = 0;              // ratio-boundary contacts only
    long buy_contacts_after_t0 = 0;     // should stay zero
    long short_covers = 0;              // Y <= 0 handled after t0
    long corner_events = 0;             // both boundaries violated in one step
    double max_conservation_error = 0.0; // relative, per projection
};

struct SimulationReport {
    long n_paths = 0;
    int n_steps = 0;
    double mean_w = 0.0;
    double mean_w_ci = 0.0;  // 95% normal half-width
    double var_w = 0.0;
    double var_w_ci = 0.0;
    double mean_bought = 0.0;
    double mean_sold = 0.0;
    double fraction_time_on_sell = 0.0;
    double fraction_time_on_buy = 0.0;
    long buy_contacts_after_t0 = 0;
    long short_covers = 0;
    long corner_events = 0;
    long discarded = 0;
    double max_conservation_error = 0.0;
};

// One Euler step followed by oblique projection back into closure(NT).
// Projections conserve x+(1+lambda)y (buy) or x+(1-mu)y (sell) exactly up to
// rounding; a corner is resolved sell-then-buy and counted.
PathState step(const PathState& state, double dt, double dw, const FreeBoundaries& bounds,
               const MarketParams& params, StepCounters* counters);

// n_paths independent paths from the post-trade position; terminal wealth per
// path is net_wealth(X(T), Y(T)) + ell_star. Throws NumericalError when more
// than 0.1% of paths go non-finite. The reduction order is fixed (per-block,
// block index order) so results are bit-stable across thread counts.
SimulationReport simulate(const Position& post_trade, double ell_star,
                          const FreeBoundaries& bounds, const MarketParams& params,
                          const McConfig& cfg);

}  // namespace mvtc
