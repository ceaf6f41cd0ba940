#pragma once

#include <cmath>
#include <string>

#include "mvtc/boundaries.hpp"

namespace mvtc {

// Market, cost and horizon constants. Rates are per year, sigma per sqrt(year).
struct MarketParams {
    double r;        // risk-free rate, > 0
    double alpha;    // stock drift, > r
    double sigma;    // stock volatility, > 0
    double lambda;   // proportional fee paid when buying, >= 0
    double mu;       // proportional fee paid when selling, in [0, 1)
    double horizon;  // terminal time T in years, > 0

    double excess_return() const { return alpha - r; }
    double fee_ratio() const { return (1.0 + lambda) / (1.0 - mu); }

    // Throws ConfigError if any standing assumption is violated.
    void validate() const;
};

// Bond/stock dollar position.
struct Position {
    double bond;   // x
    double stock;  // y
};

// A dollar amount that may be +infinity (kept as an explicit tag so interval
// comparisons never mix IEEE infinities into arithmetic).
struct Amount {
    double value = 0.0;
    bool is_infinite = false;

    static Amount finite(double v) { return {v, false}; }
    static Amount infinite() { return {0.0, true}; }
};

// Admissible target interval for the expected terminal wealth. The lower bound
// is always exclusive; the upper bound is +inf (open) or finite with a
// closed/open flag.
struct TargetInterval {
    bool empty = true;
    double lower = 0.0;
    Amount upper;
    bool upper_closed = false;

    bool contains(double z) const;
    // Strict interior: excludes the upper bound even when it is attainable.
    bool interior_contains(double z) const;
    std::string describe() const;
};

struct FeasibilityReport {
    double t_star = 0.0;  // critical horizon in years
    Amount z_sup;         // supremum expected terminal wealth
    TargetInterval targets;
};

enum class Region { Sell, Buy, NoTrade, Solvent };

// Liquidation value x + (1-mu) y^+ - (1+lambda) y^-.
double net_wealth(const Position& p, const MarketParams& params);

// T* = ln((1+lambda)/(1-mu)) / (alpha - r).
double critical_horizon(const MarketParams& params);

// Supremum of the attainable expected terminal wealth from (x, y).
Amount z_hat(const Position& p, const MarketParams& params);

// The solvability interval for the target mean, three cases depending on
// whether the horizon exceeds the critical one and on the sign of the stock
// holding. The finite upper bound, when present, is attained by the stay-put
// strategy and is flagged closed.
FeasibilityReport feasible_targets(const Position& p, const MarketParams& params);

// Region of (t, x, y) relative to the trading boundaries. Positions with
// nonnegative net wealth are Solvent; the boundary lines themselves belong to
// the trade regions. Throws std::domain_error for t outside [0, T).
Region classify_region(double t, const Position& p, const FreeBoundaries& bounds,
                       const MarketParams& params);

const char* region_name(Region r);

}  // namespace mvtc
