#pragma once

#include "mvtc/market.hpp"

namespace mvtc {

// Infinite-horizon trading boundaries, available in closed form through a
// one-parameter family of candidate solutions indexed by k in (1, 2).
struct StationaryBoundaries {
    double a;       // -2 (alpha - r + sigma^2) / sigma^2, always < -2
    double k_star;  // root of F(k) = (1+lambda)/(1-mu) in (1, 2)
    double sell;    // x*_{s,inf} = -a (1-mu) / (a + k*)
    double buy;     // x*_{b,inf} = -a (1+lambda) / (a + k*/(k*-1))
};

// F(k): the fee ratio implied by pasting the stationary solution between two
// candidate boundaries. Three analytic branches switch on the sign of
// Delta_k = (k-1)/k^2 a^2 - (a-1)^2/8; |Delta_k| below 1e-12 (a-1)^2 routes to
// the middle branch, which is the stable limit of the other two.
double stationary_fee_ratio(double k, double a);

// Bracketed root solve of F(k) = (1+lambda)/(1-mu) on (1, 2). Throws
// NumericalError when no bracket exists or when several sign changes are
// detected (all scanned brackets are reported in the message).
StationaryBoundaries solve_stationary(const MarketParams& params);

// Ratio -(alpha - r + sigma^2)/(alpha - r); (1-mu) x_M is the t->T limit of
// the sell boundary.
double merton_ratio(const MarketParams& params);

}  // namespace mvtc
