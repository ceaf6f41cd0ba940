#pragma once

#include <vector>

namespace mvtc {

// Sell/buy trading boundaries x_s*(t), x_b*(t) sampled on a time grid.
// The buy boundary stores -infinity where the buy region is empty (t >= t0);
// the IEEE -inf is used as an exact tag, never as an approximate value.
struct FreeBoundaries {
    std::vector<double> t;     // increasing, t.front() = 0, t.back() = T
    std::vector<double> sell;  // x_s*(t_i), finite; sell.back() is the t->T limit
    std::vector<double> buy;   // x_b*(t_i) or -inf
    double t0 = 0.0;           // first time at which the buy region is empty

    double horizon() const { return t.back(); }

    // Piecewise-linear lookup; clamps to the end samples outside [0, T].
    double sell_at(double time) const;
    // Returns -inf whenever either bracketing sample is the empty-region tag.
    double buy_at(double time) const;
};

}  // namespace mvtc
