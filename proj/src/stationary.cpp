#include "mvtc/stationary.hpp"

#include <cmath>
#include <sstream>
#include <vector>

#include "mvtc/errors.hpp"

namespace mvtc {

double stationary_fee_ratio(double k, double a) {
    const double delta = (k - 1.0) / (k * k) * a * a - (a - 1.0) * (a - 1.0) / 8.0;
    const double pre = (a + k / (k - 1.0)) / (a + k);
    // near the double root the two outer branches collapse onto this limit
    if (std::abs(delta) < 1e-12 * (a - 1.0) * (a - 1.0)) {
        const double q = (1.0 - a) / 4.0;
        return pre * std::exp(0.5 * (1.0 / (a / k + q) - 1.0 / ((k - 1.0) * a / k + q)));
    }
    if (delta < 0.0) {
        const double disc = std::sqrt((a - 1.0) * (a - 1.0) - 8.0 * (k - 1.0) * a * a / (k * k));
        const double c1 = (-(a - 1.0) - disc) / 4.0;
        const double c2 = (-(a - 1.0) + disc) / 4.0;
        const double base = ((c1 + (k - 1.0) * a / k) * (c2 + a / k)) /
                            ((c2 + (k - 1.0) * a / k) * (c1 + a / k));
        return pre * std::pow(base, 1.0 / (2.0 * (c2 - c1)));
    }
    const double sq = std::sqrt(2.0 * delta);
    const double arg = (std::atan((k * (a - 1.0) - 4.0 * a) / (2.0 * k * sq)) -
                        std::atan((4.0 * a - k * (3.0 * a + 1.0)) / (2.0 * k * sq))) / sq;
    return pre * std::exp(arg);
}

StationaryBoundaries solve_stationary(const MarketParams& params) {
    const double s2 = params.sigma * params.sigma;
    const double a = -2.0 * (params.excess_return() + s2) / s2;
    const double target = params.fee_ratio();

    // F is complex (returned as NaN) on part of (1,2) and jumps across the
    // Delta_k = 0 point, so a raw sign-change scan picks up one spurious
    // bracket besides the root. Scan consecutive finite samples, bisect every
    // bracket, and keep only the ones that converge to a genuine zero of
    // F - target; exactly one must survive.
    const int n_scan = 2000;
    const double k_lo = 1.0 + 1e-9, k_hi = 2.0 - 1e-9;
    std::vector<std::pair<double, double>> brackets;
    double prev_k = 0.0, prev_f = 0.0;
    bool have_prev = false;
    for (int i = 0; i <= n_scan; ++i) {
        const double k = k_lo + (k_hi - k_lo) * i / n_scan;
        const double f = stationary_fee_ratio(k, a) - target;
        if (!std::isfinite(f)) continue;
        if (have_prev && (prev_f > 0.0) != (f > 0.0)) brackets.emplace_back(prev_k, k);
        prev_k = k;
        prev_f = f;
        have_prev = true;
    }
    if (brackets.empty())
        throw NumericalError("stationary boundary solve: F(k) never crosses the fee ratio on (1,2)");

    std::vector<double> roots;
    for (auto [lo, hi] : brackets) {
        const bool lo_pos = stationary_fee_ratio(lo, a) > target;
        for (int it = 0; it < 200; ++it) {
            const double mid = 0.5 * (lo + hi);
            if ((stationary_fee_ratio(mid, a) > target) == lo_pos)
                lo = mid;
            else
                hi = mid;
        }
        const double k = 0.5 * (lo + hi);
        if (std::abs(stationary_fee_ratio(k, a) - target) <= 1e-9 * target) roots.push_back(k);
    }
    if (roots.empty())
        throw NumericalError("stationary boundary solve: all brackets were discontinuities");
    if (roots.size() > 1) {
        std::ostringstream os;
        os << "stationary boundary solve: multiple roots of F(k) = ratio:";
        for (double k : roots) os << " " << k;
        throw NumericalError(os.str());
    }
    const double k_star = roots[0];

    StationaryBoundaries st;
    st.a = a;
    st.k_star = k_star;
    st.sell = -a * (1.0 - params.mu) / (a + k_star);
    st.buy = -a * (1.0 + params.lambda) / (a + k_star / (k_star - 1.0));
    if (!(st.buy < st.sell && st.sell < 0.0))
        throw NumericalError("stationary boundary solve: boundaries out of order");
    return st;
}

double merton_ratio(const MarketParams& params) {
    const double s2 = params.sigma * params.sigma;
    return -(params.excess_return() + s2) / params.excess_return();
}

}  // namespace mvtc
