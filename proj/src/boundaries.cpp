#include "mvtc/boundaries.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mvtc {

namespace {

// Index of the grid cell containing `time`, with theta in [0, 1] inside it.
std::size_t locate(const std::vector<double>& t, double time, double* theta) {
    if (time <= t.front()) {
        *theta = 0.0;
        return 0;
    }
    if (time >= t.back()) {
        *theta = 1.0;
        return t.size() - 2;
    }
    const auto it = std::upper_bound(t.begin(), t.end(), time);
    const std::size_t i = static_cast<std::size_t>(it - t.begin()) - 1;
    *theta = (time - t[i]) / (t[i + 1] - t[i]);
    return i;
}

}  // namespace

double FreeBoundaries::sell_at(double time) const {
    double theta = 0.0;
    const std::size_t i = locate(t, time, &theta);
    return (1.0 - theta) * sell[i] + theta * sell[i + 1];
}

double FreeBoundaries::buy_at(double time) const {
    double theta = 0.0;
    const std::size_t i = locate(t, time, &theta);
    const double a = buy[i], b = buy[i + 1];
    if (theta == 0.0) return a;
    if (theta == 1.0) return b;
    if (std::isinf(a) || std::isinf(b)) return -std::numeric_limits<double>::infinity();
    return (1.0 - theta) * a + theta * b;
}

}  // namespace mvtc
