#include "mvtc/market.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "mvtc/errors.hpp"

namespace mvtc {

void MarketParams::validate() const {
    std::ostringstream bad;
    if (!(r > 0.0)) bad << "r must be positive (got " << r << "); ";
    if (!(alpha > r)) bad << "alpha must exceed r (got alpha=" << alpha << ", r=" << r << "); ";
    if (!(sigma > 0.0)) bad << "sigma must be positive (got " << sigma << "); ";
    if (!(lambda >= 0.0)) bad << "lambda must be nonnegative (got " << lambda << "); ";
    if (!(mu >= 0.0 && mu < 1.0)) bad << "mu must lie in [0,1) (got " << mu << "); ";
    if (lambda == 0.0 && mu == 0.0)
        bad << "lambda and mu cannot both be zero (frictionless case is out of scope); ";
    if (!(horizon > 0.0)) bad << "horizon must be positive (got " << horizon << "); ";
    const std::string msg = bad.str();
    if (!msg.empty()) throw ConfigError("invalid market parameters: " + msg);
}

bool TargetInterval::contains(double z) const {
    if (empty || !(z > lower)) return false;
    if (upper.is_infinite) return true;
    return upper_closed ? z <= upper.value : z < upper.value;
}

bool TargetInterval::interior_contains(double z) const {
    if (empty || !(z > lower)) return false;
    return upper.is_infinite || z < upper.value;
}

std::string TargetInterval::describe() const {
    if (empty) return "empty";
    std::ostringstream os;
    os << "(" << lower << ", ";
    if (upper.is_infinite)
        os << "inf)";
    else
        os << upper.value << (upper_closed ? "]" : ")");
    return os.str();
}

double net_wealth(const Position& p, const MarketParams& params) {
    const double pos = p.stock > 0.0 ? p.stock : 0.0;
    const double neg = p.stock < 0.0 ? -p.stock : 0.0;
    return p.bond + (1.0 - params.mu) * pos - (1.0 + params.lambda) * neg;
}

double critical_horizon(const MarketParams& params) {
    return std::log(params.fee_ratio()) / params.excess_return();
}

Amount z_hat(const Position& p, const MarketParams& params) {
    const double T = params.horizon;
    if (T > critical_horizon(params)) return Amount::infinite();
    if (p.stock > 0.0)
        return Amount::finite(std::exp(params.r * T) * p.bond +
                              (1.0 - params.mu) * std::exp(params.alpha * T) * p.stock);
    return Amount::finite(std::exp(params.r * T) * (p.bond + (1.0 + params.lambda) * p.stock));
}

FeasibilityReport feasible_targets(const Position& p, const MarketParams& params) {
    FeasibilityReport rep;
    rep.t_star = critical_horizon(params);
    rep.z_sup = z_hat(p, params);
    const double lower = std::exp(params.r * params.horizon) * net_wealth(p, params);
    if (rep.z_sup.is_infinite) {
        rep.targets = {false, lower, Amount::infinite(), false};
    } else if (p.stock > 0.0) {
        // the supremum itself is reached by never trading
        rep.targets = {false, lower, rep.z_sup, true};
    } else {
        rep.targets.empty = true;
    }
    return rep;
}

Region classify_region(double t, const Position& p, const FreeBoundaries& bounds,
                       const MarketParams& params) {
    if (!(t >= 0.0 && t < bounds.horizon()))
        throw std::domain_error("region classification needs t in [0, T)");
    if (net_wealth(p, params) >= 0.0) return Region::Solvent;
    if (p.stock <= 0.0) return Region::Buy;
    const double ratio = p.bond / p.stock;
    if (ratio >= bounds.sell_at(t)) return Region::Sell;
    const double xb = bounds.buy_at(t);
    if (std::isfinite(xb) && ratio <= xb) return Region::Buy;
    return Region::NoTrade;
}

const char* region_name(Region r) {
    switch (r) {
        case Region::Sell: return "sell";
        case Region::Buy: return "buy";
        case Region::NoTrade: return "no-trade";
        case Region::Solvent: return "solvent";
    }
    return "?";
}

}  // namespace mvtc
