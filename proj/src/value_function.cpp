#include "mvtc/value_function.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mvtc {

namespace {

// Integrand of the sell/buy exponent ODEs: c = 1-mu along the sell boundary,
// c = 1+lambda along the buy boundary. The boundary ratio -inf gives the
// all-bond limit r.
double exponent_rate(double boundary, double c, const MarketParams& p) {
    if (!std::isfinite(boundary)) return p.r;
    const double s2 = p.sigma * p.sigma;
    const double num = p.r * boundary * boundary + (p.alpha + p.r) * c * boundary +
                       (p.alpha + 0.5 * s2) * c * c;
    const double den = (boundary + c) * (boundary + c);
    return num / den;
}

}  // namespace

ValueFunction::ValueFunction(std::shared_ptr<const ObstacleSolution> sol) : sol_(std::move(sol)) {
    const ObstacleSolution& s = *sol_;
    const MarketParams& p = s.params;
    const std::size_t nt = s.grid.t.size() - 1;
    const std::size_t n = s.grid.z.size();
    const double dt = s.grid.dt;

    A_.assign(nt + 1, 0.0);
    B_.assign(nt + 1, 0.0);
    for (std::size_t k = nt; k-- > 0;) {
        A_[k] = A_[k + 1] + dt * 0.5 * (exponent_rate(s.boundaries.sell[k], 1.0 - p.mu, p) +
                                        exponent_rate(s.boundaries.sell[k + 1], 1.0 - p.mu, p));
        B_[k] = B_[k + 1] + dt * 0.5 * (exponent_rate(s.boundaries.buy[k], 1.0 + p.lambda, p) +
                                        exponent_rate(s.boundaries.buy[k + 1], 1.0 + p.lambda, p));
    }

    // w(t, z) by quadrature of w_z = -e^z / u, anchored on the sell side where
    // w = A(t) + ln(-ratio - (1-mu)) holds in closed form.
    w_.assign((nt + 1) * n, 0.0);
    for (std::size_t k = 0; k <= nt; ++k) {
        double* row = &w_[k * n];
        row[0] = A_[k] + std::log(std::exp(s.grid.z[0]) - (1.0 - p.mu));
        double f_prev = -std::exp(s.grid.z[0]) / s.at(static_cast<int>(k), 0);
        for (std::size_t i = 1; i < n; ++i) {
            const double f = -std::exp(s.grid.z[i]) / s.at(static_cast<int>(k), static_cast<int>(i));
            row[i] = row[i - 1] + s.grid.dz * 0.5 * (f_prev + f);
            f_prev = f;
        }
    }
}

int ValueFunction::time_cell(double t, double* theta) const {
    const std::vector<double>& tt = sol_->grid.t;
    if (t <= tt.front()) {
        *theta = 0.0;
        return 0;
    }
    if (t >= tt.back()) {
        *theta = 1.0;
        return static_cast<int>(tt.size()) - 2;
    }
    const auto it = std::upper_bound(tt.begin(), tt.end(), t);
    const int k = static_cast<int>(it - tt.begin()) - 1;
    *theta = (t - tt[k]) / (tt[k + 1] - tt[k]);
    return k;
}

double ValueFunction::table_at(const std::vector<double>& tab, double t) const {
    double theta = 0.0;
    const int k = time_cell(t, &theta);
    return (1.0 - theta) * tab[k] + theta * tab[k + 1];
}

double ValueFunction::A(double t) const { return table_at(A_, t); }
double ValueFunction::B(double t) const { return table_at(B_, t); }

double ValueFunction::w_slice(int k, double ratio) const {
    const ObstacleSolution& s = *sol_;
    const MarketParams& p = s.params;
    const std::size_t n = s.grid.z.size();
    if (ratio >= s.boundaries.sell[k])
        return A_[k] + std::log(-ratio - (1.0 - p.mu));
    const double zz = std::log(-ratio);
    if (zz >= s.grid.z.back()) {
        // deep-buy continuation: w - ln(-ratio - (1+lambda)) is constant there
        const double anchor = w_[k * n + (n - 1)];
        return anchor +
               std::log((-ratio - (1.0 + p.lambda)) /
                        (std::exp(s.grid.z.back()) - (1.0 + p.lambda)));
    }
    int i = static_cast<int>((zz - s.grid.z.front()) / s.grid.dz);
    i = std::clamp(i, 0, static_cast<int>(n) - 2);
    const double th = (zz - s.grid.z[i]) / s.grid.dz;
    return (1.0 - th) * w_[k * n + i] + th * w_[k * n + i + 1];
}

double ValueFunction::v_slice(int k, double ratio) const {
    const ObstacleSolution& s = *sol_;
    const MarketParams& p = s.params;
    if (ratio >= s.boundaries.sell[k]) return ratio + 1.0 - p.mu;
    const double zz = std::log(-ratio);
    if (zz >= s.grid.z.back()) return ratio + 1.0 + p.lambda;
    int i = static_cast<int>((zz - s.grid.z.front()) / s.grid.dz);
    i = std::clamp(i, 0, static_cast<int>(s.grid.z.size()) - 2);
    const double th = (zz - s.grid.z[i]) / s.grid.dz;
    return (1.0 - th) * s.at(k, i) + th * s.at(k, i + 1);
}

double ValueFunction::w(double t, double ratio) const {
    if (!(ratio < -(1.0 - sol_->params.mu)))
        throw std::domain_error("w(t, ratio) needs ratio < -(1-mu)");
    double theta = 0.0;
    const int k = time_cell(t, &theta);
    return (1.0 - theta) * w_slice(k, ratio) + theta * w_slice(k + 1, ratio);
}

double ValueFunction::ratio_value(double t, double ratio) const {
    if (!(ratio < -(1.0 - sol_->params.mu)))
        throw std::domain_error("ratio_value(t, ratio) needs ratio < -(1-mu)");
    double theta = 0.0;
    const int k = time_cell(t, &theta);
    return (1.0 - theta) * v_slice(k, ratio) + theta * v_slice(k + 1, ratio);
}

double ValueFunction::value(double t, const Position& p) const {
    const MarketParams& mp = sol_->params;
    if (net_wealth(p, mp) >= 0.0) return 0.0;
    if (p.stock > 0.0) {
        const double ww = w(t, p.bond / p.stock);
        return p.stock * p.stock * std::exp(2.0 * ww);
    }
    const double c = p.bond + (1.0 + mp.lambda) * p.stock;
    return std::exp(2.0 * B(t)) * c * c;
}

double ValueFunction::value_x(double t, const Position& p) const {
    const MarketParams& mp = sol_->params;
    if (net_wealth(p, mp) >= 0.0) return 0.0;
    if (p.stock > 0.0) {
        const double ratio = p.bond / p.stock;
        return 2.0 * p.stock * std::exp(2.0 * w(t, ratio)) / ratio_value(t, ratio);
    }
    return 2.0 * std::exp(2.0 * B(t)) * (p.bond + (1.0 + mp.lambda) * p.stock);
}

}  // namespace mvtc
