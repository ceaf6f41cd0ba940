#include "mvtc/obstacle_pde.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "mvtc/errors.hpp"
#include "mvtc/market.hpp"

namespace mvtc {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Thomas solve of a tridiagonal system; overwrites rhs with the solution.
void solve_tridiag(std::vector<double>& dl, std::vector<double>& d, std::vector<double>& du,
                   std::vector<double>& rhs) {
    const std::size_t n = d.size();
    for (std::size_t i = 1; i < n; ++i) {
        const double m = dl[i] / d[i - 1];
        d[i] -= m * du[i - 1];
        rhs[i] -= m * rhs[i - 1];
    }
    rhs[n - 1] /= d[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) rhs[i] = (rhs[i] - du[i] * rhs[i + 1]) / d[i];
}

struct Scheme {
    const MarketParams& params;
    const PdeGrid& grid;
    std::vector<double> ez, lower, upper;
    double s2, ex, t0_analytic, penalty_k;

    Scheme(const MarketParams& p, const PdeGrid& g, double K)
        : params(p), grid(g), penalty_k(K) {
        s2 = p.sigma * p.sigma;
        ex = p.excess_return();
        t0_analytic = std::max(p.horizon - critical_horizon(p), 0.0);
        const std::size_t n = g.z.size();
        ez.resize(n);
        lower.resize(n);
        upper.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            ez[i] = std::exp(g.z[i]);
            lower[i] = -ez[i] + 1.0 - p.mu;
            upper[i] = -ez[i] + 1.0 + p.lambda;
        }
    }

    // Residual of the implicit penalty step at every node; BC rows are zeroed.
    // clamp_right selects the Dirichlet clamp to the upper obstacle (buy
    // region alive) versus the asymptotic-slope ghost condition u_z = -e^z.
    void residual(const std::vector<double>& u, const std::vector<double>& u_next, double dt,
                  bool clamp_right, std::vector<double>* out) const {
        const std::size_t n = u.size();
        const double dz = grid.dz;
        std::vector<double>& g = *out;
        g.assign(n, 0.0);
        for (std::size_t i = 1; i + 1 < n; ++i) {
            const double uz = (u[i + 1] - u[i - 1]) / (2.0 * dz);
            const double uzz = (u[i + 1] - 2.0 * u[i] + u[i - 1]) / (dz * dz);
            const double L = 0.5 * s2 * uzz - (ex + 0.5 * s2) * uz + (ex + s2) * u[i] -
                             s2 * (uz * uz / u[i] + 2.0 * ez[i] * uz / u[i] - 2.0 * ez[i]);
            g[i] = (u[i] - u_next[i]) / dt - L +
                   penalty_k * std::max(u[i] - upper[i], 0.0) -
                   penalty_k * std::max(lower[i] - u[i], 0.0);
        }
        if (!clamp_right) {
            const std::size_t j = n - 1;
            const double uz = -ez[j];
            const double uzz = (2.0 * u[j - 1] - 2.0 * dz * ez[j] - 2.0 * u[j]) / (dz * dz);
            const double L = 0.5 * s2 * uzz - (ex + 0.5 * s2) * uz + (ex + s2) * u[j] -
                             s2 * (uz * uz / u[j] + 2.0 * ez[j] * uz / u[j] - 2.0 * ez[j]);
            g[j] = (u[j] - u_next[j]) / dt - L +
                   penalty_k * std::max(u[j] - upper[j], 0.0) -
                   penalty_k * std::max(lower[j] - u[j], 0.0);
        }
    }

    // Tridiagonal Jacobian of the residual (dl, d, du), BC rows are identity.
    void jacobian(const std::vector<double>& u, double dt, bool clamp_right,
                  std::vector<double>* dl, std::vector<double>* d, std::vector<double>* du) const {
        const std::size_t n = u.size();
        const double dz = grid.dz;
        dl->assign(n, 0.0);
        d->assign(n, 1.0);
        du->assign(n, 0.0);
        for (std::size_t i = 1; i + 1 < n; ++i) {
            const double uz = (u[i + 1] - u[i - 1]) / (2.0 * dz);
            const double dL_du = -s2 / (dz * dz) + (ex + s2) +
                                 s2 * (uz * uz + 2.0 * ez[i] * uz) / (u[i] * u[i]);
            const double dL_dup = 0.5 * s2 / (dz * dz) - (ex + 0.5 * s2) / (2.0 * dz) -
                                  s2 * (2.0 * uz + 2.0 * ez[i]) / (2.0 * dz * u[i]);
            const double dL_dum = 0.5 * s2 / (dz * dz) + (ex + 0.5 * s2) / (2.0 * dz) +
                                  s2 * (2.0 * uz + 2.0 * ez[i]) / (2.0 * dz * u[i]);
            const double pen =
                penalty_k * ((u[i] > upper[i] ? 1.0 : 0.0) + (u[i] < lower[i] ? 1.0 : 0.0));
            (*d)[i] = 1.0 / dt - dL_du + pen;
            (*du)[i] = -dL_dup;
            (*dl)[i] = -dL_dum;
        }
        if (!clamp_right) {
            const std::size_t j = n - 1;
            const double uz = -ez[j];
            const double dL_du = -s2 / (dz * dz) + (ex + s2) +
                                 s2 * (uz * uz + 2.0 * ez[j] * uz) / (u[j] * u[j]);
            const double dL_dum = s2 / (dz * dz);
            const double pen =
                penalty_k * ((u[j] > upper[j] ? 1.0 : 0.0) + (u[j] < lower[j] ? 1.0 : 0.0));
            (*d)[j] = 1.0 / dt - dL_du + pen;
            (*dl)[j] = -dL_dum;
        }
    }
};

double max_abs(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

}  // namespace

PdeGrid PdeGrid::make(const MarketParams& params, const StationaryBoundaries& st,
                      const SolverConfig& cfg) {
    PdeGrid g;
    const double z_min = std::log(-st.sell);
    const double z_max = std::log(cfg.z_max_factor * std::abs(st.buy));
    g.z.resize(cfg.n_z + 1);
    g.dz = (z_max - z_min) / cfg.n_z;
    for (int i = 0; i <= cfg.n_z; ++i) g.z[i] = z_min + g.dz * i;
    g.t.resize(cfg.n_t + 1);
    g.dt = params.horizon / cfg.n_t;
    for (int k = 0; k <= cfg.n_t; ++k) g.t[k] = g.dt * k;
    g.t.back() = params.horizon;
    g.validate(st);
    return g;
}

void PdeGrid::validate(const StationaryBoundaries& st) const {
    if (z.size() < 16 || t.size() < 16)
        throw ConfigError("pde grid: need at least 16 nodes in each direction");
    if (!(dz > 0.0 && dt > 0.0)) throw ConfigError("pde grid: nonpositive spacing");
    if (std::abs(z.front() - std::log(-st.sell)) > 1e-12)
        throw ConfigError("pde grid: left edge must sit on the stationary sell boundary");
    if (std::exp(z.back()) < 4.0 * std::abs(st.buy))
        throw ConfigError("pde grid: right edge too close to the stationary buy boundary");
}

std::vector<double> spatial_operator(std::span<const double> u_row,
                                     std::span<const double> z_nodes,
                                     const MarketParams& params) {
    const std::size_t n = u_row.size();
    if (n != z_nodes.size() || n < 3)
        throw NumericalError("spatial operator: bad row size");
    for (double v : u_row)
        if (!(v < -1e-12))
            throw NumericalError("spatial operator: u must be strictly negative");
    const double dz = z_nodes[1] - z_nodes[0];
    const double s2 = params.sigma * params.sigma;
    const double ex = params.excess_return();
    std::vector<double> out(n, std::numeric_limits<double>::quiet_NaN());
    for (std::size_t i = 1; i + 1 < n; ++i) {
        const double uz = (u_row[i + 1] - u_row[i - 1]) / (2.0 * dz);
        const double uzz = (u_row[i + 1] - 2.0 * u_row[i] + u_row[i - 1]) / (dz * dz);
        const double e = std::exp(z_nodes[i]);
        out[i] = 0.5 * s2 * uzz - (ex + 0.5 * s2) * uz + (ex + s2) * u_row[i] -
                 s2 * (uz * uz / u_row[i] + 2.0 * e * uz / u_row[i] - 2.0 * e);
    }
    return out;
}

FreeBoundaries extract_boundaries(const MarketParams& params, const PdeGrid& grid,
                                  const std::vector<double>& u, double tol,
                                  std::vector<std::string>* diagnostics) {
    const std::size_t n = grid.z.size();
    const std::size_t nt = grid.t.size() - 1;
    FreeBoundaries fb;
    fb.t = grid.t;
    fb.sell.assign(nt + 1, 0.0);
    fb.buy.assign(nt + 1, kNegInf);

    std::vector<double> lower(n), upper(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double e = std::exp(grid.z[i]);
        lower[i] = -e + 1.0 - params.mu;
        upper[i] = -e + 1.0 + params.lambda;
    }

    for (std::size_t k = 0; k < nt; ++k) {
        const double* row = &u[k * n];
        // sell: leftmost departure of u from the lower obstacle
        std::size_t i = 0;
        while (i < n && row[i] - lower[i] <= tol) ++i;
        if (i == 0) {
            fb.sell[k] = -std::exp(grid.z.front());
        } else if (i == n) {
            fb.sell[k] = -std::exp(grid.z.back());
            if (diagnostics)
                diagnostics->push_back("slice " + std::to_string(k) +
                                       ": entire row glued to the lower obstacle");
        } else {
            // the gap grows quadratically off the contact set, so sqrt(gap)
            // is linear; extrapolate it to zero from two detached nodes
            const double d1 = row[i] - lower[i];
            const double d2 = i + 1 < n ? row[i + 1] - lower[i + 1] : 0.0;
            double zs;
            if (d2 > d1) {
                zs = grid.z[i] - grid.dz * std::sqrt(d1) / (std::sqrt(d2) - std::sqrt(d1));
                zs = std::max(zs, grid.z[i - 1]);
            } else {
                const double d0 = row[i - 1] - lower[i - 1];
                zs = grid.z[i - 1] + grid.dz * (tol - d0) / (d1 - d0);
            }
            fb.sell[k] = -std::exp(zs);
        }
        // buy: inner edge of the upper-contact block touching the right end;
        // the clamped edge node itself does not count as evidence
        std::size_t jb = n;  // first in-contact index of the block
        std::size_t j = n - 2;
        while (j > 0 && upper[j] - row[j] <= tol) jb = j--;
        if (jb < n && jb > 1) {
            const double d1 = upper[jb - 1] - row[jb - 1];
            const double d2 = jb > 2 ? upper[jb - 2] - row[jb - 2] : 0.0;
            double zb;
            if (d2 > d1) {
                zb = grid.z[jb - 1] + grid.dz * std::sqrt(d1) / (std::sqrt(d2) - std::sqrt(d1));
                zb = std::min(zb, grid.z[jb]);
            } else {
                const double d0 = upper[jb] - row[jb];
                zb = grid.z[jb - 1] + grid.dz * (d1 - tol) / (d1 - d0);
            }
            fb.buy[k] = -std::exp(zb);
        } else if (jb < n) {
            fb.buy[k] = -std::exp(grid.z[jb]);
        }
    }
    // terminal slice: known limits, not extractable from the glued terminal row
    fb.sell[nt] = (1.0 - params.mu) * merton_ratio(params);
    fb.buy[nt] = kNegInf;

    // boundaries decrease in t; clamp sub-cell extraction jitter
    const double jitter = std::exp(grid.z.back()) * 1e-9;
    for (std::size_t k = nt; k-- > 0;) {
        if (fb.sell[k] < fb.sell[k + 1]) {
            if (diagnostics && fb.sell[k + 1] - fb.sell[k] > jitter)
                diagnostics->push_back("sell boundary not monotone at slice " + std::to_string(k) +
                                       " (repaired " + std::to_string(fb.sell[k + 1] - fb.sell[k]) +
                                       ")");
            fb.sell[k] = fb.sell[k + 1];
        }
        if (std::isfinite(fb.buy[k]) && std::isfinite(fb.buy[k + 1]) &&
            fb.buy[k] < fb.buy[k + 1]) {
            if (diagnostics && fb.buy[k + 1] - fb.buy[k] > jitter)
                diagnostics->push_back("buy boundary not monotone at slice " + std::to_string(k));
            fb.buy[k] = fb.buy[k + 1];
        }
        if (!std::isfinite(fb.buy[k]) && std::isfinite(fb.buy[k + 1])) {
            // the empty-region tail must be an interval ending at T
            if (diagnostics)
                diagnostics->push_back("buy region vanishes and reappears around slice " +
                                       std::to_string(k));
        }
    }
    fb.t0 = fb.t.back();
    for (std::size_t k = 0; k <= nt; ++k)
        if (!std::isfinite(fb.buy[k])) {
            fb.t0 = fb.t[k];
            break;
        }
    return fb;
}

ObstacleSolution solve_obstacle(const MarketParams& params, const PdeGrid& grid,
                                const SolverConfig& cfg) {
    params.validate();
    const StationaryBoundaries st = solve_stationary(params);
    grid.validate(st);

    const std::size_t n = grid.z.size();
    const std::size_t nt = grid.t.size() - 1;
    const double K = cfg.penalty_scale / grid.dt;
    Scheme scheme(params, grid, K);

    ObstacleSolution sol;
    sol.params = params;
    sol.stationary = st;
    sol.grid = grid;
    sol.penalty_k = K;
    sol.extraction_tol = 10.0 / K + 1e-12;
    sol.u.assign((nt + 1) * n, 0.0);

    // terminal condition: glued to the lower obstacle
    for (std::size_t i = 0; i < n; ++i) sol.u[nt * n + i] = scheme.lower[i];
    const double u_left = st.sell + 1.0 - params.mu;  // lower obstacle at the left edge

    std::vector<double> u(n), g(n), dl(n), d(n), du(n), rhs(n), trial(n);
    for (std::size_t k = nt; k-- > 0;) {
        const double t = grid.t[k];
        const bool clamp_right = t < scheme.t0_analytic;
        const std::vector<double> u_next(sol.u.begin() + (k + 1) * n,
                                         sol.u.begin() + (k + 2) * n);
        u = u_next;
        u[0] = u_left;
        if (clamp_right) u[n - 1] = scheme.upper[n - 1];

        bool converged = false;
        for (int it = 0; it < cfg.newton_max; ++it) {
            scheme.residual(u, u_next, grid.dt, clamp_right, &g);
            const double res = max_abs(g);
            if (res < cfg.newton_tol) {
                converged = true;
                break;
            }
            scheme.jacobian(u, grid.dt, clamp_right, &dl, &d, &du);
            rhs = g;
            for (double& v : rhs) v = -v;
            solve_tridiag(dl, d, du, rhs);
            // full semismooth Newton steps; the residual may grow transiently
            // while the penalty active set settles, so only back off when it
            // explodes outright
            double step = 1.0;
            for (int half = 0; half < 4; ++half) {
                for (std::size_t i = 0; i < n; ++i) trial[i] = u[i] + step * rhs[i];
                scheme.residual(trial, u_next, grid.dt, clamp_right, &g);
                if (max_abs(g) < 1e3 * (res + 1.0) || half == 3) break;
                step *= 0.5;
            }
            for (std::size_t i = 0; i < n; ++i) u[i] += step * rhs[i];
        }
        if (!converged) {
            // the active set can cycle at the level of a single node, where
            // the residual is the penalty weight times a rounding-scale
            // obstacle violation; accept that, reject anything larger
            scheme.residual(u, u_next, grid.dt, clamp_right, &g);
            const double cycle_scale = sol.penalty_k * 1e-12 + 1e3 * cfg.newton_tol;
            if (max_abs(g) > cycle_scale) {
                std::ostringstream os;
                os << "penalty step Newton stalled at t = " << t << " (residual " << max_abs(g)
                   << ")";
                throw NumericalError(os.str());
            }
            sol.diagnostics.push_back("loose Newton convergence at t = " + std::to_string(t));
        }
        std::copy(u.begin(), u.end(), sol.u.begin() + k * n);
    }

    sol.boundaries =
        extract_boundaries(params, grid, sol.u, sol.extraction_tol, &sol.diagnostics);
    return sol;
}

ObstacleSolution solve_obstacle_adaptive(const MarketParams& params, const SolverConfig& cfg) {
    SolverConfig c = cfg;
    const double t0_analytic = std::max(params.horizon - critical_horizon(params), 0.0);
    for (int attempt = 0;; ++attempt) {
        const StationaryBoundaries st = solve_stationary(params);
        ObstacleSolution sol = solve_obstacle(params, PdeGrid::make(params, st, c), c);
        if (t0_analytic == 0.0 || sol.boundaries.t0 >= t0_analytic - sol.grid.dt || attempt >= 3)
            return sol;
        // buy boundary escaped through the truncated right edge too early
        c.z_max_factor *= 2.0;
    }
}

}  // namespace mvtc
