#pragma once

#include <span>
#include <string>
#include <vector>

#include "mvtc/market.hpp"
#include "mvtc/stationary.hpp"

namespace mvtc {

struct SolverConfig {
    int n_z = 800;               // spatial intervals
    int n_t = 2000;              // time steps
    double z_max_factor = 50.0;  // e^{z_max} >= factor * |x*_{b,inf}|
    double penalty_scale = 1e6;  // K = penalty_scale / dt
    double newton_tol = 1e-9;    // max-norm residual target per time step
    int newton_max = 50;
};

// Uniform grid in z = log(-x) (bond/stock ratio on log scale) and in time.
struct PdeGrid {
    std::vector<double> z;  // z.front() = log(-x*_{s,inf})
    std::vector<double> t;  // 0 = t.front() < ... < t.back() = T
    double dz = 0.0;
    double dt = 0.0;

    static PdeGrid make(const MarketParams& params, const StationaryBoundaries& st,
                        const SolverConfig& cfg);
    void validate(const StationaryBoundaries& st) const;
};

// Grid solution u(t, z) of the double-obstacle problem together with the
// extracted trading boundaries.
struct ObstacleSolution {
    MarketParams params;
    StationaryBoundaries stationary;
    PdeGrid grid;
    std::vector<double> u;  // (n_t+1) rows by (n_z+1) columns, row-major
    double penalty_k = 0.0;
    double extraction_tol = 0.0;
    FreeBoundaries boundaries;
    std::vector<std::string> diagnostics;  // warnings (monotonicity repairs etc.)

    int n_time() const { return static_cast<int>(grid.t.size()); }
    int n_space() const { return static_cast<int>(grid.z.size()); }
    double at(int k, int i) const { return u[static_cast<std::size_t>(k) * grid.z.size() + i]; }

    double lower_obstacle(double z) const { return -std::exp(z) + 1.0 - params.mu; }
    double upper_obstacle(double z) const { return -std::exp(z) + 1.0 + params.lambda; }
};

// Nonlinear spatial operator in log coordinates, central second-order stencil
// on the interior; the two boundary slots are returned as NaN. Throws
// NumericalError when any value of u_row is not safely negative (the operator
// divides by u).
std::vector<double> spatial_operator(std::span<const double> u_row,
                                     std::span<const double> z_nodes,
                                     const MarketParams& params);

// Backward-in-time penalty solve of the double-obstacle problem on the given
// grid, damped Newton per implicit step, followed by boundary extraction.
// The right edge is clamped to the upper obstacle while the buy region is
// expected to exist and carries the asymptotic slope condition afterwards.
ObstacleSolution solve_obstacle(const MarketParams& params, const PdeGrid& grid,
                                const SolverConfig& cfg);

// As above, but re-solves on a widened domain when the analytic buy-region
// vanishing time is not recovered (truncation ate the boundary blow-up).
ObstacleSolution solve_obstacle_adaptive(const MarketParams& params, const SolverConfig& cfg);

// Boundary extraction from a solved grid: per time slice the sell boundary is
// the edge of the lower contact set (linear interpolation of u - lower through
// tol) and the buy boundary is the inner edge of the upper contact block
// touching the right end, or the -inf tag when that block is absent.
FreeBoundaries extract_boundaries(const MarketParams& params, const PdeGrid& grid,
                                  const std::vector<double>& u, double tol,
                                  std::vector<std::string>* diagnostics);

}  // namespace mvtc
