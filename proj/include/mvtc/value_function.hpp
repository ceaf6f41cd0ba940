#pragma once

#include <memory>
#include <vector>

#include "mvtc/market.hpp"
#include "mvtc/obstacle_pde.hpp"

namespace mvtc {

// Reconstruction of the quadratic-loss value function V(t, x, y) from the
// obstacle solution: the exponent tables A(t), B(t), the log-value profile
// w(t, x/y) and the derivative V_x. Immutable after construction.
class ValueFunction {
  public:
    explicit ValueFunction(std::shared_ptr<const ObstacleSolution> sol);

    double A(double t) const;
    double B(double t) const;

    // w(t, ratio) for ratio < -(1-mu); throws std::domain_error otherwise.
    // Analytic in the sell region, grid quadrature across no-trade, analytic
    // continuation past the grid's deepest ratio.
    double w(double t, double ratio) const;

    // V(t, x, y); zero on nonnegative net wealth.
    double value(double t, const Position& p) const;

    // Partial derivative in the bond coordinate; <= 0 on the insolvency region.
    double value_x(double t, const Position& p) const;

    // Ratio-coordinate value v(t, ratio) = 1/w_x with the analytic obstacle
    // values outside the grid; strictly negative.
    double ratio_value(double t, double ratio) const;

    const FreeBoundaries& boundaries() const { return sol_->boundaries; }
    const MarketParams& params() const { return sol_->params; }
    const ObstacleSolution& obstacle() const { return *sol_; }

  private:
    std::shared_ptr<const ObstacleSolution> sol_;
    std::vector<double> A_;  // per t node, A_.back() = 0
    std::vector<double> B_;
    std::vector<double> w_;  // (n_t+1) x (n_z+1), anchored per slice

    double w_slice(int k, double ratio) const;
    double v_slice(int k, double ratio) const;
    double table_at(const std::vector<double>& tab, double t) const;
    int time_cell(double t, double* theta) const;
};

}  // namespace mvtc
