#pragma once

#include <vector>

#include <Eigen/Dense>

namespace sticky_wedge {

// coeffs . x >= rhs
struct LinearInequality {
  Eigen::VectorXd coeffs;
  double rhs = 0.0;
};

struct LpResult {
  bool feasible = false;
  Eigen::VectorXd point;  // set when feasible; satisfies x >= 0
};

inline constexpr int kMaxLpDimension = 32;

// Finds x >= 0 satisfying every inequality, or reports that none exists.
//
// Phase-one dense simplex over [x, surplus, artificial] with Bland's rule
// (lowest-index entering column, lowest-index leaving basic variable on
// ratio ties). The returned point is a basic feasible solution and the
// outcome depends only on the inequality order.
//
// Throws std::invalid_argument when dim > kMaxLpDimension or a coefficient
// is not finite.
LpResult LpFeasible(const std::vector<LinearInequality>& constraints, int dim);

// Same problem written as G x >= h.
LpResult LpFeasible(const Eigen::MatrixXd& G, const Eigen::VectorXd& h);

}  // namespace sticky_wedge
