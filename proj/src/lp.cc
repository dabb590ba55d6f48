#include "sticky_wedge/lp.h"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace sticky_wedge {

namespace {

constexpr double kPivotTol = 1e-11;
constexpr double kFeasibilityTol = 1e-9;

}  // namespace

LpResult LpFeasible(const Eigen::MatrixXd& G, const Eigen::VectorXd& h) {
  const int m = static_cast<int>(G.rows());
  const int d = static_cast<int>(G.cols());
  if (d > kMaxLpDimension) {
    throw std::invalid_argument("LP dimension " + std::to_string(d) +
                                " exceeds limit " +
                                std::to_string(kMaxLpDimension));
  }
  if (h.size() != m) throw std::invalid_argument("G and h row mismatch");
  if (!G.allFinite() || !h.allFinite()) {
    throw std::invalid_argument("LP coefficients must be finite");
  }
  LpResult result;
  if (m == 0) {
    result.feasible = true;
    result.point = Eigen::VectorXd::Zero(d);
    return result;
  }

  // Columns: x [0, d), surplus [d, d+m), artificial [d+m, d+2m), rhs last.
  const int n_cols = d + 2 * m;
  Eigen::MatrixXd T = Eigen::MatrixXd::Zero(m + 1, n_cols + 1);
  std::vector<int> basis(m);
  for (int i = 0; i < m; ++i) {
    const double sign = h(i) < 0.0 ? -1.0 : 1.0;
    T.block(i, 0, 1, d) = sign * G.row(i);
    T(i, d + i) = -sign;
    T(i, d + m + i) = 1.0;
    T(i, n_cols) = sign * h(i);
    basis[i] = d + m + i;
  }
  // Reduced costs of the phase-one objective sum(artificials).
  for (int j = 0; j < d + m; ++j) T(m, j) = -T.col(j).head(m).sum();
  T(m, n_cols) = -T.col(n_cols).head(m).sum();

  const double scale = std::max(1.0, T.cwiseAbs().maxCoeff());
  const int max_iter = 50 * (n_cols + m) + 1000;
  for (int iter = 0; iter < max_iter; ++iter) {
    int enter = -1;
    for (int j = 0; j < n_cols; ++j) {
      if (T(m, j) < -kPivotTol * scale) {
        enter = j;
        break;
      }
    }
    if (enter < 0) break;

    int leave = -1;
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < m; ++i) {
      const double a = T(i, enter);
      if (a <= kPivotTol * scale) continue;
      const double ratio = T(i, n_cols) / a;
      if (ratio < best - kPivotTol * scale ||
          (std::abs(ratio - best) <= kPivotTol * scale && leave >= 0 &&
           basis[i] < basis[leave])) {
        best = ratio;
        leave = i;
      }
    }
    if (leave < 0) break;  // unbounded direction; cannot occur in phase one

    T.row(leave) /= T(leave, enter);
    for (int i = 0; i <= m; ++i) {
      if (i == leave) continue;
      const double f = T(i, enter);
      if (f != 0.0) T.row(i) -= f * T.row(leave);
    }
    basis[leave] = enter;
  }

  Eigen::VectorXd x = Eigen::VectorXd::Zero(d);
  for (int i = 0; i < m; ++i) {
    if (basis[i] < d) x(basis[i]) = std::max(0.0, T(i, n_cols));
  }
  const Eigen::VectorXd slack = G * x - h;
  const double tol = kFeasibilityTol * std::max(1.0, h.cwiseAbs().maxCoeff());
  if (slack.size() == 0 || slack.minCoeff() >= -tol) {
    result.feasible = true;
    result.point = std::move(x);
  }
  return result;
}

LpResult LpFeasible(const std::vector<LinearInequality>& constraints, int dim) {
  if (dim > kMaxLpDimension) {
    throw std::invalid_argument("LP dimension " + std::to_string(dim) +
                                " exceeds limit " +
                                std::to_string(kMaxLpDimension));
  }
  Eigen::MatrixXd G(constraints.size(), dim);
  Eigen::VectorXd h(constraints.size());
  for (std::size_t i = 0; i < constraints.size(); ++i) {
    if (constraints[i].coeffs.size() != dim) {
      throw std::invalid_argument("inequality " + std::to_string(i) +
                                  " has wrong dimension");
    }
    G.row(i) = constraints[i].coeffs.transpose();
    h(i) = constraints[i].rhs;
  }
  return LpFeasible(G, h);
}

}  // namespace sticky_wedge
