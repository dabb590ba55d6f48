#include "sticky_wedge/lcp.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace sticky_wedge {

namespace {

constexpr double kPivotTol = 1e-12;

double Scale(const Eigen::MatrixXd& M, const Eigen::VectorXd& q) {
  double s = 1.0;
  if (M.size()) s = std::max(s, M.cwiseAbs().maxCoeff());
  if (q.size()) s = std::max(s, q.cwiseAbs().maxCoeff());
  return s;
}

// Given the set of indices with y > 0, solves M_BB y_B = -q_B and checks the
// remaining conditions. Sets w_B = 0 exactly and clears tiny negatives.
bool SolveWithActiveSet(const Eigen::MatrixXd& M, const Eigen::VectorXd& q,
                        const std::vector<int>& active, LcpSolution& out) {
  const int d = static_cast<int>(q.size());
  const int k = static_cast<int>(active.size());
  const double tol = 1e-12 * Scale(M, q);
  Eigen::VectorXd y = Eigen::VectorXd::Zero(d);
  if (k > 0) {
    Eigen::MatrixXd MB(k, k);
    Eigen::VectorXd qB(k);
    for (int r = 0; r < k; ++r) {
      qB(r) = q(active[r]);
      for (int c = 0; c < k; ++c) MB(r, c) = M(active[r], active[c]);
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(MB);
    if (!lu.isInvertible()) return false;
    const Eigen::VectorXd yB = lu.solve(-qB);
    if (!yB.allFinite() || yB.minCoeff() < -tol) return false;
    for (int r = 0; r < k; ++r) y(active[r]) = std::max(0.0, yB(r));
  }
  Eigen::VectorXd w = q + M * y;
  for (int j : active) w(j) = 0.0;
  for (int j = 0; j < d; ++j) {
    if (w(j) < 0.0) {
      if (w(j) < -tol) return false;
      w(j) = 0.0;
    }
  }
  out.solved = true;
  out.y = std::move(y);
  out.w = std::move(w);
  return true;
}

}  // namespace

LcpSolution SolveLcpLemke(const Eigen::MatrixXd& M, const Eigen::VectorXd& q) {
  const int d = static_cast<int>(q.size());
  LcpSolution result;
  if (d == 0 || q.minCoeff() >= 0.0) {
    result.solved = true;
    result.y = Eigen::VectorXd::Zero(d);
    result.w = q;
    return result;
  }
  // Columns: w [0, d), y [d, 2d), z0 = 2d, rhs = 2d + 1.
  const int z0 = 2 * d;
  const int rhs = 2 * d + 1;
  Eigen::MatrixXd T = Eigen::MatrixXd::Zero(d, rhs + 1);
  T.leftCols(d).setIdentity();
  T.middleCols(d, d) = -M;
  T.col(z0).setConstant(-1.0);
  T.col(rhs) = q;
  std::vector<int> basis(d);
  for (int i = 0; i < d; ++i) basis[i] = i;
  const double tol = kPivotTol * Scale(M, q);

  auto pivot = [&](int row, int col) {
    T.row(row) /= T(row, col);
    for (int i = 0; i < d; ++i) {
      if (i != row && T(i, col) != 0.0) T.row(i) -= T(i, col) * T.row(row);
    }
    const int left = basis[row];
    basis[row] = col;
    ++result.pivots;
    return left;
  };

  int row = 0;
  for (int i = 1; i < d; ++i) {
    if (q(i) < q(row)) row = i;
  }
  int leaving = pivot(row, z0);
  const int max_pivots = 50 * d + 100;
  while (result.pivots < max_pivots) {
    const int entering = leaving < d ? leaving + d : leaving - d;
    int best = -1;
    double best_ratio = std::numeric_limits<double>::infinity();
    for (int i = 0; i < d; ++i) {
      if (T(i, entering) <= tol) continue;
      const double ratio = T(i, rhs) / T(i, entering);
      const bool tie = best >= 0 && std::abs(ratio - best_ratio) <= tol;
      if (ratio < best_ratio - tol ||
          (tie && (basis[i] == z0 ||
                   (basis[best] != z0 && basis[i] < basis[best])))) {
        best = i;
        best_ratio = ratio;
      }
    }
    if (best < 0) return result;  // secondary ray
    leaving = pivot(best, entering);
    if (leaving == z0) {
      std::vector<int> active;
      for (int i = 0; i < d; ++i) {
        if (basis[i] >= d && basis[i] < 2 * d && T(i, rhs) > 0.0) {
          active.push_back(basis[i] - d);
        }
      }
      std::sort(active.begin(), active.end());
      const int pivots = result.pivots;
      SolveWithActiveSet(M, q, active, result);
      result.pivots = pivots;
      return result;
    }
  }
  return result;
}

LcpSolution SolveLcpByEnumeration(const Eigen::MatrixXd& M,
                                  const Eigen::VectorXd& q) {
  const int d = static_cast<int>(q.size());
  if (d > 20) throw std::invalid_argument("LCP too large for enumeration");
  std::vector<unsigned> masks(1u << d);
  for (unsigned m = 0; m < masks.size(); ++m) masks[m] = m;
  std::stable_sort(masks.begin(), masks.end(), [](unsigned x, unsigned y) {
    return __builtin_popcount(x) < __builtin_popcount(y);
  });
  LcpSolution result;
  for (unsigned mask : masks) {
    std::vector<int> active;
    for (int j = 0; j < d; ++j) {
      if (mask & (1u << j)) active.push_back(j);
    }
    if (SolveWithActiveSet(M, q, active, result)) return result;
  }
  return result;
}

ReflectionStep LcpReflectionStep(const Eigen::MatrixXd& Q,
                                 const Eigen::VectorXd& z,
                                 const Eigen::VectorXd& delta_b,
                                 std::int64_t step_index) {
  const Eigen::VectorXd q = z + delta_b;
  ReflectionStep step;
  if (q.size() == 0 || q.minCoeff() >= 0.0) {
    step.z_new = q;
    step.delta_y = Eigen::VectorXd::Zero(q.size());
    return step;
  }
  LcpSolution sol = SolveLcpLemke(Q, q);
  if (!sol.solved) {
    sol = SolveLcpByEnumeration(Q, q);
    step.used_fallback = true;
  }
  if (!sol.solved) {
    throw LcpFailure("reflection step " + std::to_string(step_index) +
                         ": no complementary solution found",
                     step_index);
  }
  step.z_new = std::move(sol.w);
  step.delta_y = std::move(sol.y);
  return step;
}

double ComplementarityResidual(const ReflectionStep& step) {
  if (step.z_new.size() == 0) return 0.0;
  return step.z_new.cwiseProduct(step.delta_y).cwiseAbs().maxCoeff();
}

}  // namespace sticky_wedge
