#include "sticky_wedge/conditions.h"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

#include "sticky_wedge/lp.h"

namespace sticky_wedge {

namespace {

void RequireSquare(const Eigen::MatrixXd& m, const char* name) {
  if (m.rows() != m.cols()) {
    throw std::invalid_argument(std::string(name) + " must be square");
  }
  if (m.rows() > kMaxConditionSize) {
    throw std::invalid_argument(std::string(name) + " size " +
                                std::to_string(m.rows()) + " exceeds limit " +
                                std::to_string(kMaxConditionSize));
  }
}

Eigen::MatrixXd Principal(const Eigen::MatrixXd& m,
                          const std::vector<int>& idx) {
  const int k = static_cast<int>(idx.size());
  Eigen::MatrixXd out(k, k);
  for (int r = 0; r < k; ++r) {
    for (int c = 0; c < k; ++c) out(r, c) = m(idx[r], idx[c]);
  }
  return out;
}

Eigen::VectorXd Restrict(const Eigen::VectorXd& v,
                         const std::vector<int>& idx) {
  Eigen::VectorXd out(idx.size());
  for (std::size_t r = 0; r < idx.size(); ++r) out(r) = v(idx[r]);
  return out;
}

// Rows of the joint system for subset J, written as G gamma >= 1.
Eigen::MatrixXd JointConstraintRows(const Eigen::MatrixXd& Q,
                                    const DoubleCollisionMatrix& Q2,
                                    const std::vector<int>& idx) {
  std::vector<Eigen::VectorXd> rows;
  const Eigen::MatrixXd QJ = Principal(Q, idx);
  for (int c = 0; c < QJ.cols(); ++c) rows.push_back(QJ.col(c));
  for (int k : idx) {
    for (int l : idx) {
      auto it = Q2.columns.find({k, l});
      if (it == Q2.columns.end()) continue;
      rows.push_back(Restrict(it->second, idx));
    }
  }
  Eigen::MatrixXd G(rows.size(), idx.size());
  for (std::size_t r = 0; r < rows.size(); ++r) G.row(r) = rows[r].transpose();
  return G;
}

// A nonnegative certificate of G x >= 1 can be made strictly positive:
// shift by eps and rescale so every row is still >= 1.
Eigen::VectorXd MakeStrictlyPositive(const Eigen::MatrixXd& G,
                                     const Eigen::VectorXd& x) {
  if (G.rows() == 0) return Eigen::VectorXd::Ones(x.size());
  if (x.size() == 0 || x.minCoeff() > 0.0) return x;
  const double row_l1 = G.cwiseAbs().rowwise().sum().maxCoeff();
  const double eps = 1e-3 / std::max(1.0, row_l1);
  Eigen::VectorXd y = x.array() + eps;
  const double min_row = (G * y).minCoeff();
  if (min_row > 0.0) y /= std::min(1.0, min_row);
  return y;
}

bool SatisfiesAllRows(const Eigen::MatrixXd& G, const Eigen::VectorXd& x) {
  if (x.size() != G.cols()) return false;
  if (x.size() > 0 && x.minCoeff() < -kCertificateTol) return false;
  if (G.rows() == 0) return true;
  return (G * x).minCoeff() >= 1.0 - kCertificateTol;
}

std::string FormatVector(const Eigen::VectorXd& v) {
  std::ostringstream os;
  os << "(";
  for (int i = 0; i < v.size(); ++i) {
    if (i) os << ", ";
    os << std::setprecision(6) << v(i);
  }
  os << ")";
  return os.str();
}

}  // namespace

std::vector<int> SubsetIndices(SubsetMask mask, int d) {
  std::vector<int> idx;
  for (int j = 0; j < d; ++j) {
    if (mask & (1u << j)) idx.push_back(j);
  }
  return idx;
}

std::string SubsetLabel(SubsetMask mask, int d) {
  std::string s = "{";
  bool first = true;
  for (int j : SubsetIndices(mask, d)) {
    if (!first) s += ",";
    s += std::to_string(j + 1);
    first = false;
  }
  return s + "}";
}

CompletelySResult IsCompletelyS(const Eigen::MatrixXd& Q) {
  RequireSquare(Q, "Q");
  const int d = static_cast<int>(Q.rows());
  CompletelySResult result;
  result.holds = true;
  const SubsetMask full = (1u << d) - 1u;
  for (SubsetMask mask = 1; mask <= full && d > 0; ++mask) {
    const auto idx = SubsetIndices(mask, d);
    const Eigen::MatrixXd QJ = Principal(Q, idx);
    const LpResult lp = LpFeasible(QJ, Eigen::VectorXd::Ones(idx.size()));
    if (!lp.feasible) {
      result.holds = false;
      result.failing_subset = mask;
      result.subset_certificates.clear();
      return result;
    }
    result.subset_certificates[mask] = MakeStrictlyPositive(QJ, lp.point);
  }
  if (d > 0) result.lambda = result.subset_certificates.at(full);
  return result;
}

JointlyCompletelySResult IsJointlyCompletelyS(const Eigen::MatrixXd& Q,
                                              const DoubleCollisionMatrix& Q2) {
  RequireSquare(Q, "Q");
  const int d = static_cast<int>(Q.rows());
  if (Q2.dim != d) {
    throw std::invalid_argument("Q2 dimension does not match Q");
  }
  JointlyCompletelySResult result;
  result.holds = true;
  const SubsetMask full = (1u << d) - 1u;
  for (SubsetMask mask = 1; mask <= full && d > 0; ++mask) {
    const auto idx = SubsetIndices(mask, d);
    const Eigen::MatrixXd G = JointConstraintRows(Q, Q2, idx);
    const LpResult lp = LpFeasible(G, Eigen::VectorXd::Ones(G.rows()));
    if (!lp.feasible) {
      result.holds = false;
      result.failing_subset = mask;
      result.gamma.clear();
      return result;
    }
    result.gamma[mask] = MakeStrictlyPositive(G, lp.point);
  }
  return result;
}

RecurrenceResult IsPositiveRecurrent(const Eigen::MatrixXd& Q,
                                     const Eigen::VectorXd& mu) {
  RequireSquare(Q, "Q");
  if (mu.size() != Q.rows()) {
    throw std::invalid_argument("mu length does not match Q");
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(Q);
  const auto& s = svd.singularValues();
  const double smax = s.size() ? s(0) : 0.0;
  const double smin = s.size() ? s(s.size() - 1) : 0.0;
  if (!(smin > 0.0) || smax / smin > kSingularConditionBound) {
    std::ostringstream os;
    os << "Q is singular (condition number "
       << (smin > 0.0 ? smax / smin : INFINITY) << ")";
    throw SingularMatrixError(os.str());
  }
  RecurrenceResult result;
  result.q_inv_mu = Q.partialPivLu().solve(mu);
  result.holds = result.q_inv_mu.size() == 0 || result.q_inv_mu.maxCoeff() < 0.0;
  return result;
}

SkewSymmetryResult CheckSkewSymmetry(const Eigen::MatrixXd& A,
                                     const Eigen::MatrixXd& Q, double tol) {
  if (A.rows() != A.cols() || Q.rows() != Q.cols() || A.rows() != Q.rows()) {
    throw std::invalid_argument("A and Q must be square of equal size");
  }
  const Eigen::MatrixXd D = A.diagonal().asDiagonal();
  SkewSymmetryResult result;
  result.residual = 2.0 * A - Q * D - D * Q.transpose();
  result.max_abs_residual =
      result.residual.size() ? result.residual.cwiseAbs().maxCoeff() : 0.0;
  const double scale =
      A.size() ? std::max(A.cwiseAbs().maxCoeff(), 1e-300) : 1.0;
  result.holds = result.max_abs_residual <= tol * scale;
  return result;
}

ConditionReport CheckConditions(const MatrixBundle& bundle) {
  ConditionReport report;
  report.completely_S = IsCompletelyS(bundle.Q);
  report.jointly_completely_S = IsJointlyCompletelyS(bundle.Q, bundle.Q2);
  try {
    report.recurrent = IsPositiveRecurrent(bundle.Q, bundle.mu);
  } catch (const SingularMatrixError& e) {
    report.recurrence_error = e.what();
  }
  report.skew_symmetric = CheckSkewSymmetry(bundle.A, bundle.Q);
  return report;
}

bool VerifyCompletelySCertificates(const Eigen::MatrixXd& Q,
                                   const CompletelySResult& result) {
  const int d = static_cast<int>(Q.rows());
  if (!result.holds) return true;
  if (result.subset_certificates.size() != (1u << d) - 1u) return false;
  for (const auto& [mask, cert] : result.subset_certificates) {
    const auto idx = SubsetIndices(mask, d);
    if (!SatisfiesAllRows(Principal(Q, idx), cert)) return false;
  }
  return SatisfiesAllRows(Q, result.lambda);
}

bool VerifyJointCertificates(const Eigen::MatrixXd& Q,
                             const DoubleCollisionMatrix& Q2,
                             const JointlyCompletelySResult& result) {
  const int d = static_cast<int>(Q.rows());
  if (!result.holds) return true;
  if (result.gamma.size() != (1u << d) - 1u) return false;
  for (const auto& [mask, gamma] : result.gamma) {
    const auto idx = SubsetIndices(mask, d);
    if (gamma.size() > 0 && gamma.minCoeff() <= 0.0) return false;
    if (!SatisfiesAllRows(JointConstraintRows(Q, Q2, idx), gamma)) {
      return false;
    }
  }
  return true;
}

nlohmann::json ConditionReportToJson(const ConditionReport& report) {
  using nlohmann::json;
  const int d = static_cast<int>(report.skew_symmetric.residual.rows());
  json j;
  json cs;
  cs["holds"] = report.completely_S.holds;
  if (report.completely_S.holds) {
    cs["lambda"] = VectorToJson(report.completely_S.lambda);
  } else if (report.completely_S.failing_subset) {
    cs["failing_subset"] = SubsetLabel(*report.completely_S.failing_subset, d);
  }
  j["completely_S"] = cs;

  json jcs;
  jcs["holds"] = report.jointly_completely_S.holds;
  if (report.jointly_completely_S.holds) {
    json g = json::object();
    for (const auto& [mask, gamma] : report.jointly_completely_S.gamma) {
      g[SubsetLabel(mask, d)] = VectorToJson(gamma);
    }
    jcs["gamma"] = g;
  } else if (report.jointly_completely_S.failing_subset) {
    jcs["failing_subset"] =
        SubsetLabel(*report.jointly_completely_S.failing_subset, d);
  }
  j["jointly_completely_S"] = jcs;

  json rec;
  if (report.recurrent) {
    rec["holds"] = report.recurrent->holds;
    rec["q_inv_mu"] = VectorToJson(report.recurrent->q_inv_mu);
  } else {
    rec["holds"] = false;
    rec["error"] = report.recurrence_error;
  }
  j["recurrent"] = rec;

  json skew;
  skew["holds"] = report.skew_symmetric.holds;
  skew["max_abs_residual"] = report.skew_symmetric.max_abs_residual;
  skew["residual"] = MatrixToJson(report.skew_symmetric.residual);
  j["skew_symmetric"] = skew;
  return j;
}

std::string ConditionReportTable(const ConditionReport& report) {
  const int d = static_cast<int>(report.skew_symmetric.residual.rows());
  auto yes_no = [](bool b) { return b ? "yes" : "no"; };
  std::ostringstream os;
  os << std::left;
  os << std::setw(24) << "condition" << std::setw(8) << "holds" << "detail\n";
  os << std::setw(24) << "completely-S" << std::setw(8)
     << yes_no(report.completely_S.holds);
  if (report.completely_S.holds) {
    os << "lambda = " << FormatVector(report.completely_S.lambda);
  } else if (report.completely_S.failing_subset) {
    os << "no certificate for J = "
       << SubsetLabel(*report.completely_S.failing_subset, d);
  }
  os << "\n";
  os << std::setw(24) << "jointly completely-S" << std::setw(8)
     << yes_no(report.jointly_completely_S.holds);
  if (report.jointly_completely_S.holds) {
    const SubsetMask full = (1u << d) - 1u;
    auto it = report.jointly_completely_S.gamma.find(full);
    if (it != report.jointly_completely_S.gamma.end()) {
      os << "gamma(" << SubsetLabel(full, d) << ") = " << FormatVector(it->second);
    }
  } else if (report.jointly_completely_S.failing_subset) {
    os << "no certificate for J = "
       << SubsetLabel(*report.jointly_completely_S.failing_subset, d);
  }
  os << "\n";
  os << std::setw(24) << "positive recurrent" << std::setw(8)
     << yes_no(report.recurrent && report.recurrent->holds);
  if (report.recurrent) {
    os << "Q^-1 mu = " << FormatVector(report.recurrent->q_inv_mu);
  } else {
    os << report.recurrence_error;
  }
  os << "\n";
  os << std::setw(24) << "skew symmetric" << std::setw(8)
     << yes_no(report.skew_symmetric.holds) << "max |2A - QD - DQ^T| = "
     << report.skew_symmetric.max_abs_residual << "\n";
  return os.str();
}

}  // namespace sticky_wedge
