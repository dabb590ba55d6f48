#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"
#include "sticky_wedge/model.h"

namespace sticky_wedge {

// Principal-subset enumeration is exhaustive, so square inputs are capped.
inline constexpr int kMaxConditionSize = 16;
inline constexpr double kCertificateTol = 1e-9;
inline constexpr double kSingularConditionBound = 1e12;
inline constexpr double kDefaultSkewTol = 1e-10;

// Q (or a matrix needed to invert it) is numerically singular. Kept apart
// from a plain "not recurrent" verdict.
class SingularMatrixError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Subsets of [0, d) are bitmasks; bit j set means index j is in the subset.
using SubsetMask = unsigned;

struct CompletelySResult {
  bool holds = false;
  // Certificate for the full matrix: lambda >= 0 with Q lambda >= 1.
  Eigen::VectorXd lambda;
  // One certificate per nonempty principal subset (indices local to J).
  std::map<SubsetMask, Eigen::VectorXd> subset_certificates;
  // First subset without a certificate, when holds is false.
  std::optional<SubsetMask> failing_subset;
};

struct JointlyCompletelySResult {
  bool holds = false;
  std::map<SubsetMask, Eigen::VectorXd> gamma;  // gamma(J), local indices
  std::optional<SubsetMask> failing_subset;
};

struct RecurrenceResult {
  bool holds = false;
  Eigen::VectorXd q_inv_mu;
};

struct SkewSymmetryResult {
  bool holds = false;
  Eigen::MatrixXd residual;  // 2A - QD - DQ^T
  double max_abs_residual = 0.0;
};

// Assumption verdicts for one model. `recurrent` is empty when Q is singular
// (the reason is kept in recurrence_error).
struct ConditionReport {
  CompletelySResult completely_S;
  JointlyCompletelySResult jointly_completely_S;
  std::optional<RecurrenceResult> recurrent;
  std::string recurrence_error;
  SkewSymmetryResult skew_symmetric;
};

CompletelySResult IsCompletelyS(const Eigen::MatrixXd& Q);

JointlyCompletelySResult IsJointlyCompletelyS(const Eigen::MatrixXd& Q,
                                              const DoubleCollisionMatrix& Q2);

// Throws SingularMatrixError when Q is singular or its condition number
// exceeds kSingularConditionBound.
RecurrenceResult IsPositiveRecurrent(const Eigen::MatrixXd& Q,
                                     const Eigen::VectorXd& mu);

// Tolerance is relative to max |A|.
SkewSymmetryResult CheckSkewSymmetry(const Eigen::MatrixXd& A,
                                     const Eigen::MatrixXd& Q,
                                     double tol = kDefaultSkewTol);

ConditionReport CheckConditions(const MatrixBundle& bundle);

// Substitutes the certificates back into their defining inequalities.
// Independent of the LP: returns false if any certificate is off by more
// than kCertificateTol.
bool VerifyCompletelySCertificates(const Eigen::MatrixXd& Q,
                                   const CompletelySResult& result);
bool VerifyJointCertificates(const Eigen::MatrixXd& Q,
                             const DoubleCollisionMatrix& Q2,
                             const JointlyCompletelySResult& result);

std::vector<int> SubsetIndices(SubsetMask mask, int d);
std::string SubsetLabel(SubsetMask mask, int d);  // one-based, e.g. "{1,3}"

nlohmann::json ConditionReportToJson(const ConditionReport& report);
std::string ConditionReportTable(const ConditionReport& report);

}  // namespace sticky_wedge
