#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include "json.hpp"

namespace sticky_wedge {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Parameters of the sticky exclusion process and of its limiting SDE.
//
// Indices are zero-based throughout: particle i in [0, n), gap j in [0, n-1)
// where gap j sits between particles j and j+1. theta_L(i, j) is the rate
// (on the sqrt(M) clock) at which particle i steps left while gap j is
// closed; theta_R likewise for right steps.
//
// n = 1 is accepted (theta matrices are 1 x 0) so the particle simulators
// can run a lone walker; every derived matrix needs n >= 2.
//
// All validation happens in the constructor. Instances are immutable.
class ModelParams {
 public:
  ModelParams(int n, double a, MatrixXd theta_L, MatrixXd theta_R, VectorXd b,
              MatrixXd c_frak);

  // Specialization used by the Poisson exclusion process: b = 0 and
  // c_frak = 2a * Identity.
  static ModelParams ExclusionLimit(int n, double a, MatrixXd theta_L,
                                    MatrixXd theta_R);

  // All theta entries equal to theta (both sides).
  static ModelParams Uniform(int n, double a, double theta);
  // theta_L(j, j) = theta_R(j + 1, j) = theta, all other rates zero: particles
  // outside a collision cannot move until it is resolved.
  static ModelParams Freeze(int n, double a, double theta);

  int n() const { return n_; }
  double a() const { return a_; }
  const MatrixXd& theta_L() const { return theta_L_; }
  const MatrixXd& theta_R() const { return theta_R_; }
  const VectorXd& b() const { return b_; }
  const MatrixXd& c_frak() const { return c_frak_; }

  // Relabeling i -> n-1-i combined with x -> -x. Left and right rates swap.
  ModelParams Reversed() const;

 private:
  int n_;
  double a_;
  MatrixXd theta_L_;
  MatrixXd theta_R_;
  VectorXd b_;
  MatrixXd c_frak_;
};

// Double-collision matrix Q2, stored by column. Columns that are exactly zero
// are omitted from `columns` and listed in `zero_pairs` instead.
struct DoubleCollisionMatrix {
  int dim = 0;  // n - 1
  std::map<std::pair<int, int>, VectorXd> columns;
  std::vector<std::pair<int, int>> zero_pairs;

  bool IsZeroPair(int k, int l) const;
  MatrixXd Dense() const;  // (n-1) x (n-1)^2, column index k*(n-1)+l
};

struct SpacingCovariance {
  MatrixXd A;   // (n-1) x (n-1)
  VectorXd D;   // diag(A)
  VectorXd mu;  // b_{j+1} - b_j
};

MatrixXd BuildSpeedChangeMatrix(const MatrixXd& theta_L,
                                const MatrixXd& theta_R);
MatrixXd BuildReflectionMatrix(const MatrixXd& V);
DoubleCollisionMatrix BuildDoubleCollisionMatrix(const MatrixXd& theta_L,
                                                 const MatrixXd& theta_R);
SpacingCovariance BuildSpacingCovariance(const MatrixXd& c_frak,
                                         const VectorXd& b);

// Every matrix derived from a ModelParams.
struct MatrixBundle {
  MatrixXd V;
  MatrixXd Q;
  DoubleCollisionMatrix Q2;
  MatrixXd A;
  VectorXd D;
  VectorXd mu;

  static MatrixBundle FromModel(const ModelParams& params);
};

// Coefficients of the sticky SDE
//   dX_i = 1{interior}(b_i dt + dW_i) + sum_j 1{X_j = X_{j+1}} v_ij dt
// with Cov(W) = c_frak. V is free here so that non-completely-S reflection
// matrices can be expressed.
struct SdeCoefficients {
  VectorXd b;
  MatrixXd c_frak;
  MatrixXd V;

  int n() const { return static_cast<int>(b.size()); }
  static SdeCoefficients FromModel(const ModelParams& params);
};

// Families of interarrival laws available to the renewal simulator. Pareto is
// a heavy-tailed family kept for exercising the moment check; the simulator
// refuses it.
enum class InterarrivalFamily {
  kExponential,
  kGamma,
  kDeterministic,
  kShiftedUniform,
  kPareto,
};

InterarrivalFamily ParseFamily(const std::string& name);
std::string FamilyName(InterarrivalFamily family);

// Interarrival families of the general particle system. Fast-clock
// variances come from the diagonal of c_LL / c_RR, so only the family is
// chosen per clock; slow clocks carry their own shape parameter.
struct InterarrivalFamilies {
  std::vector<InterarrivalFamily> fast_L;  // n entries
  std::vector<InterarrivalFamily> fast_R;  // n entries
  InterarrivalFamily slow = InterarrivalFamily::kExponential;
  // gamma: shape; shifted-uniform: relative half-width in [0, 1);
  // pareto: tail index. Ignored otherwise.
  double slow_shape = 1.0;
  // Shape used when a fast clock is Pareto (its variance is not set by c).
  double fast_pareto_tail = 3.0;
};

struct GeneralModelParams {
  ModelParams base;
  VectorXd lambda_L;
  VectorXd lambda_R;
  MatrixXd c_LL;
  MatrixXd c_LR;
  MatrixXd c_RR;
  InterarrivalFamilies families;

  // c_LL + c_LR + c_LR^T + c_RR.
  MatrixXd ImpliedCovariance() const;
  // Limit SDE: drift lambda_R - lambda_L, covariance a^3 * ImpliedCovariance,
  // V from theta. Throws if the implied covariance is not positive definite.
  SdeCoefficients LimitCoefficients() const;

  // Exponential clocks with lambda = 0, c_LL = c_RR = a^-2 I, c_LR = 0; the
  // general system then coincides in law with the Poisson one.
  static GeneralModelParams PoissonEquivalent(const ModelParams& base);
};

// Checks that a matrix is symmetric and strictly positive definite.
bool IsSymmetricPositiveDefinite(const MatrixXd& m, double tol = 1e-12);

// JSON config. Keys: n, a, theta_L, theta_R, b (default 0), c_frak (default
// 2a I), optional "general" block.
ModelParams ModelFromJson(const nlohmann::json& j);
GeneralModelParams GeneralModelFromJson(const nlohmann::json& j);
nlohmann::json ModelToJson(const ModelParams& params);

MatrixXd MatrixFromJson(const nlohmann::json& j);
VectorXd VectorFromJson(const nlohmann::json& j);
nlohmann::json MatrixToJson(const MatrixXd& m);
nlohmann::json VectorToJson(const VectorXd& v);

std::string MatrixToCsv(const MatrixXd& m);
void WriteMatrixCsv(const MatrixXd& m, const std::string& path);

}  // namespace sticky_wedge
