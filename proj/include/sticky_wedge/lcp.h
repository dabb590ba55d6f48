#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace sticky_wedge {

inline constexpr double kComplementarityTol = 1e-10;

// Raised when neither pivoting nor basis enumeration solves a reflection
// step. Carries the index of the offending step (-1 if unknown).
class LcpFailure : public std::runtime_error {
 public:
  LcpFailure(const std::string& what, std::int64_t step)
      : std::runtime_error(what), step_(step) {}
  std::int64_t step() const { return step_; }

 private:
  std::int64_t step_;
};

// Solution of w = q + M y, w >= 0, y >= 0, w . y = 0.
struct LcpSolution {
  bool solved = false;
  Eigen::VectorXd y;
  Eigen::VectorXd w;
  int pivots = 0;
};

// Lemke's complementary pivoting with covering vector e. Entering and
// leaving ties go to the lowest index. Reports solved = false on ray
// termination or when the pivot cap is reached.
LcpSolution SolveLcpLemke(const Eigen::MatrixXd& M, const Eigen::VectorXd& q);

// Tries every complementary basis, smallest first. Exponential in the
// dimension; used only as a fallback.
LcpSolution SolveLcpByEnumeration(const Eigen::MatrixXd& M,
                                  const Eigen::VectorXd& q);

struct ReflectionStep {
  Eigen::VectorXd z_new;
  Eigen::VectorXd delta_y;
  bool used_fallback = false;
};

// One discrete Skorokhod step: z_new = z + delta_b + Q delta_y >= 0,
// delta_y >= 0, z_new_j delta_y_j = 0. Throws LcpFailure.
ReflectionStep LcpReflectionStep(const Eigen::MatrixXd& Q,
                                 const Eigen::VectorXd& z,
                                 const Eigen::VectorXd& delta_b,
                                 std::int64_t step_index = -1);

// max_j |z_new_j * delta_y_j|
double ComplementarityResidual(const ReflectionStep& step);

}  // namespace sticky_wedge
