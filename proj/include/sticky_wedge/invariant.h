#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"
#include "sticky_wedge/model.h"
#include "sticky_wedge/stats.h"

namespace sticky_wedge {

class NotRecurrent : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SkewSymmetryFails : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Weight of face F_j relative to the interior density.
//   kPublished: sqrt(a_jj) / 2, the closed form as usually stated.
//   kCorrected: a_jj / 2, which balances the boundary flux
//               (a_jj / 2) rho(z_j = 0) = q_jj * atom density.
enum class FaceWeightConvention { kPublished, kCorrected };

// Law with interior density exp(<gamma, z>) / C on the orthant and density
// w_j exp(<gamma, z>) / C on face F_j (Lebesgue measure on the other
// coordinates).
struct StationaryLaw {
  Eigen::VectorXd gamma;
  double C = 0.0;
  Eigen::VectorXd face_weight;
  FaceWeightConvention convention = FaceWeightConvention::kPublished;

  double InteriorDensity(const Eigen::VectorXd& z) const;
  double InteriorMass() const;
  Eigen::VectorXd FaceMass() const;
  double TotalMass() const { return InteriorMass() + FaceMass().sum(); }
};

// gamma = 2 D^-1 Q^-1 mu and C = (1 - sum_j w_j gamma_j) / prod_j(-gamma_j).
// Throws NotRecurrent (also when Q is singular) or SkewSymmetryFails.
StationaryLaw ComputeStationaryLaw(
    const SdeCoefficients& coeffs,
    FaceWeightConvention convention = FaceWeightConvention::kPublished);
StationaryLaw ComputeStationaryLaw(
    const ModelParams& params,
    FaceWeightConvention convention = FaceWeightConvention::kPublished);

struct StationarityOptions {
  double h = 1e-3;
  double horizon = 2000.0;  // measured after burn-in, sticky time
  double burn_in = 100.0;
  double thin = 0.5;        // spacing of interior samples
  double pinned_tol = 0.03;
  double ks_tol = 0.05;
  FaceWeightConvention convention = FaceWeightConvention::kPublished;
};

struct GapStationarity {
  double face_mass = 0.0;        // predicted pinned fraction
  double pinned_fraction = 0.0;  // observed over the window
  double boundary_error = 0.0;
  KsResult interior_ks;          // vs Exp(-gamma_j)
  std::int64_t interior_samples = 0;
  bool pass = false;
};

struct StationarityReport {
  StationaryLaw law;
  std::vector<GapStationarity> gaps;
  bool pass = false;
  // (x, empirical interior CDF at x) of each gap at 49 sample quantiles.
  std::vector<std::vector<std::pair<double, double>>> cdf_points;
  double runtime_seconds = 0.0;
};

// Runs the sticky construction from x0 for burn_in + horizon and compares
// the window's pinned fraction and thinned interior samples with the law.
// Throws std::invalid_argument when horizon <= 0 (no samples).
StationarityReport EmpiricalStationarityTest(const SdeCoefficients& coeffs,
                                             const Eigen::VectorXd& x0,
                                             const StationarityOptions& options,
                                             std::uint64_t seed,
                                             std::uint64_t replica = 0);

// KS distance of positive samples against Exp(rate); fails above tol.
struct ExponentialFit {
  KsResult ks;
  bool pass = false;
};
ExponentialFit KsAgainstExponential(const std::vector<double>& samples,
                                    double rate, double tol);

nlohmann::json StationaryLawToJson(const StationaryLaw& law);
nlohmann::json StationarityReportToJson(const StationarityReport& report,
                                        const StationarityOptions& options);

}  // namespace sticky_wedge
