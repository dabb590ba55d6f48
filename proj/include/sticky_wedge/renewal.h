#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sticky_wedge/lattice.h"
#include "sticky_wedge/model.h"
#include "sticky_wedge/path_record.h"
#include "sticky_wedge/rng.h"

namespace sticky_wedge {

inline constexpr double kMomentDelta = 0.5;
inline constexpr int kCalibrationSamples = 100000;

// One interarrival law. `shape` is the gamma shape, the shifted-uniform
// relative half-width or the Pareto tail index; other families ignore it.
struct Marginal {
  InterarrivalFamily family = InterarrivalFamily::kExponential;
  double shape = 1.0;
  double mean = 1.0;

  // Inverse CDF evaluated from u and its complement 1 - u, so both tails
  // keep full precision.
  double Quantile(double u, double u_complement) const;
  // Squared coefficient of variation (infinite for Pareto with tail <= 2).
  double CoefVar2() const;
  double Variance() const { return CoefVar2() * mean * mean; }
  bool HasFiniteMoment(double order) const;
};

// Families and parameters of every clock for one value of M.
//
// Fast vectors are ordered [u^L_1..u^L_n, u^R_1..u^R_n]. Correlated
// coordinates are coupled through a Gaussian copula whose latent correlation
// is calibrated so that the interarrival covariance hits its target.
struct InterarrivalSpec {
  int n = 0;
  double M = 1.0;
  std::vector<Marginal> fast;            // 2n
  // n (n-1), row-major (i, j); mean 0 marks a clock with zero rate.
  std::vector<Marginal> slow_L;
  std::vector<Marginal> slow_R;
  Eigen::MatrixXd target_covariance;     // 2n x 2n, time^2
  Eigen::MatrixXd latent_correlation;    // 2n x 2n
  Eigen::MatrixXd latent_factor;         // L with L L^T = latent_correlation
  bool independent = true;               // latent_correlation == I
  std::string copula = "gaussian";

  // Joint draw of one fast vector; strictly positive entries.
  Eigen::VectorXd SampleFast(CounterRng& rng) const;
};

// Every family must have a finite moment of order 2 + kMomentDelta.
bool ValidateMomentAssumption(const InterarrivalFamilies& families);
bool ValidateMomentAssumption(const InterarrivalSpec& spec);

// Fast marginal shapes follow from the diagonal of c_LL / c_RR:
// exponential needs a^2 c_ii = 1, gamma gets shape 1 / (a^2 c_ii),
// shifted-uniform gets half-width a sqrt(3 c_ii) < 1, deterministic needs
// c_ii = 0, Pareto needs a^2 c_ii = 1 / (tail (tail - 2)). Throws
// std::invalid_argument for unrealizable targets.
InterarrivalSpec BuildInterarrivalSpec(const GeneralModelParams& params,
                                       double M);

enum class Side { kLeft, kRight };

// Slice of one joint fast draw.
Eigen::VectorXd SampleInterarrivalVector(const InterarrivalSpec& spec,
                                         Side which, CounterRng& rng);

// Latent Gaussian correlation giving Corr(F_p^-1(Phi(Z_p)), F_q^-1(Phi(Z_q)))
// = target. Bisection on a fixed-sample Monte Carlo map; results are cached
// (the map is invariant under rescaling of either marginal).
double CalibrateLatentCorrelation(const Marginal& p, const Marginal& q,
                                  double target);

// Event-queue simulation of the renewal system. All clocks run regardless of
// state; a renewal whose gating indicator is false is discarded but still
// consumes its interarrival. Fast clocks fire at intervals xi / M and slow
// clocks at xi / sqrt(M).
PathRecord SimulateGeneral(const GeneralModelParams& params,
                           const LatticeState& x0, double horizon,
                           std::uint64_t seed, std::uint64_t replica = 0,
                           const LatticeOptions& options = {});

// Same, with a prebuilt spec (the spec's M must match x0.M).
PathRecord SimulateGeneral(const GeneralModelParams& params,
                           const InterarrivalSpec& spec,
                           const LatticeState& x0, double horizon,
                           std::uint64_t seed, std::uint64_t replica = 0,
                           const LatticeOptions& options = {});

}  // namespace sticky_wedge
