#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "sticky_wedge/model.h"

namespace sticky_wedge {

// The reflection matrix is not completely-S, so the sticky SDE has no weak
// solution and nothing is simulated.
class NoWeakSolution : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Equally spaced vectors of fixed dimension stored contiguously.
class Series {
 public:
  Series() = default;
  explicit Series(int dim) : dim_(dim) {}

  int dim() const { return dim_; }
  std::int64_t size() const {
    return dim_ == 0 ? count_ : static_cast<std::int64_t>(data_.size()) / dim_;
  }
  void Reserve(std::int64_t count) { data_.reserve(count * dim_); }
  void Push(const Eigen::VectorXd& v);
  Eigen::Map<const Eigen::VectorXd> operator[](std::int64_t k) const {
    return {data_.data() + k * dim_, dim_};
  }

 private:
  int dim_ = 0;
  std::int64_t count_ = 0;  // only used when dim_ == 0
  std::vector<double> data_;
};

// Discretized SRBM on the internal grid s_k = k h.
struct SrbmPath {
  double h = 0.0;
  Series z;        // K + 1 points
  Series Lambda;   // K + 1 points, cumulative pushing
  Series noise;    // K increments of the driving Brownian motion B
  double max_complementarity_residual = 0.0;
  double min_z = 0.0;
  std::int64_t fallback_steps = 0;

  std::int64_t steps() const { return z.size() - 1; }
};

// Euler step for mu h + sqrt(h) A^{1/2} N followed by an LCP reflection.
// A^{1/2} uses a symmetric eigendecomposition with eigenvalues clamped at 0.
// Throws NoWeakSolution unless Q is completely-S; LcpFailure propagates.
SrbmPath SimulateSrbm(const Eigen::VectorXd& mu, const Eigen::MatrixXd& A,
                      const Eigen::MatrixXd& Q, const Eigen::VectorXd& z0,
                      double h, double horizon, std::uint64_t seed,
                      std::uint64_t replica = 0);

// Unreflected particle process on the internal grid:
//   X_hat = x0 + b s + W(s) + V Lambda(s).
// The sum component of W is drawn from its Gaussian law conditional on the
// SRBM noise, so spacings of X_hat reproduce z and W has covariance c_frak.
struct HatXPath {
  Series x_hat;  // K + 1 points, n coordinates
  Series dW;     // K increments
};

HatXPath BuildHatX(const SrbmPath& srbm, const SdeCoefficients& coeffs,
                   const Eigen::VectorXd& x0, std::uint64_t seed,
                   std::uint64_t replica = 0);

// T(s) = s + sum_j Lambda_j(s) sampled at s_k. Pushing during step k is
// placed at its end, so sticky time [T_k, T_k + h) is open (internal time
// advances at unit speed) and [T_k + h, T_{k+1}) is pinned (internal time
// frozen at s_{k+1}); the pinned stretch is split among the pushed gaps in
// index order with lengths Lambda_j(s_{k+1}) - Lambda_j(s_k).
struct TimeChange {
  double h = 0.0;
  std::vector<double> T;  // K + 1 values, T[0] = 0

  struct Location {
    std::int64_t step = 0;  // k with T_k <= t < T_{k+1}
    bool pinned = false;
    double open_fraction = 0.0;  // (t - T_k) / h on the open stretch
    double pinned_elapsed = 0.0;  // t - T_k - h on the pinned stretch
  };
  Location Locate(double t) const;
  // Generalized inverse tau(t) = inf{s : T(s) >= t}.
  double Tau(double t) const;
  // Distance from (tau(t), t) to the graph of T, vertical jumps included.
  double GraphResidual(double t) const;
};

struct StickyPath {
  int n = 0;
  double h = 0.0;
  double horizon = 0.0;
  double tol_geom = 0.0;
  std::vector<double> t;           // uniform sticky-time grid
  Series X;                        // n coordinates per grid point
  Series occupation;               // Lambda_j(tau(t)): time gap j pinned
  std::vector<double> sigma;       // open time = tau(t)
  std::vector<std::uint8_t> pinned;  // grid point k, gap j at k*(n-1)+j
  Series qv;                       // realized QV of X_i over [0, t]
  Eigen::MatrixXd qv_matrix;       // realized covariation at the horizon

  // Internal construction, kept for diagnostics.
  SrbmPath srbm;
  HatXPath hat;
  TimeChange time_change;

  bool IsPinned(std::int64_t k, int j) const {
    return pinned[k * (n - 1) + j] != 0;
  }
};

// Builds X(t) = X_hat(tau(t)) on the grid k * grid, k * grid <= horizon.
// The internal path must reach T >= horizon. Throws std::runtime_error if
// the sampled T is not strictly increasing.
StickyPath ApplyTimeChange(SrbmPath srbm, HatXPath hat, double horizon,
                           double grid);

struct StickyOptions {
  double h = 1e-3;
  double horizon = 10.0;  // sticky time
  double grid = 0.01;
  // Each internal step uses the normalized sum of this many standard normal
  // draws, so (h, 2) and (h / 2, 1) share one Brownian path.
  int noise_substeps = 1;
};

// Full construction. x0 must lie in the closed wedge. Throws NoWeakSolution
// when Q = Delta V is not completely-S.
StickyPath SimulateSticky(const SdeCoefficients& coeffs,
                          const Eigen::VectorXd& x0,
                          const StickyOptions& options, std::uint64_t seed,
                          std::uint64_t replica = 0);

struct BoundaryOccupationResult {
  Eigen::VectorXd per_gap;   // exact Lambda_j(tau(horizon))
  double sigma = 0.0;        // open time on [0, horizon]
  // Grid rule: time on the output grid with gap < tol_geom (diagnostic).
  Eigen::VectorXd grid_rule;
};

BoundaryOccupationResult BoundaryOccupation(const StickyPath& path);

// Pinned-state tolerance 10 sqrt(h) sqrt(max diag A).
double GeometricTolerance(double h, const Eigen::MatrixXd& A);

// Principal square root of a symmetric positive semidefinite matrix.
Eigen::MatrixXd SymmetricSqrt(const Eigen::MatrixXd& A);

}  // namespace sticky_wedge
