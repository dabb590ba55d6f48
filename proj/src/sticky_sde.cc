#include "sticky_wedge/sticky_sde.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "sticky_wedge/conditions.h"
#include "sticky_wedge/lattice.h"
#include "sticky_wedge/lcp.h"
#include "sticky_wedge/rng.h"

namespace sticky_wedge {

namespace {

// Rows j: e_{j+1} - e_j, last row all ones.
Eigen::MatrixXd SpacingSumTransform(int n) {
  Eigen::MatrixXd T = Eigen::MatrixXd::Zero(n, n);
  for (int j = 0; j + 1 < n; ++j) {
    T(j, j) = -1.0;
    T(j, j + 1) = 1.0;
  }
  T.row(n - 1).setOnes();
  return T;
}

void RequireCompletelyS(const Eigen::MatrixXd& Q) {
  if (Q.rows() == 0) return;
  const CompletelySResult cs = IsCompletelyS(Q);
  if (!cs.holds) {
    throw NoWeakSolution(
        "reflection matrix is not completely-S (no certificate for J = " +
        SubsetLabel(*cs.failing_subset, static_cast<int>(Q.rows())) +
        "); the sticky SDE has no weak solution");
  }
}

}  // namespace

void Series::Push(const Eigen::VectorXd& v) {
  if (v.size() != dim_) throw std::invalid_argument("series dimension mismatch");
  if (dim_ == 0) {
    ++count_;
    return;
  }
  data_.insert(data_.end(), v.data(), v.data() + dim_);
}

Eigen::MatrixXd SymmetricSqrt(const Eigen::MatrixXd& A) {
  if (A.size() == 0) return A;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(A);
  return eig.eigenvectors() *
         eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() *
         eig.eigenvectors().transpose();
}

double GeometricTolerance(double h, const Eigen::MatrixXd& A) {
  const double max_diag = A.size() ? A.diagonal().maxCoeff() : 0.0;
  return 10.0 * std::sqrt(h) * std::sqrt(std::max(0.0, max_diag));
}

namespace {

// Shared stepping loop: stops after `max_steps` or once s + sum(Lambda)
// reaches `stop_T`.
SrbmPath RunSrbm(const Eigen::VectorXd& mu, const Eigen::MatrixXd& A,
                 const Eigen::MatrixXd& Q, const Eigen::VectorXd& z0, double h,
                 std::int64_t max_steps, double stop_T, std::uint64_t seed,
                 std::uint64_t replica, int noise_substeps = 1) {
  const int d = static_cast<int>(mu.size());
  if (A.rows() != d || A.cols() != d || Q.rows() != d || Q.cols() != d ||
      z0.size() != d) {
    throw std::invalid_argument("SRBM inputs have inconsistent dimensions");
  }
  if (!(h > 0.0)) throw std::invalid_argument("step h must be positive");
  if (noise_substeps < 1) throw std::invalid_argument("noise_substeps must be >= 1");
  if (d > 0 && z0.minCoeff() < 0.0) {
    throw std::invalid_argument("initial spacings must be nonnegative");
  }
  RequireCompletelyS(Q);

  const Eigen::MatrixXd root = std::sqrt(h) * SymmetricSqrt(A);
  const Eigen::VectorXd drift = mu * h;
  CounterRng rng(seed, replica, kStreamSrbm);

  SrbmPath path;
  path.h = h;
  path.z = Series(d);
  path.Lambda = Series(d);
  path.noise = Series(d);
  path.z.Push(z0);
  path.Lambda.Push(Eigen::VectorXd::Zero(d));
  path.min_z = d ? z0.minCoeff() : 0.0;

  Eigen::VectorXd z = z0;
  Eigen::VectorXd Lambda = Eigen::VectorXd::Zero(d);
  Eigen::VectorXd normals(d);
  double T = 0.0;
  for (std::int64_t k = 0; k < max_steps && T < stop_T; ++k) {
    normals.setZero();
    for (int m = 0; m < noise_substeps; ++m) {
      for (int j = 0; j < d; ++j) normals(j) += rng.Normal();
    }
    if (noise_substeps > 1) normals /= std::sqrt(static_cast<double>(noise_substeps));
    const Eigen::VectorXd dB = root * normals;
    const ReflectionStep step = LcpReflectionStep(Q, z, drift + dB, k);
    z = step.z_new;
    Lambda += step.delta_y;
    T = (k + 1) * h + Lambda.sum();
    path.max_complementarity_residual = std::max(
        path.max_complementarity_residual, ComplementarityResidual(step));
    if (d) path.min_z = std::min(path.min_z, z.minCoeff());
    if (step.used_fallback) ++path.fallback_steps;
    path.z.Push(z);
    path.Lambda.Push(Lambda);
    path.noise.Push(dB);
  }
  return path;
}

}  // namespace

SrbmPath SimulateSrbm(const Eigen::VectorXd& mu, const Eigen::MatrixXd& A,
                      const Eigen::MatrixXd& Q, const Eigen::VectorXd& z0,
                      double h, double horizon, std::uint64_t seed,
                      std::uint64_t replica) {
  if (horizon < 0.0) throw std::invalid_argument("horizon must be >= 0");
  const auto steps = static_cast<std::int64_t>(std::llround(horizon / h));
  return RunSrbm(mu, A, Q, z0, h, steps,
                 std::numeric_limits<double>::infinity(), seed, replica);
}

HatXPath BuildHatX(const SrbmPath& srbm, const SdeCoefficients& coeffs,
                   const Eigen::VectorXd& x0, std::uint64_t seed,
                   std::uint64_t replica) {
  const int n = coeffs.n();
  const int d = n - 1;
  if (x0.size() != n || srbm.z.dim() != d || srbm.noise.size() != srbm.steps() ||
      srbm.Lambda.size() != srbm.z.size()) {
    throw std::invalid_argument("SRBM path does not match the coefficients");
  }
  const Eigen::MatrixXd T = SpacingSumTransform(n);
  const Eigen::MatrixXd cov = T * coeffs.c_frak * T.transpose();
  const Eigen::MatrixXd A = cov.topLeftCorner(d, d);
  const Eigen::RowVectorXd c_SB = cov.bottomLeftCorner(1, d);
  Eigen::RowVectorXd gain = Eigen::RowVectorXd::Zero(d);
  double cond_var = cov(n - 1, n - 1);
  if (d > 0) {
    Eigen::LDLT<Eigen::MatrixXd> ldlt(A);
    gain = ldlt.solve(c_SB.transpose()).transpose();
    cond_var -= (gain * c_SB.transpose())(0, 0);
  }
  const double cond_sd = std::sqrt(std::max(0.0, cond_var) * srbm.h);
  const Eigen::PartialPivLU<Eigen::MatrixXd> T_lu(T);
  const double sum_b = coeffs.b.sum();
  const Eigen::RowVectorXd sum_V = coeffs.V.colwise().sum();

  CounterRng rng(seed, replica, kStreamSum);
  HatXPath out;
  out.x_hat = Series(n);
  out.dW = Series(n);
  out.x_hat.Reserve(srbm.z.size());
  out.dW.Reserve(srbm.steps());

  double sum_noise = 0.0;
  Eigen::VectorXd coords(n);
  Eigen::VectorXd increment(n);
  for (std::int64_t k = 0; k <= srbm.steps(); ++k) {
    if (k > 0) {
      const auto dB = srbm.noise[k - 1];
      const double dS = (gain * dB)(0, 0) + cond_sd * rng.Normal();
      increment.head(d) = dB;
      increment(n - 1) = dS;
      out.dW.Push(T_lu.solve(increment));
      sum_noise += dS;
    }
    const double s = k * srbm.h;
    coords.head(d) = srbm.z[k];
    coords(n - 1) = x0.sum() + sum_b * s + sum_noise +
                    (d > 0 ? (sum_V * srbm.Lambda[k])(0, 0) : 0.0);
    out.x_hat.Push(T_lu.solve(coords));
  }
  return out;
}

TimeChange::Location TimeChange::Locate(double t) const {
  Location loc;
  auto it = std::upper_bound(T.begin(), T.end(), t);
  std::int64_t k = static_cast<std::int64_t>(it - T.begin()) - 1;
  k = std::clamp<std::int64_t>(k, 0, static_cast<std::int64_t>(T.size()) - 2);
  loc.step = k;
  const double into = t - T[k];
  if (into < h) {
    loc.open_fraction = std::max(0.0, into / h);
  } else {
    loc.pinned = true;
    loc.open_fraction = 1.0;
    loc.pinned_elapsed = into - h;
  }
  return loc;
}

double TimeChange::Tau(double t) const {
  const Location loc = Locate(t);
  return (loc.step + loc.open_fraction) * h;
}

double TimeChange::GraphResidual(double t) const {
  const Location loc = Locate(t);
  const std::int64_t k = loc.step;
  if (loc.pinned) {
    // Vertical segment at s_{k+1} spans [T_k + h, T_{k+1}].
    return std::max({0.0, T[k] + h - t, t - T[k + 1]});
  }
  return std::abs(T[k] + loc.open_fraction * h - t);
}

StickyPath ApplyTimeChange(SrbmPath srbm, HatXPath hat, double horizon,
                           double grid) {
  const int d = srbm.z.dim();
  const int n = d + 1;
  const std::int64_t K = srbm.steps();
  if (hat.x_hat.size() != K + 1 || hat.x_hat.dim() != n) {
    throw std::invalid_argument("X_hat path does not match the SRBM grid");
  }
  if (!(grid > 0.0)) throw std::invalid_argument("grid must be positive");

  StickyPath path;
  path.n = n;
  path.h = srbm.h;
  path.horizon = horizon;
  TimeChange& tc = path.time_change;
  tc.h = srbm.h;
  tc.T.resize(K + 1);
  for (std::int64_t k = 0; k <= K; ++k) {
    tc.T[k] = k * srbm.h + (d ? srbm.Lambda[k].sum() : 0.0);
    if (k > 0 && !(tc.T[k] > tc.T[k - 1])) {
      throw std::runtime_error("time change is not strictly increasing at step " +
                               std::to_string(k));
    }
  }
  if (K == 0 || tc.T[K] < horizon) {
    throw std::invalid_argument("internal path ends before the horizon");
  }

  // Realized covariation of X_hat over completed internal steps.
  Eigen::MatrixXd qv_total = Eigen::MatrixXd::Zero(n, n);
  std::int64_t qv_step = 0;

  const std::vector<double> times = OutputGrid(horizon, grid);
  path.X = Series(n);
  path.occupation = Series(d);
  path.qv = Series(n);
  path.X.Reserve(times.size());
  Eigen::VectorXd x(n), occ(d), qv(n);
  for (std::size_t g = 0; g < times.size(); ++g) {
    const double t = times[g];
    const TimeChange::Location loc = tc.Locate(t);
    const std::int64_t k = loc.step;
    const auto xk = hat.x_hat[k];
    const auto xk1 = hat.x_hat[k + 1];
    const Eigen::VectorXd dx = xk1 - xk;
    x = xk + loc.open_fraction * dx;

    const auto Lk = srbm.Lambda[k];
    const auto Lk1 = srbm.Lambda[k + 1];
    occ = Lk;
    std::vector<std::uint8_t> flags(d, 0);
    if (loc.pinned) {
      double remaining = loc.pinned_elapsed;
      for (int j = 0; j < d; ++j) {
        const double push = Lk1(j) - Lk(j);
        if (push <= 0.0) continue;
        if (remaining < push) {
          occ(j) += remaining;
          break;
        }
        occ(j) += push;
        remaining -= push;
      }
      // Every gap the step ends on is exactly zero while pinned.
      const auto zk1 = srbm.z[k + 1];
      for (int j = 0; j < d; ++j) {
        if (zk1(j) == 0.0 && Lk1(j) > Lk(j)) flags[j] = 1;
      }
    }

    while (qv_step < k) {
      const Eigen::VectorXd inc = hat.x_hat[qv_step + 1] - hat.x_hat[qv_step];
      qv_total += inc * inc.transpose();
      ++qv_step;
    }
    const Eigen::MatrixXd qv_now =
        qv_total + loc.open_fraction * dx * dx.transpose();
    qv = qv_now.diagonal();

    path.t.push_back(t);
    path.X.Push(x);
    path.occupation.Push(occ);
    path.sigma.push_back((k + loc.open_fraction) * srbm.h);
    path.pinned.insert(path.pinned.end(), flags.begin(), flags.end());
    path.qv.Push(qv);
    if (g + 1 == times.size()) path.qv_matrix = qv_now;
  }
  path.srbm = std::move(srbm);
  path.hat = std::move(hat);
  return path;
}

StickyPath SimulateSticky(const SdeCoefficients& coeffs,
                          const Eigen::VectorXd& x0,
                          const StickyOptions& options, std::uint64_t seed,
                          std::uint64_t replica) {
  const int n = coeffs.n();
  if (n < 2) throw std::invalid_argument("need at least two particles");
  if (x0.size() != n) throw std::invalid_argument("x0 has wrong length");
  for (int i = 0; i + 1 < n; ++i) {
    if (x0(i + 1) < x0(i)) throw std::invalid_argument("x0 outside the wedge");
  }
  if (!(options.horizon > 0.0)) throw std::invalid_argument("horizon must be positive");
  const SpacingCovariance sc = BuildSpacingCovariance(coeffs.c_frak, coeffs.b);
  const Eigen::MatrixXd Q = BuildReflectionMatrix(coeffs.V);
  Eigen::VectorXd z0(n - 1);
  for (int j = 0; j + 1 < n; ++j) z0(j) = x0(j + 1) - x0(j);

  SrbmPath srbm = RunSrbm(sc.mu, sc.A, Q, z0, options.h,
                          std::numeric_limits<std::int64_t>::max(),
                          options.horizon, seed, replica,
                          options.noise_substeps);
  HatXPath hat = BuildHatX(srbm, coeffs, x0, seed, replica);
  StickyPath path = ApplyTimeChange(std::move(srbm), std::move(hat),
                                    options.horizon, options.grid);
  path.tol_geom = GeometricTolerance(options.h, sc.A);
  return path;
}

BoundaryOccupationResult BoundaryOccupation(const StickyPath& path) {
  const int d = path.n - 1;
  BoundaryOccupationResult result;
  const std::int64_t last = path.X.size() - 1;
  result.per_gap = path.occupation[last];
  result.sigma = path.sigma[last];
  result.grid_rule = Eigen::VectorXd::Zero(d);
  for (std::int64_t g = 0; g < last; ++g) {
    const auto x = path.X[g];
    const double dt = path.t[g + 1] - path.t[g];
    for (int j = 0; j < d; ++j) {
      if (x(j + 1) - x(j) < path.tol_geom) result.grid_rule(j) += dt;
    }
  }
  return result;
}

}  // namespace sticky_wedge
