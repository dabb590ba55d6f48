#include "sticky_wedge/renewal.h"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <map>
#include <mutex>
#include <queue>
#include <stdexcept>
#include <tuple>

#include <boost/math/special_functions/gamma.hpp>

namespace sticky_wedge {

namespace {

constexpr double kShapeTol = 1e-9;

double NormalCdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

void CheckShape(const Marginal& m, const std::string& what) {
  switch (m.family) {
    case InterarrivalFamily::kGamma:
      if (!(m.shape > 0.0)) throw std::invalid_argument(what + ": gamma shape must be positive");
      break;
    case InterarrivalFamily::kShiftedUniform:
      if (!(m.shape >= 0.0 && m.shape < 1.0)) {
        throw std::invalid_argument(what + ": shifted-uniform half-width must lie in [0, 1)");
      }
      break;
    case InterarrivalFamily::kPareto:
      if (!(m.shape > 1.0)) throw std::invalid_argument(what + ": Pareto tail index must exceed 1");
      break;
    default:
      break;
  }
}

// Fixed latent sample shared by every calibration (common random numbers).
struct CalibrationSample {
  std::vector<double> z1;
  std::vector<double> w;
};

const CalibrationSample& GetCalibrationSample() {
  static const CalibrationSample sample = [] {
    CalibrationSample s;
    CounterRng rng(0, 0, kStreamCalibration);
    s.z1.resize(kCalibrationSamples);
    s.w.resize(kCalibrationSamples);
    for (int k = 0; k < kCalibrationSamples; ++k) {
      s.z1[k] = rng.Normal();
      s.w[k] = rng.Normal();
    }
    return s;
  }();
  return sample;
}

// z -> F^-1(Phi(z)) tabulated on [-kZMax, kZMax], linear in between.
class QuantileTable {
 public:
  explicit QuantileTable(const Marginal& m) {
    values_.resize(kPoints);
    for (int k = 0; k < kPoints; ++k) {
      const double z = -kZMax + 2.0 * kZMax * k / (kPoints - 1);
      values_[k] = m.Quantile(NormalCdf(z), NormalCdf(-z));
    }
  }
  double operator()(double z) const {
    const double pos = (std::clamp(z, -kZMax, kZMax) + kZMax) /
                       (2.0 * kZMax) * (kPoints - 1);
    const int k = std::min(static_cast<int>(pos), kPoints - 2);
    const double f = pos - k;
    return (1.0 - f) * values_[k] + f * values_[k + 1];
  }

 private:
  static constexpr int kPoints = 8001;
  static constexpr double kZMax = 8.0;
  std::vector<double> values_;
};

double SampleCorrelation(const std::vector<double>& x,
                         const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    mx += x[k];
    my += y[k];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    sxy += (x[k] - mx) * (y[k] - my);
    sxx += (x[k] - mx) * (x[k] - mx);
    syy += (y[k] - my) * (y[k] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

using CalibrationKey = std::tuple<int, double, int, double, double>;

std::mutex& CacheMutex() {
  static std::mutex mu;
  return mu;
}

std::map<CalibrationKey, double>& Cache() {
  static std::map<CalibrationKey, double> cache;
  return cache;
}

Marginal FastMarginal(InterarrivalFamily family, double a, double mean,
                      double c_ii, double pareto_tail,
                      const std::string& what) {
  Marginal m;
  m.family = family;
  m.mean = mean;
  const double cv2 = a * a * c_ii;
  if (c_ii < 0.0) throw std::invalid_argument(what + ": negative variance target");
  auto mismatch = [&](double expected) {
    return std::abs(cv2 - expected) > kShapeTol * std::max(1.0, expected);
  };
  switch (family) {
    case InterarrivalFamily::kExponential:
      if (mismatch(1.0)) {
        throw std::invalid_argument(what + ": exponential clocks need a^2 c_ii = 1");
      }
      break;
    case InterarrivalFamily::kGamma:
      if (!(cv2 > 0.0)) throw std::invalid_argument(what + ": gamma clocks need c_ii > 0");
      m.shape = 1.0 / cv2;
      break;
    case InterarrivalFamily::kDeterministic:
      if (mismatch(0.0)) {
        throw std::invalid_argument(what + ": deterministic clocks need c_ii = 0");
      }
      break;
    case InterarrivalFamily::kShiftedUniform:
      m.shape = std::sqrt(3.0 * cv2);
      if (!(m.shape < 1.0)) {
        throw std::invalid_argument(what + ": shifted-uniform needs a sqrt(3 c_ii) < 1");
      }
      break;
    case InterarrivalFamily::kPareto:
      m.shape = pareto_tail;
      if (!(pareto_tail > 2.0) || mismatch(1.0 / (pareto_tail * (pareto_tail - 2.0)))) {
        throw std::invalid_argument(what + ": Pareto clocks need a^2 c_ii = 1/(tail (tail - 2))");
      }
      break;
  }
  CheckShape(m, what);
  return m;
}

}  // namespace

double Marginal::Quantile(double u, double u_complement) const {
  using boost::math::gamma_p_inv;
  using boost::math::gamma_q_inv;
  const double uc = std::max(u_complement, std::numeric_limits<double>::min());
  switch (family) {
    case InterarrivalFamily::kExponential:
      return -mean * std::log(uc);
    case InterarrivalFamily::kGamma: {
      const double g = u < 0.5 ? gamma_p_inv(shape, u) : gamma_q_inv(shape, uc);
      return std::max(mean * g / shape, std::numeric_limits<double>::min());
    }
    case InterarrivalFamily::kDeterministic:
      return mean;
    case InterarrivalFamily::kShiftedUniform:
      return mean * (1.0 - shape + 2.0 * shape * u);
    case InterarrivalFamily::kPareto: {
      const double xm = mean * (shape - 1.0) / shape;
      return xm * std::pow(uc, -1.0 / shape);
    }
  }
  throw std::logic_error("unknown family");
}

double Marginal::CoefVar2() const {
  switch (family) {
    case InterarrivalFamily::kExponential:
      return 1.0;
    case InterarrivalFamily::kGamma:
      return 1.0 / shape;
    case InterarrivalFamily::kDeterministic:
      return 0.0;
    case InterarrivalFamily::kShiftedUniform:
      return shape * shape / 3.0;
    case InterarrivalFamily::kPareto:
      return shape > 2.0 ? 1.0 / (shape * (shape - 2.0))
                         : std::numeric_limits<double>::infinity();
  }
  throw std::logic_error("unknown family");
}

bool Marginal::HasFiniteMoment(double order) const {
  return family != InterarrivalFamily::kPareto || shape > order;
}

bool ValidateMomentAssumption(const InterarrivalFamilies& families) {
  const double order = 2.0 + kMomentDelta;
  auto ok = [&](InterarrivalFamily f, double shape) {
    return Marginal{f, shape, 1.0}.HasFiniteMoment(order);
  };
  for (auto f : families.fast_L) {
    if (!ok(f, families.fast_pareto_tail)) return false;
  }
  for (auto f : families.fast_R) {
    if (!ok(f, families.fast_pareto_tail)) return false;
  }
  return ok(families.slow, families.slow_shape);
}

bool ValidateMomentAssumption(const InterarrivalSpec& spec) {
  const double order = 2.0 + kMomentDelta;
  for (const auto& m : spec.fast) {
    if (!m.HasFiniteMoment(order)) return false;
  }
  for (const auto* list : {&spec.slow_L, &spec.slow_R}) {
    for (const auto& m : *list) {
      if (m.mean > 0.0 && !m.HasFiniteMoment(order)) return false;
    }
  }
  return true;
}

double CalibrateLatentCorrelation(const Marginal& p, const Marginal& q,
                                  double target) {
  if (target == 0.0) return 0.0;
  if (!(std::abs(target) <= 1.0)) {
    throw std::invalid_argument("target correlation outside [-1, 1]");
  }
  if (p.CoefVar2() == 0.0 || q.CoefVar2() == 0.0) {
    throw std::invalid_argument("cannot correlate a deterministic clock");
  }
  const CalibrationKey key{static_cast<int>(p.family), p.shape,
                           static_cast<int>(q.family), q.shape, target};
  {
    std::lock_guard<std::mutex> lock(CacheMutex());
    auto it = Cache().find(key);
    if (it != Cache().end()) return it->second;
  }

  const Marginal unit_p{p.family, p.shape, 1.0};
  const Marginal unit_q{q.family, q.shape, 1.0};
  const QuantileTable tp(unit_p);
  const QuantileTable tq(unit_q);
  const auto& sample = GetCalibrationSample();
  std::vector<double> x(kCalibrationSamples);
  std::vector<double> y(kCalibrationSamples);
  for (int k = 0; k < kCalibrationSamples; ++k) x[k] = tp(sample.z1[k]);
  auto corr_at = [&](double rho) {
    const double s = std::sqrt(std::max(0.0, 1.0 - rho * rho));
    for (int k = 0; k < kCalibrationSamples; ++k) {
      y[k] = tq(rho * sample.z1[k] + s * sample.w[k]);
    }
    return SampleCorrelation(x, y);
  };
  double lo = -1.0, hi = 1.0;
  const double c_lo = corr_at(lo);
  const double c_hi = corr_at(hi);
  if (target < c_lo || target > c_hi) {
    throw std::invalid_argument(
        "target correlation not attainable by a Gaussian copula with these "
        "marginals");
  }
  for (int iter = 0; iter < 50; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (corr_at(mid) < target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  const double rho = 0.5 * (lo + hi);
  std::lock_guard<std::mutex> lock(CacheMutex());
  Cache()[key] = rho;
  return rho;
}

Eigen::VectorXd InterarrivalSpec::SampleFast(CounterRng& rng) const {
  const int dim = static_cast<int>(fast.size());
  Eigen::VectorXd out(dim);
  if (independent) {
    for (int p = 0; p < dim; ++p) {
      const double u = rng.Uniform();
      out(p) = fast[p].Quantile(u, 1.0 - u);
    }
    return out;
  }
  Eigen::VectorXd normals(dim);
  for (int p = 0; p < dim; ++p) normals(p) = rng.Normal();
  const Eigen::VectorXd z = latent_factor * normals;
  for (int p = 0; p < dim; ++p) {
    out(p) = fast[p].Quantile(NormalCdf(z(p)), NormalCdf(-z(p)));
  }
  return out;
}

InterarrivalSpec BuildInterarrivalSpec(const GeneralModelParams& params,
                                       double M) {
  if (!(M > 0.0)) throw std::invalid_argument("M must be positive");
  const ModelParams& base = params.base;
  const int n = base.n();
  const double a = base.a();
  const auto& fam = params.families;
  if (static_cast<int>(fam.fast_L.size()) != n ||
      static_cast<int>(fam.fast_R.size()) != n) {
    throw std::invalid_argument("need one fast family per particle and side");
  }
  InterarrivalSpec spec;
  spec.n = n;
  spec.M = M;
  const double sqrt_M = std::sqrt(M);

  Eigen::MatrixXd sigma(2 * n, 2 * n);
  sigma << params.c_LL, params.c_LR, params.c_LR.transpose(), params.c_RR;
  if ((sigma - sigma.transpose()).cwiseAbs().maxCoeff() >
      1e-12 * std::max(1.0, sigma.cwiseAbs().maxCoeff())) {
    throw std::invalid_argument("c_LL and c_RR must be symmetric");
  }

  for (int side = 0; side < 2; ++side) {
    for (int i = 0; i < n; ++i) {
      const double lambda = side == 0 ? params.lambda_L(i) : params.lambda_R(i);
      const double rate = a + lambda / sqrt_M;
      if (!(rate > 0.0)) {
        throw std::invalid_argument("fast clock rate a + lambda / sqrt(M) must be positive");
      }
      const int p = side * n + i;
      const auto family = side == 0 ? fam.fast_L[i] : fam.fast_R[i];
      spec.fast.push_back(FastMarginal(
          family, a, 1.0 / rate, sigma(p, p), fam.fast_pareto_tail,
          std::string(side == 0 ? "fast_L[" : "fast_R[") + std::to_string(i) + "]"));
    }
  }

  spec.latent_correlation = Eigen::MatrixXd::Identity(2 * n, 2 * n);
  spec.target_covariance = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  for (int p = 0; p < 2 * n; ++p) {
    spec.target_covariance(p, p) = spec.fast[p].Variance();
    for (int q = p + 1; q < 2 * n; ++q) {
      if (sigma(p, q) == 0.0) continue;
      if (sigma(p, p) <= 0.0 || sigma(q, q) <= 0.0) {
        throw std::invalid_argument("nonzero covariance with a deterministic clock");
      }
      const double target = sigma(p, q) / std::sqrt(sigma(p, p) * sigma(q, q));
      const double rho = CalibrateLatentCorrelation(spec.fast[p], spec.fast[q], target);
      spec.latent_correlation(p, q) = spec.latent_correlation(q, p) = rho;
      spec.target_covariance(p, q) = spec.target_covariance(q, p) =
          target * std::sqrt(spec.fast[p].Variance() * spec.fast[q].Variance());
      spec.independent = false;
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(spec.latent_correlation);
  if (eig.eigenvalues().minCoeff() < -1e-10) {
    throw std::invalid_argument(
        "calibrated copula correlation is not positive semidefinite");
  }
  spec.latent_factor = eig.eigenvectors() *
                       eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();

  for (int i = 0; i < n; ++i) {
    for (int j = 0; j + 1 < n; ++j) {
      for (int side = 0; side < 2; ++side) {
        const double theta = side == 0 ? base.theta_L()(i, j) : base.theta_R()(i, j);
        Marginal m{fam.slow, fam.slow_shape, theta > 0.0 ? 1.0 / theta : 0.0};
        CheckShape(m, "slow clock");
        (side == 0 ? spec.slow_L : spec.slow_R).push_back(m);
      }
    }
  }
  return spec;
}

Eigen::VectorXd SampleInterarrivalVector(const InterarrivalSpec& spec,
                                         Side which, CounterRng& rng) {
  const Eigen::VectorXd v = spec.SampleFast(rng);
  return which == Side::kLeft ? v.head(spec.n) : v.tail(spec.n);
}

PathRecord SimulateGeneral(const GeneralModelParams& params,
                           const LatticeState& x0, double horizon,
                           std::uint64_t seed, std::uint64_t replica,
                           const LatticeOptions& options) {
  return SimulateGeneral(params, BuildInterarrivalSpec(params, x0.M), x0,
                         horizon, seed, replica, options);
}

PathRecord SimulateGeneral(const GeneralModelParams& params,
                           const InterarrivalSpec& spec,
                           const LatticeState& x0, double horizon,
                           std::uint64_t seed, std::uint64_t replica,
                           const LatticeOptions& options) {
  const ModelParams& base = params.base;
  const int n = base.n();
  x0.Validate();
  if (static_cast<int>(x0.positions.size()) != n || spec.n != n) {
    throw std::invalid_argument("initial state has wrong particle count");
  }
  if (spec.M != x0.M) throw std::invalid_argument("spec built for a different M");
  if (!(horizon > 0.0)) throw std::invalid_argument("horizon must be positive");
  if (!ValidateMomentAssumption(spec)) {
    throw std::invalid_argument("interarrival law lacks a finite 2+delta moment");
  }

  const double M = x0.M;
  const double sqrt_M = std::sqrt(M);
  CounterRng rng(seed, replica, kStreamRenewal);
  LedgerAccumulator ledger(base.theta_L(), base.theta_R(), M, x0.positions);
  PathRecord record;
  record.n = n;
  record.M = M;
  record.horizon = horizon;
  record.initial_positions = x0.positions;

  // Clock c < 2n is fast: particle c / 2, right when c is even. The rest are
  // slow clocks (i, j) in row-major order, right before left.
  const int n_fast = 2 * n;
  const int n_slow = 2 * n * (n - 1);
  auto fast_coord = [n](int c) { return (c % 2 == 0 ? n : 0) + c / 2; };

  std::deque<Eigen::VectorXd> buffer;
  std::int64_t buffer_base = 0;
  std::vector<std::int64_t> fast_index(n_fast, 0);
  auto next_fast = [&](int c) {
    const std::int64_t k = fast_index[c]++;
    while (buffer_base + static_cast<std::int64_t>(buffer.size()) <= k) {
      buffer.push_back(spec.SampleFast(rng));
    }
    const double xi = buffer[k - buffer_base](fast_coord(c));
    const std::int64_t lowest = *std::min_element(fast_index.begin(), fast_index.end());
    while (!buffer.empty() && buffer_base < lowest) {
      buffer.pop_front();
      ++buffer_base;
    }
    return xi / M;
  };
  auto slow_marginal = [&](int c) -> const Marginal& {
    const int s = c - n_fast;
    return s % 2 == 0 ? spec.slow_R[s / 2] : spec.slow_L[s / 2];
  };
  auto next_slow = [&](int c) {
    const double u = rng.Uniform();
    return slow_marginal(c).Quantile(u, 1.0 - u) / sqrt_M;
  };

  using Entry = std::pair<double, int>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<Entry>> queue;
  for (int c = 0; c < n_fast; ++c) queue.push({next_fast(c), c});
  for (int c = n_fast; c < n_fast + n_slow; ++c) {
    if (slow_marginal(c).mean > 0.0) queue.push({next_slow(c), c});
  }

  const std::vector<double> grid = OutputGrid(horizon, options.grid);
  record.snapshots.reserve(grid.size());
  std::size_t next_grid = 0;
  while (true) {
    const double t_next = queue.empty() ? std::numeric_limits<double>::infinity()
                                        : queue.top().first;
    while (next_grid < grid.size() && grid[next_grid] < t_next) {
      ledger.Advance(grid[next_grid]);
      record.snapshots.push_back(ledger.Snapshot());
      ++next_grid;
    }
    if (t_next > horizon) break;
    const int c = queue.top().second;
    queue.pop();
    ledger.Advance(t_next);

    bool executed = false;
    if (c < n_fast) {
      const int i = c / 2;
      const int dir = c % 2 == 0 ? +1 : -1;
      if (ledger.AllOpen()) {
        ledger.FastJump(i, dir);
        executed = true;
      }
      queue.push({t_next + next_fast(c), c});
    } else {
      const int s = c - n_fast;
      const int i = (s / 2) / (n - 1);
      const int j = (s / 2) % (n - 1);
      const int dir = s % 2 == 0 ? +1 : -1;
      if (ledger.GapClosed(j) &&
          (dir > 0 ? ledger.RightOpen(i) : ledger.LeftOpen(i))) {
        ledger.SlowJump(i, j, dir);
        executed = true;
      }
      queue.push({t_next + next_slow(c), c});
    }
    if (!executed) {
      ++record.suppressed_events;
      continue;
    }
    ++record.executed_events;
    if (options.record_events) {
      record.event_times.push_back(t_next);
      const auto& p = ledger.positions();
      record.event_positions.insert(record.event_positions.end(), p.begin(),
                                    p.end());
    }
  }
  ledger.ExportSuprema(record);
  return record;
}

}  // namespace sticky_wedge
