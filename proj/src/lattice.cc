#include "sticky_wedge/lattice.h"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "sticky_wedge/rng.h"

namespace sticky_wedge {

namespace {

enum class ClockKind { kFast, kSlow };

struct Clock {
  ClockKind kind;
  int i;
  int j;    // gap index for slow clocks
  int dir;  // +1 right, -1 left
  double rate;
};

void CollectClocks(const LedgerAccumulator& ledger, const ModelParams& params,
                   double M, const LatticeOptions& options,
                   std::vector<Clock>& clocks) {
  clocks.clear();
  const int n = ledger.n();
  if (ledger.AllOpen()) {
    const double rate = M * params.a();
    for (int i = 0; i < n; ++i) {
      clocks.push_back({ClockKind::kFast, i, -1, +1, rate});
      clocks.push_back({ClockKind::kFast, i, -1, -1, rate});
    }
    return;
  }
  const double sqrt_M = std::sqrt(M);
  const double override_rate =
      options.zero_theta_override
          ? options.override_scale * std::pow(M, options.override_exponent)
          : 0.0;
  auto slow_rate = [&](double theta) {
    return theta > 0.0 ? sqrt_M * theta : override_rate;
  };
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j + 1 < n; ++j) {
      if (!ledger.GapClosed(j)) continue;
      if (ledger.RightOpen(i)) {
        const double r = slow_rate(params.theta_R()(i, j));
        if (r > 0.0) clocks.push_back({ClockKind::kSlow, i, j, +1, r});
      }
      if (ledger.LeftOpen(i)) {
        const double r = slow_rate(params.theta_L()(i, j));
        if (r > 0.0) clocks.push_back({ClockKind::kSlow, i, j, -1, r});
      }
    }
  }
}

}  // namespace

LatticeState LatticeState::FromPhysical(const Eigen::VectorXd& x, double M) {
  if (!(M > 0.0)) throw std::invalid_argument("M must be positive");
  LatticeState state;
  state.M = M;
  const double sqrt_M = std::sqrt(M);
  for (int i = 0; i < x.size(); ++i) {
    std::int64_t site = std::llround(x(i) * sqrt_M);
    if (i > 0) site = std::max(site, state.positions.back() + 1);
    state.positions.push_back(site);
  }
  return state;
}

void LatticeState::Validate() const {
  if (!(M > 0.0)) throw std::invalid_argument("M must be positive");
  for (std::size_t i = 1; i < positions.size(); ++i) {
    if (positions[i] - positions[i - 1] < 1) {
      throw std::invalid_argument("initial state outside the discrete wedge");
    }
  }
}

Eigen::VectorXd LatticeState::Physical() const {
  Eigen::VectorXd x(positions.size());
  for (std::size_t i = 0; i < positions.size(); ++i) {
    x(i) = positions[i] / std::sqrt(M);
  }
  return x;
}

std::vector<double> OutputGrid(double horizon, double step) {
  if (!(step > 0.0)) throw std::invalid_argument("grid step must be positive");
  std::vector<double> grid;
  const auto count = static_cast<std::int64_t>(std::floor(horizon / step + 1e-9));
  for (std::int64_t k = 0; k <= count; ++k) grid.push_back(k * step);
  if (horizon - grid.back() > 1e-12 * std::max(1.0, horizon)) {
    grid.push_back(horizon);
  } else {
    grid.back() = std::min(grid.back(), horizon);
  }
  return grid;
}

PathRecord SimulateExclusion(const ModelParams& params,
                             const LatticeState& x0, double horizon,
                             std::uint64_t seed, std::uint64_t replica,
                             const LatticeOptions& options) {
  x0.Validate();
  if (static_cast<int>(x0.positions.size()) != params.n()) {
    throw std::invalid_argument("initial state has wrong particle count");
  }
  if (!(horizon > 0.0)) throw std::invalid_argument("horizon must be positive");
  if (options.zero_theta_override && !(options.override_exponent < 0.5)) {
    throw std::invalid_argument("override exponent must be below 1/2");
  }

  const double M = x0.M;
  CounterRng rng(seed, replica, kStreamLattice);
  LedgerAccumulator ledger(params.theta_L(), params.theta_R(), M,
                           x0.positions);
  PathRecord record;
  record.n = params.n();
  record.M = M;
  record.horizon = horizon;
  record.initial_positions = x0.positions;

  const std::vector<double> grid = OutputGrid(horizon, options.grid);
  record.snapshots.reserve(grid.size());
  std::size_t next_grid = 0;
  std::vector<Clock> clocks;
  double t = 0.0;
  while (true) {
    CollectClocks(ledger, params, M, options, clocks);
    double total = 0.0;
    for (const auto& c : clocks) total += c.rate;
    const double t_next = total > 0.0
                              ? t + rng.Exponential(total)
                              : std::numeric_limits<double>::infinity();
    while (next_grid < grid.size() && grid[next_grid] < t_next) {
      ledger.Advance(grid[next_grid]);
      record.snapshots.push_back(ledger.Snapshot());
      ++next_grid;
    }
    if (t_next > horizon) break;
    ledger.Advance(t_next);
    t = t_next;

    double u = rng.Uniform() * total;
    std::size_t pick = 0;
    while (pick + 1 < clocks.size() && u >= clocks[pick].rate) {
      u -= clocks[pick].rate;
      ++pick;
    }
    const Clock& c = clocks[pick];
    if (c.kind == ClockKind::kFast) {
      ledger.FastJump(c.i, c.dir);
    } else {
      ledger.SlowJump(c.i, c.j, c.dir);
    }
    ++record.executed_events;
    if (options.record_events) {
      record.event_times.push_back(t);
      const auto& p = ledger.positions();
      record.event_positions.insert(record.event_positions.end(), p.begin(),
                                    p.end());
    }
  }
  ledger.ExportSuprema(record);
  return record;
}

CollisionOccupationResult CollisionOccupation(const PathRecord& record) {
  const auto& s = record.final();
  return {s.gap_occupation, s.t - s.open_time};
}

Eigen::MatrixXd RealizedQuadraticVariation(const PathRecord& record) {
  Eigen::MatrixXd qv(record.snapshots.size(), record.n);
  for (std::size_t k = 0; k < record.snapshots.size(); ++k) {
    qv.row(k) = record.snapshots[k].qv.transpose();
  }
  return qv;
}

}  // namespace sticky_wedge
