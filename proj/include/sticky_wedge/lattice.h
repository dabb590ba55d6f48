#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "sticky_wedge/model.h"
#include "sticky_wedge/path_record.h"

namespace sticky_wedge {

// Integer lattice configuration; physical position = site / sqrt(M).
struct LatticeState {
  std::vector<std::int64_t> positions;
  double M = 1.0;
  double time = 0.0;

  // Rounds x * sqrt(M) and pushes sites right until every gap is >= 1.
  static LatticeState FromPhysical(const Eigen::VectorXd& x, double M);
  // Throws std::invalid_argument unless consecutive sites differ by >= 1.
  void Validate() const;
  Eigen::VectorXd Physical() const;
};

struct LatticeOptions {
  double grid = 0.01;          // snapshot spacing
  bool record_events = false;  // keep the full event log
  // Rate override for slow clocks whose theta is zero: such a clock fires at
  // override_scale * M^override_exponent (exponent < 1/2) instead of never.
  bool zero_theta_override = false;
  double override_scale = 1.0;
  double override_exponent = 0.25;
};

// Exact CTMC realization. While every gap is open the 2n fast clocks run at
// rate M a each; otherwise only slow clocks run, clock (i, j) at rate
// sqrt(M) theta(i, j) when gap j is closed and the move target is free.
PathRecord SimulateExclusion(const ModelParams& params,
                             const LatticeState& x0, double horizon,
                             std::uint64_t seed, std::uint64_t replica = 0,
                             const LatticeOptions& options = {});

struct CollisionOccupationResult {
  Eigen::VectorXd per_gap;  // Lebesgue measure of {gap j closed}
  double total = 0.0;       // measure of {some gap closed}
};

CollisionOccupationResult CollisionOccupation(const PathRecord& record);

// Rows: snapshot times; columns: particles.
Eigen::MatrixXd RealizedQuadraticVariation(const PathRecord& record);

// Uniform grid k * step on [0, horizon], with horizon appended if missing.
std::vector<double> OutputGrid(double horizon, double step);

}  // namespace sticky_wedge
