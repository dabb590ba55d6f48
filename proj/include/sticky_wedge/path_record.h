#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

namespace sticky_wedge {

// Decomposition of a lattice path into fast-clock increments, compensators
// and compensated slow-clock terms:
//   X = X(0) + A_M + sum_j theta_R I_R - sum_j theta_L I_L
//       + sum_j Delta_R - sum_j Delta_L.
struct DecompositionLedger {
  Eigen::VectorXd A_M;      // n
  Eigen::MatrixXd I_L;      // n x (n-1), time
  Eigen::MatrixXd I_R;      // n x (n-1), time
  Eigen::MatrixXd Delta_L;  // n x (n-1), space
  Eigen::MatrixXd Delta_R;  // n x (n-1), space
};

struct LatticeSnapshot {
  double t = 0.0;
  Eigen::VectorXd x;               // physical positions
  DecompositionLedger ledger;
  Eigen::VectorXd gap_occupation;  // time gap j spent closed on [0, t]
  double open_time = 0.0;          // time with every gap open
  Eigen::VectorXd qv;              // realized quadratic variation
  std::vector<std::int64_t> jump_counts;  // executed jumps per particle
};

// Output of the lattice and renewal simulators.
struct PathRecord {
  int n = 0;
  double M = 0.0;
  double horizon = 0.0;
  std::vector<std::int64_t> initial_positions;

  // Optional event log: time and post-event lattice positions (row-major).
  std::vector<double> event_times;
  std::vector<std::int64_t> event_positions;

  std::vector<LatticeSnapshot> snapshots;  // uniform grid, last at horizon

  // Exact running suprema of |Delta| over [0, horizon].
  Eigen::MatrixXd sup_abs_delta_L;
  Eigen::MatrixXd sup_abs_delta_R;

  std::int64_t executed_events = 0;
  std::int64_t suppressed_events = 0;  // renewal only

  const LatticeSnapshot& final() const { return snapshots.back(); }
};

// Event-exact bookkeeping shared by both simulators. Positions are integer
// lattice sites; physical position = site / sqrt(M).
class LedgerAccumulator {
 public:
  LedgerAccumulator(const Eigen::MatrixXd& theta_L,
                    const Eigen::MatrixXd& theta_R, double M,
                    std::vector<std::int64_t> positions);

  int n() const { return static_cast<int>(pos_.size()); }
  const std::vector<std::int64_t>& positions() const { return pos_; }
  double time() const { return t_; }

  bool GapClosed(int j) const { return pos_[j + 1] - pos_[j] == 1; }
  bool LeftOpen(int i) const { return i == 0 || !GapClosed(i - 1); }
  bool RightOpen(int i) const { return i == n() - 1 || !GapClosed(i); }
  bool AllOpen() const { return closed_count_ == 0; }

  // Integrates every occupation indicator up to time t (state held fixed).
  void Advance(double t);

  // Executes a fast jump of particle i (+1 right, -1 left).
  void FastJump(int i, int dir);
  // Executes a slow jump of particle i triggered by the clock of gap j.
  void SlowJump(int i, int j, int dir);

  LatticeSnapshot Snapshot() const;
  DecompositionLedger Ledger() const;
  void ExportSuprema(PathRecord& record) const;

 private:
  void Move(int i, int dir);
  void UpdateSuprema();

  Eigen::MatrixXd theta_L_;
  Eigen::MatrixXd theta_R_;
  double M_;
  double sqrt_M_;
  std::vector<std::int64_t> pos_;
  std::vector<std::int64_t> pos0_;
  int closed_count_ = 0;
  double t_ = 0.0;

  std::vector<std::int64_t> fast_net_;
  std::vector<std::int64_t> jump_counts_;
  Eigen::MatrixXd count_L_;  // executed slow jumps (exact integers)
  Eigen::MatrixXd count_R_;
  Eigen::MatrixXd I_L_;
  Eigen::MatrixXd I_R_;
  Eigen::VectorXd gap_occupation_;
  double open_time_ = 0.0;

  Eigen::MatrixXd sup_L_;
  Eigen::MatrixXd sup_R_;
};

// Largest |X - reconstructed X| over all snapshots of a record.
double LedgerIdentityError(const PathRecord& record,
                           const Eigen::MatrixXd& theta_L,
                           const Eigen::MatrixXd& theta_R);

}  // namespace sticky_wedge
