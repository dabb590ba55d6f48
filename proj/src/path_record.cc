#include "sticky_wedge/path_record.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace sticky_wedge {

LedgerAccumulator::LedgerAccumulator(const Eigen::MatrixXd& theta_L,
                                     const Eigen::MatrixXd& theta_R, double M,
                                     std::vector<std::int64_t> positions)
    : theta_L_(theta_L),
      theta_R_(theta_R),
      M_(M),
      sqrt_M_(std::sqrt(M)),
      pos_(std::move(positions)),
      pos0_(pos_) {
  const int n = static_cast<int>(pos_.size());
  if (theta_L_.rows() != n || theta_L_.cols() != n - 1 ||
      theta_R_.rows() != n || theta_R_.cols() != n - 1) {
    throw std::invalid_argument("theta shape does not match particle count");
  }
  for (int j = 0; j + 1 < n; ++j) {
    if (pos_[j + 1] - pos_[j] < 1) {
      throw std::invalid_argument("initial state outside the discrete wedge");
    }
    if (GapClosed(j)) ++closed_count_;
  }
  fast_net_.assign(n, 0);
  jump_counts_.assign(n, 0);
  count_L_ = Eigen::MatrixXd::Zero(n, n - 1);
  count_R_ = Eigen::MatrixXd::Zero(n, n - 1);
  I_L_ = Eigen::MatrixXd::Zero(n, n - 1);
  I_R_ = Eigen::MatrixXd::Zero(n, n - 1);
  gap_occupation_ = Eigen::VectorXd::Zero(n - 1);
  sup_L_ = Eigen::MatrixXd::Zero(n, n - 1);
  sup_R_ = Eigen::MatrixXd::Zero(n, n - 1);
}

void LedgerAccumulator::Advance(double t) {
  const double dt = t - t_;
  if (dt < 0.0) throw std::logic_error("ledger time went backwards");
  if (dt == 0.0) return;
  t_ = t;
  if (closed_count_ == 0) {
    open_time_ += dt;
    return;
  }
  const int n = this->n();
  for (int j = 0; j + 1 < n; ++j) {
    if (!GapClosed(j)) continue;
    gap_occupation_(j) += dt;
    for (int i = 0; i < n; ++i) {
      if (RightOpen(i)) I_R_(i, j) += dt;
      if (LeftOpen(i)) I_L_(i, j) += dt;
    }
  }
  UpdateSuprema();
}

void LedgerAccumulator::Move(int i, int dir) {
  const int n = this->n();
  if (i > 0 && GapClosed(i - 1)) --closed_count_;
  if (i + 1 < n && GapClosed(i)) --closed_count_;
  pos_[i] += dir;
  if (i > 0 && pos_[i] - pos_[i - 1] < 1) {
    throw std::logic_error("exclusion violated");
  }
  if (i + 1 < n && pos_[i + 1] - pos_[i] < 1) {
    throw std::logic_error("exclusion violated");
  }
  if (i > 0 && GapClosed(i - 1)) ++closed_count_;
  if (i + 1 < n && GapClosed(i)) ++closed_count_;
  ++jump_counts_[i];
}

void LedgerAccumulator::FastJump(int i, int dir) {
  Move(i, dir);
  fast_net_[i] += dir;
}

void LedgerAccumulator::SlowJump(int i, int j, int dir) {
  Move(i, dir);
  if (dir > 0) {
    count_R_(i, j) += 1.0;
  } else {
    count_L_(i, j) += 1.0;
  }
  UpdateSuprema();
}

void LedgerAccumulator::UpdateSuprema() {
  sup_R_ = sup_R_.cwiseMax(
      (count_R_ / sqrt_M_ - theta_R_.cwiseProduct(I_R_)).cwiseAbs());
  sup_L_ = sup_L_.cwiseMax(
      (count_L_ / sqrt_M_ - theta_L_.cwiseProduct(I_L_)).cwiseAbs());
}

DecompositionLedger LedgerAccumulator::Ledger() const {
  const int n = this->n();
  DecompositionLedger ledger;
  ledger.A_M.resize(n);
  for (int i = 0; i < n; ++i) ledger.A_M(i) = fast_net_[i] / sqrt_M_;
  ledger.I_L = I_L_;
  ledger.I_R = I_R_;
  ledger.Delta_L = count_L_ / sqrt_M_ - theta_L_.cwiseProduct(I_L_);
  ledger.Delta_R = count_R_ / sqrt_M_ - theta_R_.cwiseProduct(I_R_);
  return ledger;
}

LatticeSnapshot LedgerAccumulator::Snapshot() const {
  const int n = this->n();
  LatticeSnapshot s;
  s.t = t_;
  s.x.resize(n);
  s.qv.resize(n);
  for (int i = 0; i < n; ++i) {
    s.x(i) = pos_[i] / sqrt_M_;
    s.qv(i) = jump_counts_[i] / M_;
  }
  s.ledger = Ledger();
  s.gap_occupation = gap_occupation_;
  s.open_time = open_time_;
  s.jump_counts = jump_counts_;
  return s;
}

void LedgerAccumulator::ExportSuprema(PathRecord& record) const {
  record.sup_abs_delta_L = sup_L_;
  record.sup_abs_delta_R = sup_R_;
}

double LedgerIdentityError(const PathRecord& record,
                           const Eigen::MatrixXd& theta_L,
                           const Eigen::MatrixXd& theta_R) {
  const double sqrt_M = std::sqrt(record.M);
  Eigen::VectorXd x0(record.n);
  for (int i = 0; i < record.n; ++i) {
    x0(i) = record.initial_positions[i] / sqrt_M;
  }
  double worst = 0.0;
  for (const auto& s : record.snapshots) {
    const auto& L = s.ledger;
    const Eigen::VectorXd rebuilt =
        x0 + L.A_M + theta_R.cwiseProduct(L.I_R).rowwise().sum() -
        theta_L.cwiseProduct(L.I_L).rowwise().sum() +
        L.Delta_R.rowwise().sum() - L.Delta_L.rowwise().sum();
    worst = std::max(worst, (s.x - rebuilt).cwiseAbs().maxCoeff());
  }
  return worst;
}

}  // namespace sticky_wedge
