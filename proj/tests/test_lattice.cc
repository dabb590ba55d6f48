#include <cmath>

#include "doctest.h"
#include "sticky_wedge/lattice.h"
#include "sticky_wedge/stats.h"

namespace sw = sticky_wedge;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

sw::LatticeState Sites(std::vector<std::int64_t> p, double M) {
  sw::LatticeState s;
  s.positions = std::move(p);
  s.M = M;
  return s;
}

void CheckLedger(const sw::PathRecord& r, const sw::ModelParams& p) {
  CHECK(sw::LedgerIdentityError(r, p.theta_L(), p.theta_R()) <= 1e-9);
}

}  // namespace

TEST_CASE("frozen pair never moves") {
  const auto p = sw::ModelParams::Uniform(2, 1.0, 0.0);
  const auto r = sw::SimulateExclusion(p, Sites({0, 1}, 100.0), 5.0, 1);
  CHECK(r.executed_events == 0);
  for (const auto& s : r.snapshots) {
    CHECK(s.x(0) == 0.0);
    CHECK(s.x(1) == doctest::Approx(0.1));
    CHECK(s.qv.isZero(0.0));
  }
  const auto occ = sw::CollisionOccupation(r);
  CHECK(occ.per_gap(0) == doctest::Approx(5.0));
  CHECK(occ.total == doctest::Approx(5.0));
  CheckLedger(r, p);
}

TEST_CASE("lone walker variance is 2at") {
  const double a = 1.0, t = 1.0, M = 100.0;
  const auto p = sw::ModelParams::Uniform(1, a, 0.0);
  const int R = 10000;
  std::vector<double> x(R);
  for (int r = 0; r < R; ++r) {
    const auto rec = sw::SimulateExclusion(p, Sites({0}, M), t, 5, r);
    x[r] = rec.final().x(0);
  }
  // Standard error of the sample variance for a near-Gaussian law.
  const double var = sw::Variance(x);
  const double se = 2 * a * t * std::sqrt(2.0 / (R - 1));
  CHECK(std::abs(var - 2 * a * t) <= 3 * se);
}

TEST_CASE("canonical pair collides in nearly every replica") {
  const auto p = sw::ModelParams::Uniform(2, 1.0, 0.5);
  int positive = 0;
  for (int r = 0; r < 200; ++r) {
    const auto rec = sw::SimulateExclusion(p, sw::LatticeState::FromPhysical(VectorXd::Zero(2), 400.0),
                                           10.0, 9, r);
    if (sw::CollisionOccupation(rec).total > 0.0) ++positive;
    CheckLedger(rec, p);
  }
  CHECK(positive >= 198);
}

TEST_CASE("collision occupation bookkeeping") {
  const auto p2 = sw::ModelParams::Uniform(2, 1.0, 0.5);
  const auto far = sw::SimulateExclusion(p2, Sites({0, 1000}, 100.0), 0.01, 3);
  CHECK(sw::CollisionOccupation(far).total == 0.0);

  const auto p3 = sw::ModelParams::Uniform(3, 1.0, 1.0);
  for (int r = 0; r < 20; ++r) {
    const auto rec = sw::SimulateExclusion(p3, Sites({0, 1, 2}, 100.0), 2.0, 4, r);
    const auto occ = sw::CollisionOccupation(rec);
    CHECK(occ.per_gap.sum() >= occ.per_gap.maxCoeff());
    CHECK(occ.total <= occ.per_gap.sum() + 1e-12);
    CHECK(occ.total >= occ.per_gap.maxCoeff() - 1e-12);
    CHECK(occ.total <= 2.0 + 1e-12);
    CheckLedger(rec, p3);
  }
}

TEST_CASE("quadratic variation of a lone walker") {
  const double a = 1.5, M = 10000.0, t = 10.0;  // 3e5 expected jumps
  const auto p = sw::ModelParams::Uniform(1, a, 0.0);
  const auto rec = sw::SimulateExclusion(p, Sites({0}, M), t, 2);
  const MatrixXd qv = sw::RealizedQuadraticVariation(rec);
  CHECK(qv(qv.rows() - 1, 0) / t == doctest::Approx(2 * a).epsilon(0.05));
  for (const auto& s : rec.snapshots) {
    CHECK(s.qv(0) == doctest::Approx(s.jump_counts[0] / M).epsilon(1e-12));
  }
}

TEST_CASE("wedge preservation, unit jumps and determinism") {
  const auto p = sw::ModelParams::Uniform(4, 1.0, 0.7);
  sw::LatticeOptions opt;
  opt.record_events = true;
  const auto x0 = Sites({0, 1, 2, 4}, 64.0);
  const auto a = sw::SimulateExclusion(p, x0, 3.0, 17, 2, opt);
  const auto b = sw::SimulateExclusion(p, x0, 3.0, 17, 2, opt);
  CHECK(a.event_times == b.event_times);
  CHECK(a.event_positions == b.event_positions);
  REQUIRE(a.event_times.size() > 100);
  const int n = 4;
  std::vector<std::int64_t> prev = x0.positions;
  for (std::size_t e = 0; e < a.event_times.size(); ++e) {
    int moved = 0;
    for (int i = 0; i < n; ++i) {
      const std::int64_t cur = a.event_positions[e * n + i];
      if (i > 0) CHECK(cur - a.event_positions[e * n + i - 1] >= 1);
      const std::int64_t step = cur - prev[i];
      CHECK(std::abs(step) <= 1);
      moved += step != 0;
      prev[i] = cur;
    }
    CHECK(moved == 1);
  }
  CheckLedger(a, p);
  const auto c = sw::SimulateExclusion(p, x0, 3.0, 17, 3, opt);
  CHECK(c.event_times != a.event_times);
}

TEST_CASE("holding time with open gaps is exponential with rate 2nMa") {
  const int n = 3;
  const double M = 50.0, a = 0.8;
  const auto p = sw::ModelParams::Uniform(n, a, 1.0);
  sw::LatticeOptions opt;
  opt.record_events = true;
  std::vector<double> first;
  for (int r = 0; r < 1000; ++r) {
    const auto rec = sw::SimulateExclusion(p, Sites({0, 50, 100}, M), 1.0, 8, r, opt);
    REQUIRE(!rec.event_times.empty());
    first.push_back(rec.event_times[0]);
  }
  const double rate = 2 * n * M * a;
  const auto ks = sw::KsOneSample(first, [rate](double t) { return -std::expm1(-rate * t); });
  CHECK(ks.p_value > 0.01);
}

TEST_CASE("mirror symmetry when left and right rates agree") {
  const double M = 100.0;
  const auto p = sw::ModelParams::Uniform(2, 1.0, 0.5);
  std::vector<double> left, mirrored;
  for (int r = 0; r < 500; ++r) {
    left.push_back(sw::SimulateExclusion(p, Sites({0, 1}, M), 2.0, 12, r).final().x(0));
    // Reflection maps sites (0, 1) to (-1, 0); shift back by one site.
    const auto rec = sw::SimulateExclusion(p, Sites({0, 1}, M), 2.0, 12, 500 + r);
    mirrored.push_back(1.0 / std::sqrt(M) - rec.final().x(1));
  }
  CHECK(sw::KsTwoSample(left, mirrored).p_value > 0.01);
}

TEST_CASE("zero-theta override knob") {
  const auto p = sw::ModelParams::Uniform(2, 1.0, 0.0);
  sw::LatticeOptions opt;
  opt.zero_theta_override = true;
  const auto rec = sw::SimulateExclusion(p, Sites({0, 1}, 400.0), 2.0, 1, 0, opt);
  CHECK(rec.executed_events > 0);
  CheckLedger(rec, p);
  opt.override_exponent = 0.5;
  CHECK_THROWS_AS(sw::SimulateExclusion(p, Sites({0, 1}, 400.0), 2.0, 1, 0, opt),
                  std::invalid_argument);
}

TEST_CASE("input validation and grid") {
  const auto p = sw::ModelParams::Uniform(2, 1.0, 0.5);
  CHECK_THROWS_AS(sw::SimulateExclusion(p, Sites({0, 0}, 100.0), 1.0, 1), std::invalid_argument);
  CHECK_THROWS_AS(sw::SimulateExclusion(p, Sites({0, 1}, 100.0), 0.0, 1), std::invalid_argument);
  CHECK_THROWS_AS(sw::SimulateExclusion(p, Sites({0, 1, 2}, 100.0), 1.0, 1), std::invalid_argument);
  const auto s = sw::LatticeState::FromPhysical((VectorXd(3) << 0.0, 0.0, 0.05).finished(), 100.0);
  CHECK(s.positions == std::vector<std::int64_t>{0, 1, 2});
  const auto g = sw::OutputGrid(1.0, 0.3);
  CHECK(g.size() == 5);
  CHECK(g.back() == 1.0);
  const auto rec = sw::SimulateExclusion(p, Sites({0, 1}, 100.0), 1.0, 1);
  CHECK(rec.snapshots.size() == sw::OutputGrid(1.0, 0.01).size());
  CHECK(rec.final().t == 1.0);
}
