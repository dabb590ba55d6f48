#include <cmath>

#include "doctest.h"
#include "sticky_wedge/model.h"
#include "sticky_wedge/stats.h"
#include "sticky_wedge/sticky_sde.h"

namespace sw = sticky_wedge;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

VectorXd Vec(std::initializer_list<double> v) {
  VectorXd out(v.size());
  int i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

// Two particles, one gap. Lambda(s_k) = push(k), z(s_k) = gap(k), and
// X_hat = (f(s), f(s) + gap).
template <class Push, class Gap, class F>
std::pair<sw::SrbmPath, sw::HatXPath> SyntheticPath(double h, std::int64_t K,
                                                    Push push, Gap gap, F f) {
  sw::SrbmPath srbm;
  srbm.h = h;
  srbm.z = sw::Series(1);
  srbm.Lambda = sw::Series(1);
  srbm.noise = sw::Series(1);
  sw::HatXPath hat;
  hat.x_hat = sw::Series(2);
  hat.dW = sw::Series(2);
  for (std::int64_t k = 0; k <= K; ++k) {
    const double s = k * h;
    srbm.z.Push(Vec({gap(k)}));
    srbm.Lambda.Push(Vec({push(k)}));
    hat.x_hat.Push(Vec({f(s), f(s) + gap(k)}));
    if (k < K) {
      srbm.noise.Push(Vec({0.0}));
      hat.dW.Push(Vec({0.0, 0.0}));
    }
  }
  return {std::move(srbm), std::move(hat)};
}

sw::SdeCoefficients Canonical() {
  return sw::SdeCoefficients::FromModel(sw::ModelParams::Uniform(2, 1.0, 0.5));
}

}  // namespace

TEST_CASE("no pushing: tau is the identity and X equals X_hat") {
  const double h = 0.01;
  auto [srbm, hat] = SyntheticPath(
      h, 200, [](std::int64_t) { return 0.0; }, [](std::int64_t k) { return 1.0 + 0.01 * k; },
      [](double s) { return std::sin(s); });
  const auto path = sw::ApplyTimeChange(std::move(srbm), std::move(hat), 1.5, 0.05);
  for (std::size_t g = 0; g < path.t.size(); ++g) {
    const double t = path.t[g];
    CHECK(path.time_change.Tau(t) == doctest::Approx(t).epsilon(1e-12));
    CHECK(path.sigma[g] == doctest::Approx(t).epsilon(1e-12));
    CHECK(path.occupation[g](0) == 0.0);
    // Linear interpolation of sin between nodes h apart.
    CHECK(std::abs(path.X[g](0) - std::sin(t)) <= h * h);
  }
  const auto occ = sw::BoundaryOccupation(path);
  CHECK(occ.per_gap(0) == 0.0);
  CHECK(occ.sigma == doctest::Approx(1.5));
}

TEST_CASE("lambda(s) = s doubles internal time") {
  const double h = 0.01;
  auto [srbm, hat] = SyntheticPath(
      h, 300, [h](std::int64_t k) { return k * h; }, [](std::int64_t) { return 0.0; },
      [](double s) { return s; });
  const auto path = sw::ApplyTimeChange(std::move(srbm), std::move(hat), 4.0, 0.01);
  const auto& tc = path.time_change;
  for (std::size_t k = 0; k < tc.T.size(); ++k) CHECK(tc.T[k] == doctest::Approx(2.0 * k * h));
  for (std::size_t g = 0; g < path.t.size(); ++g) {
    const double t = path.t[g];
    // Open stretch first, pinned stretch second within each step.
    CHECK(std::abs(tc.Tau(t) - t / 2) <= h / 2 + 1e-12);
    CHECK(std::abs(path.X[g](0) - t / 2) <= h / 2 + 1e-12);
    CHECK(tc.GraphResidual(t) <= h);
    CHECK(path.sigma[g] + path.occupation[g](0) == doctest::Approx(t).epsilon(1e-12));
  }
  CHECK(sw::BoundaryOccupation(path).per_gap(0) == doctest::Approx(2.0));
}

TEST_CASE("a single push of length one is pinned time") {
  const double h = 0.01;
  auto [srbm, hat] = SyntheticPath(
      h, 200, [](std::int64_t k) { return k >= 1 ? 1.0 : 0.0; },
      [](std::int64_t k) { return k == 1 ? 0.0 : 0.5; }, [](double) { return 0.0; });
  const auto path = sw::ApplyTimeChange(std::move(srbm), std::move(hat), 2.0, 0.01);
  const auto occ = sw::BoundaryOccupation(path);
  CHECK(occ.per_gap(0) == doctest::Approx(1.0));
  CHECK(occ.sigma == doctest::Approx(1.0));
  for (std::size_t g = 0; g < path.t.size(); ++g) {
    const double t = path.t[g];
    if (std::abs(t - h) < 1e-9 || std::abs(t - 1.0 - h) < 1e-9) continue;
    const bool inside = t > h && t < 1.0 + h;
    CHECK(static_cast<bool>(path.IsPinned(g, 0)) == inside);
    if (inside) CHECK(path.time_change.Tau(t) == doctest::Approx(h));
  }
}

TEST_CASE("time change must be strictly increasing") {
  auto [srbm, hat] = SyntheticPath(
      0.0, 10, [](std::int64_t) { return 0.0; }, [](std::int64_t) { return 1.0; },
      [](double) { return 0.0; });
  CHECK_THROWS_AS(sw::ApplyTimeChange(std::move(srbm), std::move(hat), 0.0, 0.01),
                  std::runtime_error);
  auto [s2, h2] = SyntheticPath(
      0.01, 10, [](std::int64_t) { return 0.0; }, [](std::int64_t) { return 1.0; },
      [](double) { return 0.0; });
  CHECK_THROWS_AS(sw::ApplyTimeChange(std::move(s2), std::move(h2), 5.0, 0.01),
                  std::invalid_argument);
}

TEST_CASE("no weak solution when Q is not completely-S") {
  auto c = Canonical();
  c.V = (MatrixXd(2, 1) << 0.5, -0.5).finished();  // Q = [-1]
  CHECK_THROWS_AS(sw::SimulateSticky(c, Vec({0.0, 0.0}), {}, 1), sw::NoWeakSolution);
  const auto frozen = sw::SdeCoefficients::FromModel(sw::ModelParams::Uniform(2, 1.0, 0.0));
  CHECK_THROWS_AS(sw::SimulateSticky(frozen, Vec({0.0, 0.0}), {}, 1), sw::NoWeakSolution);
}

TEST_CASE("canonical paths: graph residual, measure identity, flat occupation") {
  const auto c = Canonical();
  sw::StickyOptions opt;
  int positive = 0;
  for (int r = 0; r < 200; ++r) {
    const auto p = sw::SimulateSticky(c, Vec({0.0, 0.0}), opt, 11, r);
    const auto occ = sw::BoundaryOccupation(p);
    if (occ.per_gap(0) > 0.0) ++positive;
    CHECK(occ.per_gap(0) + occ.sigma == doctest::Approx(opt.horizon).epsilon(1e-12));

    double worst = 0.0;
    for (std::size_t g = 0; g < p.t.size(); ++g) {
      worst = std::max(worst, p.time_change.GraphResidual(p.t[g]));
      CHECK(std::abs(p.sigma[g] + p.occupation[g](0) - p.t[g]) <= 1e-9);
      CHECK(p.X[g](1) - p.X[g](0) >= -1e-12);
      // No window of length 0.5 is entirely pinned.
      if (g >= 50) CHECK(p.occupation[g](0) - p.occupation[g - 50](0) < 0.5);
      if (g > 0 && p.occupation[g](0) > p.occupation[g - 1](0)) {
        // Lambda grows only across internal steps that push.
        const auto a = p.time_change.Locate(p.t[g - 1]);
        const auto b = p.time_change.Locate(p.t[g]);
        bool pushed = false;
        for (std::int64_t k = a.step; k <= b.step && !pushed; ++k) {
          pushed = p.srbm.Lambda[k + 1](0) > p.srbm.Lambda[k](0);
        }
        CHECK(pushed);
      }
    }
    CHECK(worst <= opt.h);
  }
  CHECK(positive >= 198);
}

TEST_CASE("realized quadratic variation follows open time") {
  const auto c = Canonical();
  sw::StickyOptions opt;
  double qv0 = 0.0, qv1 = 0.0, open = 0.0;
  std::vector<double> cross;
  for (int r = 0; r < 20; ++r) {
    const auto p = sw::SimulateSticky(c, Vec({0.0, 0.0}), opt, 5, r);
    const double s = p.sigma.back();
    qv0 += p.qv_matrix(0, 0);
    qv1 += p.qv_matrix(1, 1);
    open += s;
    cross.push_back(p.qv_matrix(0, 1) / s);
    CHECK(p.qv[p.qv.size() - 1](0) == doctest::Approx(p.qv_matrix(0, 0)));
  }
  CHECK(qv0 / (c.c_frak(0, 0) * open) == doctest::Approx(1.0).epsilon(0.05));
  CHECK(qv1 / (c.c_frak(1, 1) * open) == doctest::Approx(1.0).epsilon(0.05));
  // Push increments add an O(h) negative term to the cross variation.
  CHECK(std::abs(sw::Mean(cross)) <= 0.05 * c.c_frak(0, 0));
}

TEST_CASE("halving h on a shared Brownian path barely moves occupation") {
  const auto c = Canonical();
  sw::StickyOptions coarse;
  coarse.h = 2e-3;
  coarse.noise_substeps = 2;
  sw::StickyOptions fine;
  fine.h = 1e-3;
  std::vector<double> a, b, diff;
  for (int r = 0; r < 200; ++r) {
    const double x = sw::BoundaryOccupation(sw::SimulateSticky(c, Vec({0.0, 0.0}), coarse, 13, r))
                         .per_gap(0) / coarse.horizon;
    const double y = sw::BoundaryOccupation(sw::SimulateSticky(c, Vec({0.0, 0.0}), fine, 13, r))
                         .per_gap(0) / fine.horizon;
    a.push_back(x);
    b.push_back(y);
    diff.push_back(x - y);
  }
  CHECK(std::abs(sw::Mean(a) - sw::Mean(b)) < sw::StandardError(b));
  // Coupling works: paired differences are far tighter than the spread.
  CHECK(sw::StandardError(diff) < 0.5 * sw::StandardError(b));
}

TEST_CASE("determinism and input validation") {
  const auto c = Canonical();
  const auto a = sw::SimulateSticky(c, Vec({0.0, 0.1}), {}, 3, 4);
  const auto b = sw::SimulateSticky(c, Vec({0.0, 0.1}), {}, 3, 4);
  CHECK(a.sigma == b.sigma);
  CHECK(a.X[a.X.size() - 1] == b.X[b.X.size() - 1]);
  const auto other = sw::SimulateSticky(c, Vec({0.0, 0.1}), {}, 3, 5);
  CHECK(other.sigma != a.sigma);
  CHECK_THROWS_AS(sw::SimulateSticky(c, Vec({0.1, 0.0}), {}, 1), std::invalid_argument);
  CHECK_THROWS_AS(sw::SimulateSticky(c, Vec({0.0}), {}, 1), std::invalid_argument);
  sw::StickyOptions bad;
  bad.noise_substeps = 0;
  CHECK_THROWS_AS(sw::SimulateSticky(c, Vec({0.0, 0.0}), bad, 1), std::invalid_argument);
  CHECK(sw::GeometricTolerance(1e-2, MatrixXd::Constant(1, 1, 4.0)) == doctest::Approx(2.0));
}

TEST_CASE("three particles keep the pushing partition") {
  const auto c = sw::SdeCoefficients::FromModel(sw::ModelParams::Uniform(3, 1.0, 1.0));
  const auto p = sw::SimulateSticky(c, Vec({0.0, 0.0, 0.0}), {}, 9);
  const auto occ = sw::BoundaryOccupation(p);
  CHECK(occ.per_gap.sum() + occ.sigma == doctest::Approx(10.0).epsilon(1e-12));
  CHECK(occ.per_gap.minCoeff() >= 0.0);
  CHECK(occ.grid_rule.size() == 2);
}
