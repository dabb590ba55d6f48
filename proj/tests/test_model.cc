#include <random>

#include "doctest.h"
#include "sticky_wedge/model.h"

namespace sw = sticky_wedge;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

// Hand-coded one-based reading of the speed-change rule.
MatrixXd OracleV(const MatrixXd& tl, const MatrixXd& tr) {
  const int n = static_cast<int>(tl.rows());
  MatrixXd v(n, n - 1);
  for (int i = 1; i <= n; ++i) {
    for (int j = 1; j <= n - 1; ++j) {
      double value;
      if (j == i - 1) {
        value = tr(i - 1, j - 1);
      } else if (j == i) {
        value = -tl(i - 1, j - 1);
      } else {
        value = tr(i - 1, j - 1) - tl(i - 1, j - 1);
      }
      v(i - 1, j - 1) = value;
    }
  }
  return v;
}

// Four-case double-collision rule, one-based.
double OracleQ2(const MatrixXd& tl, const MatrixXd& tr, int i, int k, int l) {
  auto TL = [&](int a, int b) { return tl(a - 1, b - 1); };
  auto TR = [&](int a, int b) { return tr(a - 1, b - 1); };
  if (k == i - 1 && l != i - 1) return -TL(i, l);
  if (k == i && l != i) return TL(i + 1, l) + TR(i, l);
  if (k == i + 1 && l != i + 1) return -TR(i + 1, l);
  return 0.0;
}

struct RandomTheta {
  MatrixXd tl, tr;
};

RandomTheta DrawTheta(std::mt19937_64& gen, int n) {
  std::uniform_real_distribution<double> u(0.0, 2.0);
  std::bernoulli_distribution zero(0.3);
  RandomTheta t{MatrixXd(n, n - 1), MatrixXd(n, n - 1)};
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n - 1; ++j) {
      t.tl(i, j) = zero(gen) ? 0.0 : u(gen);
      t.tr(i, j) = zero(gen) ? 0.0 : u(gen);
    }
  }
  return t;
}

}  // namespace

TEST_CASE("speed change matrix examples") {
  const auto half = sw::ModelParams::Uniform(2, 1.0, 0.5);
  MatrixXd v = sw::BuildSpeedChangeMatrix(half.theta_L(), half.theta_R());
  CHECK(v.rows() == 2);
  CHECK(v(0, 0) == -0.5);
  CHECK(v(1, 0) == 0.5);

  const MatrixXd zero = MatrixXd::Zero(4, 3);
  CHECK(sw::BuildSpeedChangeMatrix(zero, zero).isZero(0.0));

  const auto nat = sw::ModelParams::Uniform(3, 1.0, 1.0);
  v = sw::BuildSpeedChangeMatrix(nat.theta_L(), nat.theta_R());
  CHECK(v.isApprox(OracleV(nat.theta_L(), nat.theta_R()), 0.0));
  MatrixXd expected(3, 2);
  expected << -1, 0, 1, -1, 0, 1;
  CHECK(v == expected);
}

TEST_CASE("speed change matrix rejects bad shapes") {
  CHECK_THROWS_AS(sw::BuildSpeedChangeMatrix(MatrixXd::Zero(3, 2), MatrixXd::Zero(3, 3)),
                  std::invalid_argument);
}

TEST_CASE("reflection matrix examples") {
  MatrixXd v(2, 1);
  v << -0.5, 0.5;
  MatrixXd q = sw::BuildReflectionMatrix(v);
  CHECK(q.rows() == 1);
  CHECK(q(0, 0) == doctest::Approx(1.0));
  CHECK(sw::BuildReflectionMatrix(MatrixXd::Zero(3, 2)).isZero(0.0));

  for (double theta : {0.5, 1.0, 3.0}) {
    const auto p = sw::ModelParams::Uniform(3, 1.0, theta);
    q = sw::BuildReflectionMatrix(sw::BuildSpeedChangeMatrix(p.theta_L(), p.theta_R()));
    MatrixXd expected(2, 2);
    expected << 2, -1, -1, 2;
    CHECK(q.isApprox(theta * expected, 1e-15));
  }
}

TEST_CASE("double collision matrix examples") {
  const auto nat = sw::ModelParams::Uniform(3, 1.0, 1.0);
  auto q2 = sw::BuildDoubleCollisionMatrix(nat.theta_L(), nat.theta_R());
  REQUIRE(q2.columns.size() == 2);
  CHECK(q2.columns.at({0, 1}) == VectorXd((VectorXd(2) << 2, -1).finished()));
  CHECK(q2.columns.at({1, 0}) == VectorXd((VectorXd(2) << -1, 2).finished()));
  CHECK(q2.zero_pairs == std::vector<std::pair<int, int>>{{0, 0}, {1, 1}});

  const double theta = 0.7;
  const auto frz = sw::ModelParams::Freeze(3, 1.0, theta);
  q2 = sw::BuildDoubleCollisionMatrix(frz.theta_L(), frz.theta_R());
  REQUIRE(q2.columns.size() == 2);
  CHECK(q2.columns.at({0, 1}).isApprox((VectorXd(2) << theta, -theta).finished()));
  CHECK(q2.columns.at({1, 0}).isApprox((VectorXd(2) << -theta, theta).finished()));
  CHECK(q2.IsZeroPair(0, 0));
  CHECK(q2.IsZeroPair(1, 1));

  const MatrixXd zero = MatrixXd::Zero(4, 3);
  q2 = sw::BuildDoubleCollisionMatrix(zero, zero);
  CHECK(q2.columns.empty());
  CHECK(q2.zero_pairs.size() == 9);
  CHECK(q2.Dense().isZero(0.0));
}

TEST_CASE("spacing covariance examples") {
  MatrixXd c = 2.0 * MatrixXd::Identity(3, 3);
  auto cov = sw::BuildSpacingCovariance(c, VectorXd::Zero(3));
  MatrixXd expected(2, 2);
  expected << 4, -2, -2, 4;
  CHECK(cov.A == expected);
  CHECK(cov.D == VectorXd::Constant(2, 4.0));

  MatrixXd c2(2, 2);
  c2 << 3.0, 0.4, 0.4, 1.5;
  cov = sw::BuildSpacingCovariance(c2, VectorXd::Zero(2));
  CHECK(cov.A(0, 0) == doctest::Approx(3.0 + 1.5 - 0.8));

  cov = sw::BuildSpacingCovariance(2.0 * MatrixXd::Identity(2, 2),
                                   (VectorXd(2) << 1.0, -1.0).finished());
  CHECK(cov.mu(0) == -2.0);

  MatrixXd asym = MatrixXd::Identity(2, 2);
  asym(0, 1) = 0.5;
  CHECK_THROWS_AS(sw::BuildSpacingCovariance(asym, VectorXd::Zero(2)),
                  std::invalid_argument);
}

TEST_CASE("model validation") {
  const MatrixXd t = MatrixXd::Constant(2, 1, 0.5);
  const MatrixXd c = 2.0 * MatrixXd::Identity(2, 2);
  CHECK_THROWS_AS(sw::ModelParams(2, 0.0, t, t, VectorXd::Zero(2), c),
                  std::invalid_argument);
  CHECK_THROWS_AS(sw::ModelParams(2, 1.0, -t, t, VectorXd::Zero(2), c),
                  std::invalid_argument);
  CHECK_THROWS_AS(sw::ModelParams(2, 1.0, t, t, VectorXd::Zero(3), c),
                  std::invalid_argument);
  MatrixXd singular = MatrixXd::Ones(2, 2);
  CHECK_THROWS_AS(sw::ModelParams(2, 1.0, t, t, VectorXd::Zero(2), singular),
                  std::invalid_argument);
  const auto lone = sw::ModelParams::Uniform(1, 1.0, 0.5);
  CHECK(lone.n() == 1);
  CHECK_THROWS_AS(sw::MatrixBundle::FromModel(lone), std::invalid_argument);
}

TEST_CASE("properties over random theta") {
  std::mt19937_64 gen(11);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 2 + trial % 5;
    const auto th = DrawTheta(gen, n);
    const MatrixXd v = sw::BuildSpeedChangeMatrix(th.tl, th.tr);
    CHECK(v == OracleV(th.tl, th.tr));

    const MatrixXd q = sw::BuildReflectionMatrix(v);
    // Rebuilding V from its first row and the differences in Q.
    MatrixXd rebuilt(n, n - 1);
    rebuilt.row(0) = v.row(0);
    for (int i = 1; i < n; ++i) rebuilt.row(i) = rebuilt.row(i - 1) + q.row(i - 1);
    CHECK(rebuilt.isApprox(v, 1e-12));

    const auto q2 = sw::BuildDoubleCollisionMatrix(th.tl, th.tr);
    const MatrixXd dense = q2.Dense();
    for (int k = 0; k < n - 1; ++k) {
      CHECK(q2.IsZeroPair(k, k));
      for (int l = 0; l < n - 1; ++l) {
        for (int i = 0; i < n - 1; ++i) {
          CHECK(dense(i, k * (n - 1) + l) == OracleQ2(th.tl, th.tr, i + 1, k + 1, l + 1));
        }
        CHECK(q2.IsZeroPair(k, l) == dense.col(k * (n - 1) + l).isZero(0.0));
      }
    }

    // Pure and deterministic builders.
    CHECK(sw::BuildSpeedChangeMatrix(th.tl, th.tr) == v);
    CHECK(sw::BuildDoubleCollisionMatrix(th.tl, th.tr).Dense() == dense);
  }
}

TEST_CASE("spacing covariance is tridiagonal for 2a I") {
  for (int n = 3; n <= 8; ++n) {
    for (double a : {0.5, 1.0, 2.5}) {
      const auto cov = sw::BuildSpacingCovariance(2.0 * a * MatrixXd::Identity(n, n),
                                                  VectorXd::Zero(n));
      for (int i = 0; i < n - 1; ++i) {
        for (int k = 0; k < n - 1; ++k) {
          const double expected = i == k ? 4 * a : (std::abs(i - k) == 1 ? -2 * a : 0.0);
          CHECK(cov.A(i, k) == doctest::Approx(expected));
        }
      }
    }
  }
}

TEST_CASE("general model limit coefficients") {
  const auto base = sw::ModelParams::Uniform(2, 2.0, 0.5);
  auto g = sw::GeneralModelParams::PoissonEquivalent(base);
  const auto lim = g.LimitCoefficients();
  CHECK(lim.c_frak.isApprox(2.0 * 2.0 * MatrixXd::Identity(2, 2)));
  CHECK(lim.b.isZero(0.0));
  g.lambda_R = (VectorXd(2) << 0.3, 0.0).finished();
  CHECK(g.LimitCoefficients().b(0) == doctest::Approx(0.3));
  g.c_LL = MatrixXd::Zero(2, 2);
  g.c_RR = MatrixXd::Zero(2, 2);
  CHECK_THROWS_AS(g.LimitCoefficients(), std::invalid_argument);
}

TEST_CASE("json round trip and defaults") {
  nlohmann::json j = {{"n", 3}, {"a", 1.5}, {"theta", 1.0}};
  const auto p = sw::ModelFromJson(j);
  CHECK(p.b().isZero(0.0));
  CHECK(p.c_frak().isApprox(3.0 * MatrixXd::Identity(3, 3)));
  const auto back = sw::ModelFromJson(sw::ModelToJson(p));
  CHECK(back.theta_L() == p.theta_L());
  CHECK(back.c_frak() == p.c_frak());
  CHECK_THROWS(sw::ModelFromJson(nlohmann::json{{"n", 0}, {"a", 1.0}}));
  CHECK(sw::MatrixToCsv(MatrixXd::Identity(2, 2)) == "1,0\n0,1\n");
}
