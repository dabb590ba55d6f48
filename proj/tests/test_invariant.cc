#include <cmath>

#include "doctest.h"
#include "sticky_wedge/invariant.h"
#include "sticky_wedge/rng.h"

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

sw::ModelParams Pair(double theta, VectorXd b, MatrixXd c) {
  return sw::ModelParams(2, 1.0, MatrixXd::Constant(2, 1, theta),
                         MatrixXd::Constant(2, 1, theta), std::move(b), std::move(c));
}

sw::ModelParams CanonicalPair() { return Pair(0.5, Vec({1.0, -1.0}), 2.0 * MatrixXd::Identity(2, 2)); }

// Two particles: spacing drift b2 - b1, variance c11 + c22 - 2 c12 and
// reflection 2 theta give the exponent 2 mu / (A q).
double PairGamma(double theta, const VectorXd& b, const MatrixXd& c) {
  const double mu = b(1) - b(0);
  const double A = c(0, 0) + c(1, 1) - 2 * c(0, 1);
  return 2 * mu / (A * 2 * theta);
}

}  // namespace

TEST_CASE("canonical pair: exponent, normalizer and face mass") {
  const auto law = sw::ComputeStationaryLaw(CanonicalPair());
  CHECK(law.gamma(0) == doctest::Approx(-1.0));
  CHECK(law.C == doctest::Approx(2.0));
  CHECK(law.face_weight(0) == doctest::Approx(1.0));
  CHECK(law.FaceMass()(0) == doctest::Approx(0.5));
  CHECK(law.InteriorMass() == doctest::Approx(0.5));
  CHECK(law.TotalMass() == doctest::Approx(1.0));
  CHECK(law.InteriorDensity(Vec({1.0})) == doctest::Approx(std::exp(-1.0) / 2));
  CHECK(law.InteriorDensity(Vec({-1.0})) == 0.0);

  const auto fixed = sw::ComputeStationaryLaw(CanonicalPair(), sw::FaceWeightConvention::kCorrected);
  CHECK(fixed.gamma(0) == doctest::Approx(-1.0));
  CHECK(fixed.C == doctest::Approx(3.0));
  CHECK(fixed.FaceMass()(0) == doctest::Approx(2.0 / 3.0));
  CHECK(fixed.TotalMass() == doctest::Approx(1.0));
}

TEST_CASE("pair exponent against the one-dimensional formula") {
  for (double c12 : {-0.5, 0.0, 0.5}) {
    for (double drift : {-0.5, -2.0}) {
      const VectorXd b = Vec({0.0, drift});
      const MatrixXd c = (MatrixXd(2, 2) << 3.0, c12, c12, 1.0).finished();
      const auto law = sw::ComputeStationaryLaw(Pair(0.5, b, c));
      CHECK(law.gamma(0) == doctest::Approx(PairGamma(0.5, b, c)));
      CHECK(law.TotalMass() == doctest::Approx(1.0));
    }
  }
  // With two particles skew symmetry pins the reflection to one.
  for (double theta : {0.25, 2.0}) {
    CHECK_THROWS_AS(sw::ComputeStationaryLaw(Pair(theta, Vec({1.0, -1.0}), 2.0 * MatrixXd::Identity(2, 2))),
                    sw::SkewSymmetryFails);
  }
}

TEST_CASE("scaling drift or covariance rescales the exponent") {
  const auto base = sw::ComputeStationaryLaw(CanonicalPair());
  for (double kappa : {0.5, 2.0}) {
    const auto drift = sw::ComputeStationaryLaw(
        Pair(0.5, kappa * Vec({1.0, -1.0}), 2.0 * MatrixXd::Identity(2, 2)));
    CHECK(drift.gamma(0) == doctest::Approx(kappa * base.gamma(0)));
    const auto noise = sw::ComputeStationaryLaw(
        Pair(0.5, Vec({1.0, -1.0}), 2.0 * kappa * MatrixXd::Identity(2, 2)));
    CHECK(noise.gamma(0) == doctest::Approx(base.gamma(0) / kappa));
    CHECK(noise.TotalMass() == doctest::Approx(1.0));
  }
}

TEST_CASE("three particles: total mass by quadrature") {
  const sw::ModelParams p(3, 1.0, MatrixXd::Constant(3, 2, 0.5), MatrixXd::Constant(3, 2, 0.5),
                          Vec({1.0, 0.0, -1.0}), 2.0 * MatrixXd::Identity(3, 3));
  for (auto conv : {sw::FaceWeightConvention::kPublished, sw::FaceWeightConvention::kCorrected}) {
    const auto law = sw::ComputeStationaryLaw(p, conv);
    REQUIRE(law.gamma.maxCoeff() < 0.0);
    const double L0 = 30.0 / -law.gamma(0), L1 = 30.0 / -law.gamma(1);
    const int N = 600;
    const double d0 = L0 / N, d1 = L1 / N;
    double interior = 0.0;
    for (int i = 0; i < N; ++i) {
      for (int k = 0; k < N; ++k) {
        interior += law.InteriorDensity(Vec({(i + 0.5) * d0, (k + 0.5) * d1})) * d0 * d1;
      }
    }
    // Face F_j carries w_j times the interior density restricted to z_j = 0.
    double faces = 0.0;
    for (int k = 0; k < N; ++k) {
      faces += law.face_weight(0) * law.InteriorDensity(Vec({0.0, (k + 0.5) * d1})) * d1;
      faces += law.face_weight(1) * law.InteriorDensity(Vec({(k + 0.5) * d0, 0.0})) * d0;
    }
    CHECK(interior + faces == doctest::Approx(1.0).epsilon(1e-3));
    CHECK(law.TotalMass() == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("error taxonomy") {
  CHECK_THROWS_AS(sw::ComputeStationaryLaw(Pair(0.5, Vec({0.0, 0.0}), 2.0 * MatrixXd::Identity(2, 2))),
                  sw::NotRecurrent);
  CHECK_THROWS_AS(sw::ComputeStationaryLaw(Pair(0.5, Vec({-1.0, 1.0}), 2.0 * MatrixXd::Identity(2, 2))),
                  sw::NotRecurrent);
  CHECK_THROWS_AS(sw::ComputeStationaryLaw(Pair(0.0, Vec({1.0, -1.0}), 2.0 * MatrixXd::Identity(2, 2))),
                  sw::NotRecurrent);
  const sw::ModelParams natural(3, 1.0, MatrixXd::Constant(3, 2, 1.0), MatrixXd::Constant(3, 2, 1.0),
                                Vec({1.0, 0.0, -1.0}), 2.0 * MatrixXd::Identity(3, 3));
  CHECK_THROWS_AS(sw::ComputeStationaryLaw(natural), sw::SkewSymmetryFails);

  sw::StationarityOptions opt;
  opt.horizon = 0.0;
  CHECK_THROWS_AS(sw::EmpiricalStationarityTest(sw::SdeCoefficients::FromModel(CanonicalPair()),
                                                Vec({0.0, 0.0}), opt, 1),
                  std::invalid_argument);
}

TEST_CASE("exponential KS detects a wrong rate") {
  sw::CounterRng rng(3, 0);
  std::vector<double> x(5000);
  for (double& v : x) v = rng.Exponential(2.0);
  CHECK(sw::KsAgainstExponential(x, 2.0, 0.05).pass);
  const auto wrong = sw::KsAgainstExponential(x, 1.0, 0.05);
  CHECK_FALSE(wrong.pass);
  CHECK(wrong.ks.statistic > 0.2);
}

TEST_CASE("long canonical run against both face conventions") {
  const auto coeffs = sw::SdeCoefficients::FromModel(CanonicalPair());
  sw::StationarityOptions opt;
  opt.convention = sw::FaceWeightConvention::kCorrected;
  const auto fixed = sw::EmpiricalStationarityTest(coeffs, Vec({0.0, 0.0}), opt, 7);
  REQUIRE(fixed.gaps.size() == 1);
  CHECK(fixed.gaps[0].boundary_error <= opt.pinned_tol);
  CHECK(fixed.gaps[0].interior_ks.statistic <= opt.ks_tol);
  CHECK(fixed.gaps[0].interior_samples > 1000);
  CHECK(fixed.pass);
  CHECK(fixed.cdf_points[0].size() == 49);

  // The interior law does not depend on the face weight; the pinned
  // fraction sits near 2/3 rather than 1/2.
  opt.convention = sw::FaceWeightConvention::kPublished;
  const auto pub = sw::EmpiricalStationarityTest(coeffs, Vec({0.0, 0.0}), opt, 7);
  CHECK(pub.gaps[0].pinned_fraction == doctest::Approx(fixed.gaps[0].pinned_fraction));
  CHECK(pub.gaps[0].boundary_error > 0.1);
  CHECK_FALSE(pub.pass);

  const auto j = sw::StationarityReportToJson(fixed, opt);
  CHECK(j["gaps"][0].contains("pinned_fraction"));
  CHECK(j["law"]["face_weight_convention"] == "corrected");
}
