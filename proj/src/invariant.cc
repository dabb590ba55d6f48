#include "sticky_wedge/invariant.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

#include "sticky_wedge/conditions.h"
#include "sticky_wedge/sticky_sde.h"

namespace sticky_wedge {

double StationaryLaw::InteriorDensity(const Eigen::VectorXd& z) const {
  if (z.size() && z.minCoeff() < 0.0) return 0.0;
  return std::exp(gamma.dot(z)) / C;
}

double StationaryLaw::InteriorMass() const {
  return (-gamma).array().inverse().prod() / C;
}

Eigen::VectorXd StationaryLaw::FaceMass() const {
  const int d = static_cast<int>(gamma.size());
  Eigen::VectorXd mass(d);
  for (int j = 0; j < d; ++j) {
    double m = face_weight(j) / C;
    for (int k = 0; k < d; ++k) {
      if (k != j) m /= -gamma(k);
    }
    mass(j) = m;
  }
  return mass;
}

StationaryLaw ComputeStationaryLaw(const SdeCoefficients& coeffs,
                                   FaceWeightConvention convention) {
  const SpacingCovariance sc = BuildSpacingCovariance(coeffs.c_frak, coeffs.b);
  const Eigen::MatrixXd Q = BuildReflectionMatrix(coeffs.V);
  RecurrenceResult rec;
  try {
    rec = IsPositiveRecurrent(Q, sc.mu);
  } catch (const SingularMatrixError& e) {
    throw NotRecurrent(std::string("recurrence cannot hold: ") + e.what());
  }
  if (!rec.holds) {
    std::ostringstream os;
    os << "not positive recurrent: Q^-1 mu = (" << rec.q_inv_mu.transpose()
       << ") is not strictly negative";
    throw NotRecurrent(os.str());
  }
  const SkewSymmetryResult skew = CheckSkewSymmetry(sc.A, Q);
  if (!skew.holds) {
    std::ostringstream os;
    os << "skew symmetry fails: max |2A - QD - DQ^T| = "
       << skew.max_abs_residual;
    throw SkewSymmetryFails(os.str());
  }
  StationaryLaw law;
  law.convention = convention;
  law.gamma = 2.0 * sc.D.cwiseInverse().cwiseProduct(rec.q_inv_mu);
  law.face_weight = convention == FaceWeightConvention::kPublished
                        ? Eigen::VectorXd(sc.D.cwiseSqrt() / 2.0)
                        : Eigen::VectorXd(sc.D / 2.0);
  law.C = (1.0 - law.face_weight.dot(law.gamma)) /
          (-law.gamma).array().prod();
  return law;
}

StationaryLaw ComputeStationaryLaw(const ModelParams& params,
                                   FaceWeightConvention convention) {
  return ComputeStationaryLaw(SdeCoefficients::FromModel(params), convention);
}

ExponentialFit KsAgainstExponential(const std::vector<double>& samples,
                                    double rate, double tol) {
  ExponentialFit fit;
  fit.ks = KsOneSample(samples, [rate](double x) {
    return x <= 0.0 ? 0.0 : -std::expm1(-rate * x);
  });
  fit.pass = fit.ks.statistic <= tol;
  return fit;
}

StationarityReport EmpiricalStationarityTest(const SdeCoefficients& coeffs,
                                             const Eigen::VectorXd& x0,
                                             const StationarityOptions& options,
                                             std::uint64_t seed,
                                             std::uint64_t replica) {
  if (!(options.horizon > 0.0)) {
    throw std::invalid_argument("stationarity window is empty after burn-in");
  }
  if (!(options.burn_in >= 0.0) || !(options.thin > 0.0)) {
    throw std::invalid_argument("burn-in must be >= 0 and thinning positive");
  }
  const auto start = std::chrono::steady_clock::now();
  StationarityReport report;
  report.law = ComputeStationaryLaw(coeffs, options.convention);
  const int d = coeffs.n() - 1;

  StickyOptions sticky;
  sticky.h = options.h;
  sticky.horizon = options.burn_in + options.horizon;
  sticky.grid = options.thin;
  const StickyPath path = SimulateSticky(coeffs, x0, sticky, seed, replica);

  // First grid index at or after the burn-in.
  std::int64_t first = 0;
  while (first < static_cast<std::int64_t>(path.t.size()) &&
         path.t[first] < options.burn_in - 1e-9) {
    ++first;
  }
  const std::int64_t last = static_cast<std::int64_t>(path.t.size()) - 1;
  const double window = path.t[last] - path.t[first];
  const Eigen::VectorXd face = report.law.FaceMass();

  report.pass = true;
  report.cdf_points.resize(d);
  for (int j = 0; j < d; ++j) {
    GapStationarity gap;
    gap.face_mass = face(j);
    gap.pinned_fraction =
        (path.occupation[last](j) - path.occupation[first](j)) / window;
    gap.boundary_error = std::abs(gap.pinned_fraction - gap.face_mass);
    std::vector<double> samples;
    for (std::int64_t k = first; k <= last; ++k) {
      if (path.IsPinned(k, j)) continue;
      const auto x = path.X[k];
      // Open stretches between two pushes sit exactly on the face.
      const double gap_now = x(j + 1) - x(j);
      if (gap_now > 0.0) samples.push_back(gap_now);
    }
    gap.interior_samples = static_cast<std::int64_t>(samples.size());
    const double rate = -report.law.gamma(j);
    bool ks_ok = false;
    if (!samples.empty()) {
      const ExponentialFit fit = KsAgainstExponential(samples, rate, options.ks_tol);
      gap.interior_ks = fit.ks;
      ks_ok = fit.pass;
      std::sort(samples.begin(), samples.end());
      const int points = 50;
      for (int p = 1; p < points; ++p) {
        const std::size_t idx = p * samples.size() / points;
        const std::size_t at = std::min(idx, samples.size() - 1);
        report.cdf_points[j].push_back(
            {samples[at], static_cast<double>(at + 1) / samples.size()});
      }
    }
    gap.pass = gap.boundary_error <= options.pinned_tol && ks_ok;
    report.pass = report.pass && gap.pass;
    report.gaps.push_back(gap);
  }
  report.runtime_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  return report;
}

nlohmann::json StationaryLawToJson(const StationaryLaw& law) {
  nlohmann::json j;
  j["gamma"] = VectorToJson(law.gamma);
  j["C"] = law.C;
  j["face_weight"] = VectorToJson(law.face_weight);
  j["face_weight_convention"] =
      law.convention == FaceWeightConvention::kPublished ? "published"
                                                         : "corrected";
  j["interior_mass"] = law.InteriorMass();
  j["face_mass"] = VectorToJson(law.FaceMass());
  j["total_mass"] = law.TotalMass();
  return j;
}

nlohmann::json StationarityReportToJson(const StationarityReport& report,
                                        const StationarityOptions& options) {
  nlohmann::json j;
  j["law"] = StationaryLawToJson(report.law);
  j["settings"] = {{"h", options.h},
                   {"horizon", options.horizon},
                   {"burn_in", options.burn_in},
                   {"thin", options.thin},
                   {"pinned_tol", options.pinned_tol},
                   {"ks_tol", options.ks_tol}};
  nlohmann::json gaps = nlohmann::json::array();
  for (const auto& g : report.gaps) {
    gaps.push_back({{"face_mass", g.face_mass},
                    {"pinned_fraction", g.pinned_fraction},
                    {"boundary_error", g.boundary_error},
                    {"interior_ks", g.interior_ks.statistic},
                    {"interior_ks_p", g.interior_ks.p_value},
                    {"interior_samples", g.interior_samples},
                    {"pass", g.pass}});
  }
  j["gaps"] = gaps;
  j["pass"] = report.pass;
  j["runtime_seconds"] = report.runtime_seconds;
  return j;
}

}  // namespace sticky_wedge
