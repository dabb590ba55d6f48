// Acceptance suite. Prints one PASS/FAIL line per criterion and exits with 3
// when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <functional>
#include <random>
#include <string>

#include "sticky_wedge/conditions.h"
#include "sticky_wedge/harness.h"
#include "sticky_wedge/invariant.h"
#include "sticky_wedge/lattice.h"
#include "sticky_wedge/lcp.h"
#include "sticky_wedge/renewal.h"
#include "sticky_wedge/rng.h"
#include "sticky_wedge/stats.h"
#include "sticky_wedge/sticky_sde.h"

namespace sticky_wedge {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Pinned tolerances.
constexpr double kConditionSeconds = 1.0;
constexpr double kClosedFormTol = 1e-12;
constexpr double kPinnedTarget = 0.5;
constexpr double kPinnedTol = 0.03;
constexpr double kInteriorKsTol = 0.05;
constexpr double kLedgerTol = 1e-9;
constexpr double kLcpResidualTol = 1e-10;
constexpr std::int64_t kLcpSteps = 1000000;
constexpr double kQvTol = 0.05;
constexpr double kKsPValue = 0.01;
constexpr double kSeMultiple = 3.0;
constexpr std::uint64_t kSeed = 7;

struct Outcome {
  bool pass = false;
  std::string detail;
};

// Largest ledger error seen by any particle run in this suite.
double g_ledger_error = 0.0;
std::int64_t g_ledger_runs = 0;

void Ledger(const PathRecord& record, const ModelParams& params) {
  g_ledger_error = std::max(
      g_ledger_error,
      LedgerIdentityError(record, params.theta_L(), params.theta_R()));
  ++g_ledger_runs;
}

std::string Format(const char* fmt, ...) __attribute__((format(printf, 1, 2)));
std::string Format(const char* fmt, ...) {
  char buf[512];
  va_list args;
  va_start(args, fmt);
  std::vsnprintf(buf, sizeof buf, fmt, args);
  va_end(args);
  return buf;
}

ModelParams CanonicalPair() {
  return ModelParams(2, 1.0, MatrixXd::Constant(2, 1, 0.5),
                     MatrixXd::Constant(2, 1, 0.5),
                     (VectorXd(2) << 1.0, -1.0).finished(),
                     2.0 * MatrixXd::Identity(2, 2));
}

ExperimentConfig CanonicalStudy(Statistic statistic) {
  ExperimentConfig c;
  c.model = GeneralModelParams::PoissonEquivalent(ModelParams::Uniform(2, 1.0, 0.5));
  c.kind = ExperimentKind::kConverge;
  c.simulator = SimulatorKind::kLattice;
  c.statistic = statistic;
  c.M_list = {100.0, 400.0, 1600.0};
  c.replicas = c.sde_replicas = 200;
  c.horizon = 10.0;
  c.h = 1e-3;
  c.grid = 0.01;
  c.seed = kSeed;
  c.x0 = VectorXd::Zero(2);
  return c;
}

Outcome Conditions() {
  const auto start = std::chrono::steady_clock::now();
  const auto nat = MatrixBundle::FromModel(ModelParams::Uniform(3, 1.0, 1.0));
  const auto frz = MatrixBundle::FromModel(ModelParams::Freeze(3, 1.0, 1.0));
  const ConditionReport a = CheckConditions(nat);
  const ConditionReport b = CheckConditions(frz);
  const double secs = std::chrono::duration<double>(
                          std::chrono::steady_clock::now() - start).count();
  const bool certs = VerifyCompletelySCertificates(nat.Q, a.completely_S) &&
                     VerifyJointCertificates(nat.Q, nat.Q2, a.jointly_completely_S);
  Outcome o;
  o.pass = a.completely_S.holds && a.jointly_completely_S.holds && certs &&
           b.completely_S.holds && !b.jointly_completely_S.holds &&
           secs < kConditionSeconds;
  o.detail = Format("natural completely-S=%d jointly=%d certificates=%d; freeze completely-S=%d jointly=%d; %.3f s",
                    a.completely_S.holds, a.jointly_completely_S.holds, certs,
                    b.completely_S.holds, b.jointly_completely_S.holds, secs);
  return o;
}

Outcome InvariantLaw() {
  const ModelParams p = CanonicalPair();
  const StationaryLaw law = ComputeStationaryLaw(p);
  const bool closed = std::abs(law.gamma(0) + 1.0) <= kClosedFormTol &&
                      std::abs(law.C - 2.0) <= kClosedFormTol &&
                      std::abs(law.FaceMass()(0) - 0.5) <= kClosedFormTol;
  StationarityOptions opt;
  opt.h = 1e-3;
  opt.horizon = 2000.0;
  opt.burn_in = 100.0;
  opt.pinned_tol = kPinnedTol;
  opt.ks_tol = kInteriorKsTol;
  const StationarityReport rep = EmpiricalStationarityTest(
      SdeCoefficients::FromModel(p), VectorXd::Zero(2), opt, kSeed);
  const GapStationarity& g = rep.gaps[0];
  const double corrected =
      ComputeStationaryLaw(p, FaceWeightConvention::kCorrected).FaceMass()(0);
  Outcome o;
  o.pass = closed && std::abs(g.pinned_fraction - kPinnedTarget) <= kPinnedTol &&
           g.interior_ks.statistic <= kInteriorKsTol;
  o.detail = Format(
      "gamma=%.6g C=%.6g face mass=%.6g; pinned fraction %.4f (target %.2f +- %.2f, "
      "corrected weight predicts %.4f); interior KS %.4f; %.1f s",
      law.gamma(0), law.C, law.FaceMass()(0), g.pinned_fraction, kPinnedTarget,
      kPinnedTol, corrected, g.interior_ks.statistic, rep.runtime_seconds);
  return o;
}

Outcome Convergence(int threads) {
  const ConvergenceTable t =
      RunConvergenceStudy(CanonicalStudy(Statistic::kOccupationFraction), threads);
  g_ledger_error = std::max(g_ledger_error, t.max_ledger_error);
  g_ledger_runs += static_cast<std::int64_t>(t.rows.size()) * 200;
  const ConvergenceRow& last = t.rows.back();
  Outcome o;
  o.pass = t.distance_decreasing.value_or(false) &&
           last.distance <= kSeMultiple * last.pooled_se;
  o.detail = Format("distance %.4f / %.4f / %.4f, SDE mean %.4f, last pooled SE %.4f",
                    t.rows[0].distance, t.rows[1].distance, t.rows[2].distance,
                    t.reference.mean, last.pooled_se);
  return o;
}

Outcome DeltaVanishing(int threads) {
  const ConvergenceTable t =
      RunConvergenceStudy(CanonicalStudy(Statistic::kSupDelta), threads);
  g_ledger_error = std::max(g_ledger_error, t.max_ledger_error);
  g_ledger_runs += static_cast<std::int64_t>(t.rows.size()) * 200;
  Outcome o;
  o.pass = t.distance_decreasing.value_or(false);
  o.detail = Format("median sup|Delta^R| %.4f / %.4f / %.4f", t.rows[0].median,
                    t.rows[1].median, t.rows[2].median);
  return o;
}

MatrixXd RandomCompletelyS(std::mt19937_64& gen, int d) {
  std::uniform_real_distribution<double> u(0.0, 2.0);
  while (true) {
    MatrixXd tl(d + 1, d), tr(d + 1, d);
    for (int i = 0; i <= d; ++i) {
      for (int j = 0; j < d; ++j) {
        tl(i, j) = u(gen);
        tr(i, j) = u(gen);
      }
    }
    const MatrixXd Q = BuildReflectionMatrix(BuildSpeedChangeMatrix(tl, tr));
    if (IsCompletelyS(Q).holds) return Q;
  }
}

Outcome Lcp() {
  std::mt19937_64 gen(kSeed);
  CounterRng rng(kSeed, 0);
  const int matrices = 200;
  const std::int64_t per = kLcpSteps / matrices;
  double worst = 0.0;
  double min_z = 0.0;
  std::int64_t steps = 0;
  for (int m = 0; m < matrices; ++m) {
    const int d = 1 + m % 5;
    const MatrixXd Q = RandomCompletelyS(gen, d);
    VectorXd z = VectorXd::Zero(d);
    VectorXd db(d);
    for (std::int64_t k = 0; k < per; ++k) {
      for (int j = 0; j < d; ++j) db(j) = 0.1 * rng.Normal();
      const ReflectionStep s = LcpReflectionStep(Q, z, db, k);
      worst = std::max(worst, ComplementarityResidual(s));
      min_z = std::min(min_z, s.z_new.minCoeff());
      z = s.z_new;
      ++steps;
    }
  }
  Outcome o;
  o.pass = worst <= kLcpResidualTol && min_z >= 0.0 && steps >= kLcpSteps;
  o.detail = Format("%lld steps over %d matrices, max residual %.3g, min z %.3g",
                    static_cast<long long>(steps), matrices, worst, min_z);
  return o;
}

Outcome TimeChangeChecks() {
  const SdeCoefficients c = SdeCoefficients::FromModel(ModelParams::Uniform(2, 1.0, 0.5));
  StickyOptions opt;
  opt.h = 1e-3;
  opt.horizon = 10.0;
  opt.grid = 0.01;
  double residual = 0.0, measure = 0.0;
  bool flat = true;
  for (int r = 0; r < 50; ++r) {
    const StickyPath p = SimulateSticky(c, VectorXd::Zero(2), opt, kSeed, r);
    for (std::size_t g = 0; g < p.t.size(); ++g) {
      residual = std::max(residual, p.time_change.GraphResidual(p.t[g]));
      // Measure identity per unit interval of sticky time.
      if (g >= 100) {
        const double dt = p.t[g] - p.t[g - 100];
        const double dm = (p.sigma[g] + p.occupation[g].sum()) -
                          (p.sigma[g - 100] + p.occupation[g - 100].sum());
        measure = std::max(measure, std::abs(dm - dt));
      }
    }
    // Pushing only at the boundary.
    for (std::int64_t k = 0; k < p.srbm.steps(); ++k) {
      const VectorXd dL = p.srbm.Lambda[k + 1] - p.srbm.Lambda[k];
      for (int j = 0; j < dL.size(); ++j) {
        if (dL(j) < 0.0 || (dL(j) > 0.0 && p.srbm.z[k + 1](j) != 0.0)) flat = false;
      }
    }
  }
  Outcome o;
  o.pass = residual <= opt.h && flat && measure <= opt.h;
  o.detail = Format("max graph residual %.3g (h = %.0e), Lambda flat off boundary=%d, "
                    "measure identity error %.3g per unit",
                    residual, opt.h, flat, measure);
  return o;
}

Outcome QuadraticVariation(int threads) {
  ExperimentConfig c = CanonicalStudy(Statistic::kOccupationFraction);
  c.kind = ExperimentKind::kQv;
  c.M_list = {1600.0};
  c.replicas = 50;
  const QvReport q = RunQvCheck(c, threads);
  double sticky = 0.0, lattice = 0.0;
  for (const auto& x : q.sticky) sticky = std::max(sticky, x.relative_error);
  for (const auto& x : q.lattice) lattice = std::max(lattice, x.relative_error);
  Outcome o;
  o.pass = QvPasses(q, kQvTol);
  o.detail = Format("pooled relative error: sticky %.4f, lattice %.4f (M = 1600, %d replicas)",
                    sticky, lattice, c.replicas);
  return o;
}

Outcome CrossSimulator() {
  const ModelParams base = ModelParams::Uniform(2, 1.0, 0.5);
  const GeneralModelParams g = GeneralModelParams::PoissonEquivalent(base);
  const double M = 400.0, T = 10.0;
  const LatticeState x0 = LatticeState::FromPhysical(VectorXd::Zero(2), M);
  const InterarrivalSpec spec = BuildInterarrivalSpec(g, M);
  std::vector<double> xp, xr, op, orr;
  for (int r = 0; r < 500; ++r) {
    const PathRecord a = SimulateExclusion(base, x0, T, kSeed, r);
    const PathRecord b = SimulateGeneral(g, spec, x0, T, kSeed, 1000 + r);
    Ledger(a, base);
    Ledger(b, base);
    xp.push_back(a.final().x(0));
    xr.push_back(b.final().x(0));
    op.push_back(CollisionOccupation(a).total / T);
    orr.push_back(CollisionOccupation(b).total / T);
  }
  const KsResult ks = KsTwoSample(xp, xr);
  const double diff = std::abs(Mean(op) - Mean(orr));
  const double se = std::hypot(StandardError(op), StandardError(orr));
  Outcome o;
  o.pass = ks.p_value > kKsPValue && diff <= kSeMultiple * se;
  o.detail = Format("KS p = %.3f on X_1(10); occupation means %.4f vs %.4f (SE %.4f)",
                    ks.p_value, Mean(op), Mean(orr), se);
  return o;
}

// Extra particle runs so the ledger check covers several shapes.
void LedgerSweep() {
  const double M = 256.0;
  const std::vector<ModelParams> models = {
      ModelParams::Uniform(3, 1.0, 1.0), ModelParams::Freeze(3, 1.0, 1.0),
      ModelParams::Uniform(4, 0.7, 0.3), ModelParams::Uniform(1, 1.0, 0.0)};
  for (const auto& p : models) {
    const LatticeState x0 = LatticeState::FromPhysical(VectorXd::Zero(p.n()), M);
    for (int r = 0; r < 20; ++r) Ledger(SimulateExclusion(p, x0, 5.0, kSeed, r), p);
  }
  GeneralModelParams gamma = GeneralModelParams::PoissonEquivalent(ModelParams::Uniform(3, 1.0, 0.5));
  gamma.c_LL = gamma.c_RR = MatrixXd::Identity(3, 3) / 2.0;
  gamma.families.fast_L.assign(3, InterarrivalFamily::kGamma);
  gamma.families.fast_R.assign(3, InterarrivalFamily::kGamma);
  gamma.families.slow = InterarrivalFamily::kGamma;
  gamma.families.slow_shape = 2.0;
  const InterarrivalSpec spec = BuildInterarrivalSpec(gamma, M);
  const LatticeState x0 = LatticeState::FromPhysical(VectorXd::Zero(3), M);
  for (int r = 0; r < 20; ++r) {
    Ledger(SimulateGeneral(gamma, spec, x0, 5.0, kSeed, r), gamma.base);
  }
}

Outcome LedgerIdentity() {
  LedgerSweep();
  Outcome o;
  o.pass = g_ledger_error <= kLedgerTol;
  o.detail = Format("max |X - reconstruction| %.3g over %lld runs", g_ledger_error,
                    static_cast<long long>(g_ledger_runs));
  return o;
}

Outcome ExistenceGate() {
  SdeCoefficients c = SdeCoefficients::FromModel(ModelParams::Uniform(2, 1.0, 0.5));
  c.V = (MatrixXd(2, 1) << 0.5, -0.5).finished();  // Q = [-1]
  Outcome o;
  try {
    SimulateSticky(c, VectorXd::Zero(2), StickyOptions{}, kSeed);
    o.detail = "simulation ran";
  } catch (const NoWeakSolution& e) {
    o.pass = true;
    o.detail = Format("Q = [-1] rejected: %s", e.what());
  }
  return o;
}

}  // namespace
}  // namespace sticky_wedge

int main() {
  using namespace sticky_wedge;
  const int threads = ResolveThreads(0);
  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> run;
  };
  // The ledger criterion runs last so it sees every particle run above.
  const std::vector<Criterion> criteria = {
      {1, "condition checkers", Conditions},
      {2, "invariant law", InvariantLaw},
      {3, "lattice to SDE convergence", [&] { return Convergence(threads); }},
      {5, "Delta vanishing", [&] { return DeltaVanishing(threads); }},
      {6, "LCP reflection", Lcp},
      {7, "time change", TimeChangeChecks},
      {8, "quadratic variation", [&] { return QuadraticVariation(threads); }},
      {9, "cross-simulator equivalence", CrossSimulator},
      {10, "existence gate", ExistenceGate},
      {4, "decomposition ledger", LedgerIdentity},
  };
  std::vector<std::pair<int, std::string>> lines;
  int failures = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(
                            std::chrono::steady_clock::now() - start).count();
    failures += !o.pass;
    lines.emplace_back(c.id, Format("%s %2d %s: %s [%.1f s]", o.pass ? "PASS" : "FAIL",
                                    c.id, c.name, o.detail.c_str(), secs));
  }
  std::sort(lines.begin(), lines.end());
  for (const auto& [id, line] : lines) std::printf("%s\n", line.c_str());
  std::printf("%d of %zu criteria passed\n", static_cast<int>(lines.size()) - failures,
              lines.size());
  return failures == 0 ? 0 : 3;
}
