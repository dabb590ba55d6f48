#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"
#include "sticky_wedge/conditions.h"
#include "sticky_wedge/invariant.h"
#include "sticky_wedge/model.h"
#include "sticky_wedge/path_record.h"
#include "sticky_wedge/sticky_sde.h"

namespace sticky_wedge {

enum class ExperimentKind { kCheck, kConverge, kStationary, kQv };
enum class Statistic { kOccupationFraction, kFinalPosition, kSupDelta };
enum class SimulatorKind { kLattice, kRenewal };

ExperimentKind ParseExperimentKind(const std::string& name);
Statistic ParseStatistic(const std::string& name);
SimulatorKind ParseSimulator(const std::string& name);
std::string StatisticName(Statistic s);

// Config file layout:
//   {"model": {...}, "experiment": {"kind": ..., "M": [...], ...}}
// Model keys may also sit at the top level when "model" is absent.
struct ExperimentConfig {
  nlohmann::json raw;
  GeneralModelParams model =
      GeneralModelParams::PoissonEquivalent(ModelParams::Uniform(2, 1.0, 1.0));
  ExperimentKind kind = ExperimentKind::kCheck;
  SimulatorKind simulator = SimulatorKind::kLattice;
  Statistic statistic = Statistic::kOccupationFraction;
  std::vector<double> M_list = {100.0, 400.0, 1600.0};
  int replicas = 200;
  int sde_replicas = 200;  // reference replicas for convergence studies
  double horizon = 10.0;
  double h = 1e-3;
  double grid = 0.01;
  std::uint64_t seed = 0;
  Eigen::VectorXd x0;  // physical start; defaults to the origin
  StationarityOptions stationarity;
  std::string output_dir;

  static ExperimentConfig FromJson(const nlohmann::json& j);
  static ExperimentConfig FromFile(const std::string& path);
  // Throws std::invalid_argument on violations (M not positive and
  // increasing, replicas < 1, nonpositive horizon/h/grid).
  void Validate() const;
};

// Worker count: explicit value if positive, else STICKY_WEDGE_THREADS, else
// hardware concurrency (at least 1).
int ResolveThreads(int requested);

// Runs task(i) for i in [0, count) on `threads` workers pulling indices from
// a shared counter. The first exception is rethrown after all workers stop.
void ParallelFor(std::int64_t count, int threads,
                 const std::function<void(std::int64_t)>& task);

// Stream id of replica r at M-index m (the SDE reference uses m = -1).
std::uint64_t ReplicaStream(int m_index, int replica);

struct ConvergenceRow {
  double M = 0.0;
  int replicas = 0;
  double mean = 0.0;
  double se = 0.0;
  double median = 0.0;
  double distance = 0.0;   // to the SDE reference
  double pooled_se = 0.0;  // sqrt(se^2 + se_ref^2); 0 for KS distances
  double ks_p = 1.0;       // final-position statistic only
};

struct ConvergenceTable {
  Statistic statistic = Statistic::kOccupationFraction;
  SimulatorKind simulator = SimulatorKind::kLattice;
  std::vector<ConvergenceRow> rows;
  ConvergenceRow reference;  // M = 0 marks the SDE
  std::vector<std::vector<double>> samples;  // per M, replica order
  std::vector<double> reference_samples;
  ConditionReport conditions;
  bool assumption_a = false;
  bool assumption_b = false;
  std::vector<std::string> warnings;
  // Empty when there is a single M.
  std::optional<bool> distance_decreasing;
  double max_ledger_error = 0.0;
};

// Throws std::runtime_error when Q is not completely-S; failing the joint
// condition only adds a warning.
ConvergenceTable RunConvergenceStudy(const ExperimentConfig& config,
                                     int threads);

struct QvCoordinate {
  double realized = 0.0;  // pooled over replicas
  double expected = 0.0;  // c_ii * open time, pooled
  double relative_error = 0.0;
  double worst_path_error = 0.0;
};

struct QvReport {
  double M = 0.0;  // lattice runs only
  std::vector<QvCoordinate> lattice;
  std::vector<QvCoordinate> sticky;
  Eigen::MatrixXd sticky_cross;     // pooled realized covariation / sigma
  Eigen::MatrixXd sticky_cross_se;  // across-replica standard error
  // Set when the sticky part was not run (n = 1, or Q not completely-S).
  std::string sticky_skipped;
};

// Lattice paths at the largest M and sticky paths at h, both over horizon.
// Sticky paths are skipped when the SDE has no weak solution.
QvReport RunQvCheck(const ExperimentConfig& config, int threads);

// Pass rules used for exit codes: the distance trend must decrease and, for
// mean statistics, the largest M must sit within 3 pooled standard errors.
bool ConvergencePasses(const ConvergenceTable& table);
// Every pooled relative error within tol; a skipped sticky part is ignored.
bool QvPasses(const QvReport& report, double tol = 0.05);

// Wrapper around EmpiricalStationarityTest with the config's settings.
StationarityReport RunStationarity(const ExperimentConfig& config);

// Output emission. Every writer creates the directory if needed and throws
// std::runtime_error naming the path on I/O failure.
nlohmann::json RunManifest(const ExperimentConfig& config, int threads);
void WriteText(const std::string& path, const std::string& content);
void EmitManifest(const std::string& dir, const nlohmann::json& manifest);
std::string ConvergenceCsv(const ConvergenceTable& table);
std::string ConvergenceSvg(const ConvergenceTable& table);
nlohmann::json ConvergenceToJson(const ConvergenceTable& table);
nlohmann::json QvToJson(const QvReport& report);
// Columns: t, X_1..X_n, occ_1..occ_{n-1}, open_time, A_M_i, then
// I_L, I_R, Delta_L, Delta_R entries named <field>_<i>_<j> (one-based).
std::string LatticePathCsv(const PathRecord& record);
// Columns: t, X_1..X_n, Lambda_1..Lambda_{n-1}, pinned_1..pinned_{n-1}, sigma.
std::string StickyPathCsv(const StickyPath& path);
// Columns: gap, x, empirical, theoretical.
std::string CdfPointsCsv(const StationarityReport& report);
void EmitConvergence(const std::string& dir, const ConvergenceTable& table);

}  // namespace sticky_wedge
