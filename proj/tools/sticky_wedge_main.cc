#include <cstdint>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "sticky_wedge/conditions.h"
#include "sticky_wedge/harness.h"
#include "sticky_wedge/invariant.h"
#include "sticky_wedge/lattice.h"
#include "sticky_wedge/renewal.h"
#include "sticky_wedge/sticky_sde.h"

namespace sw = sticky_wedge;

namespace {

constexpr int kExitPass = 0;
constexpr int kExitConditionFailure = 2;
constexpr int kExitAcceptanceFailure = 3;

struct CommonArgs {
  std::string config;
  std::optional<std::uint64_t> seed;
  int threads = 0;
  std::string out;
  std::optional<double> M;
  std::optional<double> horizon;
  std::optional<double> grid;
  std::optional<double> h;
  int replicas = 0;
};

void AddCommon(CLI::App* cmd, CommonArgs& args, bool simulation) {
  // "--h" is the step size, so help keeps only its long form.
  cmd->set_help_flag("--help", "Print this help message and exit");
  cmd->add_option("--config", args.config, "JSON config file")->required();
  cmd->add_option("--seed", args.seed, "Master seed (overrides config)");
  cmd->add_option("--threads", args.threads,
                  "Worker threads (default: STICKY_WEDGE_THREADS or all cores)");
  cmd->add_option("--out", args.out,
                  simulation ? "Output CSV path (default: stdout)"
                             : "Output directory");
  cmd->add_option("--horizon", args.horizon, "Time horizon");
  cmd->add_option("--grid", args.grid, "Output grid spacing");
  cmd->add_option("--h", args.h, "Internal SDE step");
  if (simulation) {
    cmd->add_option("--M", args.M, "Scaling parameter");
  } else {
    cmd->add_option("--replicas", args.replicas, "Replica count override");
  }
}

sw::ExperimentConfig LoadConfig(const CommonArgs& args) {
  sw::ExperimentConfig c = sw::ExperimentConfig::FromFile(args.config);
  if (args.seed) c.seed = *args.seed;
  if (args.horizon) {
    c.horizon = *args.horizon;
    c.stationarity.horizon = *args.horizon;
  }
  if (args.grid) c.grid = *args.grid;
  if (args.h) {
    c.h = *args.h;
    c.stationarity.h = *args.h;
  }
  if (args.M) c.M_list = {*args.M};
  if (args.replicas > 0) {
    c.replicas = args.replicas;
    c.sde_replicas = args.replicas;
  }
  if (!args.out.empty()) c.output_dir = args.out;
  c.Validate();
  return c;
}

void WriteOrPrint(const std::string& path, const std::string& content) {
  if (path.empty()) {
    std::cout << content;
  } else {
    sw::WriteText(path, content);
  }
}

std::string OutDir(const sw::ExperimentConfig& c) {
  return c.output_dir.empty() ? std::string("out") : c.output_dir;
}

int RunCheck(const CommonArgs& args) {
  const sw::ExperimentConfig c = LoadConfig(args);
  const sw::ConditionReport report =
      sw::CheckConditions(sw::MatrixBundle::FromModel(c.model.base));
  const nlohmann::json j = sw::ConditionReportToJson(report);
  std::cout << j.dump(2) << "\n\n" << sw::ConditionReportTable(report);
  if (!args.out.empty()) {
    sw::WriteText((std::filesystem::path(args.out) / "conditions.json").string(),
                  j.dump(2) + "\n");
  }
  return report.completely_S.holds ? kExitPass : kExitConditionFailure;
}

int RunSimulateLattice(const CommonArgs& args, bool renewal) {
  const sw::ExperimentConfig c = LoadConfig(args);
  const double M = c.M_list.back();
  const sw::LatticeState x0 = sw::LatticeState::FromPhysical(c.x0, M);
  sw::LatticeOptions options;
  options.grid = c.grid;
  const sw::PathRecord record =
      renewal ? sw::SimulateGeneral(c.model, x0, c.horizon, c.seed, 0, options)
              : sw::SimulateExclusion(c.model.base, x0, c.horizon, c.seed, 0,
                                      options);
  WriteOrPrint(args.out, sw::LatticePathCsv(record));
  const double err = sw::LedgerIdentityError(record, c.model.base.theta_L(),
                                             c.model.base.theta_R());
  std::cerr << "events " << record.executed_events << ", suppressed "
            << record.suppressed_events << ", ledger error " << err << "\n";
  return kExitPass;
}

int RunSimulateSticky(const CommonArgs& args) {
  const sw::ExperimentConfig c = LoadConfig(args);
  sw::StickyOptions options;
  options.h = c.h;
  options.horizon = c.horizon;
  options.grid = c.grid;
  try {
    const sw::StickyPath path = sw::SimulateSticky(
        sw::SdeCoefficients::FromModel(c.model.base), c.x0, options, c.seed);
    WriteOrPrint(args.out, sw::StickyPathCsv(path));
  } catch (const sw::NoWeakSolution& e) {
    std::cerr << "no weak solution: " << e.what() << "\n";
    return kExitConditionFailure;
  }
  return kExitPass;
}

int RunConverge(const CommonArgs& args) {
  const sw::ExperimentConfig c = LoadConfig(args);
  const int threads = sw::ResolveThreads(args.threads);
  const std::string dir = OutDir(c);
  nlohmann::json manifest = sw::RunManifest(c, threads);
  sw::ConvergenceTable table;
  try {
    table = sw::RunConvergenceStudy(c, threads);
  } catch (const std::runtime_error& e) {
    const sw::ConditionReport report =
        sw::CheckConditions(sw::MatrixBundle::FromModel(c.model.base));
    if (report.completely_S.holds) throw;
    manifest["error"] = e.what();
    manifest["conditions"] = sw::ConditionReportToJson(report);
    sw::EmitManifest(dir, manifest);
    std::cerr << e.what() << "\n";
    return kExitConditionFailure;
  }
  for (const auto& w : table.warnings) std::cerr << "warning: " << w << "\n";
  const bool pass = sw::ConvergencePasses(table);
  manifest["conditions"] = sw::ConditionReportToJson(table.conditions);
  manifest["result"] = sw::ConvergenceToJson(table);
  manifest["pass"] = pass;
  sw::EmitConvergence(dir, table);
  sw::EmitManifest(dir, manifest);
  std::cout << sw::ConvergenceCsv(table);
  return pass ? kExitPass : kExitAcceptanceFailure;
}

int RunStationary(const CommonArgs& args) {
  const sw::ExperimentConfig c = LoadConfig(args);
  const std::string dir = OutDir(c);
  const sw::StationarityReport report = sw::RunStationarity(c);
  nlohmann::json manifest = sw::RunManifest(c, 1);
  manifest["result"] = sw::StationarityReportToJson(report, c.stationarity);
  manifest["pass"] = report.pass;
  sw::EmitManifest(dir, manifest);
  sw::WriteText((std::filesystem::path(dir) / "stationary.json").string(),
                manifest["result"].dump(2) + "\n");
  sw::WriteText((std::filesystem::path(dir) / "stationary_cdf.csv").string(),
                sw::CdfPointsCsv(report));
  std::cout << manifest["result"].dump(2) << "\n";
  return report.pass ? kExitPass : kExitAcceptanceFailure;
}

int RunQv(const CommonArgs& args) {
  const sw::ExperimentConfig c = LoadConfig(args);
  const int threads = sw::ResolveThreads(args.threads);
  const std::string dir = OutDir(c);
  const sw::QvReport report = sw::RunQvCheck(c, threads);
  const bool pass = sw::QvPasses(report);
  nlohmann::json manifest = sw::RunManifest(c, threads);
  manifest["result"] = sw::QvToJson(report);
  manifest["pass"] = pass;
  sw::EmitManifest(dir, manifest);
  sw::WriteText((std::filesystem::path(dir) / "qv.json").string(),
                manifest["result"].dump(2) + "\n");
  std::cout << manifest["result"].dump(2) << "\n";
  return pass ? kExitPass : kExitAcceptanceFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sticky particle systems in the wedge and their diffusion limit"};
  app.set_version_flag("--version", STICKY_WEDGE_VERSION);
  app.require_subcommand(1);

  CommonArgs args;
  auto* check = app.add_subcommand("check", "Report the reflection-matrix conditions");
  auto* lattice = app.add_subcommand("simulate-lattice", "One exclusion-process path as CSV");
  auto* renewal = app.add_subcommand("simulate-renewal", "One renewal-system path as CSV");
  auto* sticky = app.add_subcommand("simulate-sticky", "One sticky-diffusion path as CSV");
  auto* converge = app.add_subcommand("converge", "Convergence study across M");
  auto* stationary = app.add_subcommand("stationary", "Empirical check of the stationary law");
  auto* qv = app.add_subcommand("qv", "Quadratic variation check");
  AddCommon(check, args, false);
  AddCommon(lattice, args, true);
  AddCommon(renewal, args, true);
  AddCommon(sticky, args, true);
  AddCommon(converge, args, false);
  AddCommon(stationary, args, false);
  AddCommon(qv, args, false);

  CLI11_PARSE(app, argc, argv);

  try {
    if (check->parsed()) return RunCheck(args);
    if (lattice->parsed()) return RunSimulateLattice(args, false);
    if (renewal->parsed()) return RunSimulateLattice(args, true);
    if (sticky->parsed()) return RunSimulateSticky(args);
    if (converge->parsed()) return RunConverge(args);
    if (stationary->parsed()) return RunStationary(args);
    if (qv->parsed()) return RunQv(args);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return kExitPass;
}
