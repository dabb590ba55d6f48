#include "sticky_wedge/harness.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "sticky_wedge/lattice.h"
#include "sticky_wedge/renewal.h"
#include "sticky_wedge/stats.h"
#include "sticky_wedge/sticky_sde.h"

namespace sticky_wedge {

namespace {

constexpr int kReferenceIndex = -1;

SdeCoefficients ReferenceCoefficients(const ExperimentConfig& config) {
  if (config.simulator == SimulatorKind::kRenewal) {
    return config.model.LimitCoefficients();
  }
  const ModelParams& base = config.model.base;
  const ModelParams limit = ModelParams::ExclusionLimit(
      base.n(), base.a(), base.theta_L(), base.theta_R());
  return SdeCoefficients::FromModel(limit);
}

PathRecord RunParticleSystem(const ExperimentConfig& config,
                             const InterarrivalSpec* spec, double M,
                             std::uint64_t stream) {
  const LatticeState x0 = LatticeState::FromPhysical(config.x0, M);
  LatticeOptions options;
  options.grid = config.grid;
  if (config.simulator == SimulatorKind::kRenewal) {
    return SimulateGeneral(config.model, *spec, x0, config.horizon, config.seed,
                           stream, options);
  }
  return SimulateExclusion(config.model.base, x0, config.horizon, config.seed,
                           stream, options);
}

double LatticeStatistic(Statistic s, const PathRecord& record) {
  switch (s) {
    case Statistic::kOccupationFraction:
      return CollisionOccupation(record).total / record.horizon;
    case Statistic::kFinalPosition:
      return record.final().x(0);
    case Statistic::kSupDelta:
      return std::max(record.sup_abs_delta_L.size() ? record.sup_abs_delta_L.maxCoeff() : 0.0,
                      record.sup_abs_delta_R.size() ? record.sup_abs_delta_R.maxCoeff() : 0.0);
  }
  return 0.0;
}

double StickyStatistic(Statistic s, const StickyPath& path) {
  switch (s) {
    case Statistic::kOccupationFraction:
      return 1.0 - BoundaryOccupation(path).sigma / path.horizon;
    case Statistic::kFinalPosition:
      return path.X[path.X.size() - 1](0);
    case Statistic::kSupDelta:
      return 0.0;
  }
  return 0.0;
}

ConvergenceRow Summarize(double M, const std::vector<double>& x) {
  ConvergenceRow row;
  row.M = M;
  row.replicas = static_cast<int>(x.size());
  row.mean = Mean(x);
  row.se = StandardError(x);
  row.median = Median(x);
  return row;
}

std::string FormatDouble(double v) {
  std::ostringstream os;
  os << std::setprecision(10) << v;
  return os.str();
}

}  // namespace

ExperimentKind ParseExperimentKind(const std::string& name) {
  if (name == "check") return ExperimentKind::kCheck;
  if (name == "converge") return ExperimentKind::kConverge;
  if (name == "stationary") return ExperimentKind::kStationary;
  if (name == "qv") return ExperimentKind::kQv;
  throw std::invalid_argument("unknown experiment kind '" + name + "'");
}

Statistic ParseStatistic(const std::string& name) {
  if (name == "occupation_fraction") return Statistic::kOccupationFraction;
  if (name == "final_position") return Statistic::kFinalPosition;
  if (name == "sup_delta") return Statistic::kSupDelta;
  throw std::invalid_argument("unknown statistic '" + name + "'");
}

SimulatorKind ParseSimulator(const std::string& name) {
  if (name == "lattice") return SimulatorKind::kLattice;
  if (name == "renewal") return SimulatorKind::kRenewal;
  throw std::invalid_argument("unknown simulator '" + name + "'");
}

std::string StatisticName(Statistic s) {
  switch (s) {
    case Statistic::kOccupationFraction:
      return "occupation_fraction";
    case Statistic::kFinalPosition:
      return "final_position";
    case Statistic::kSupDelta:
      return "sup_delta";
  }
  return "unknown";
}

ExperimentConfig ExperimentConfig::FromJson(const nlohmann::json& j) {
  ExperimentConfig c;
  c.raw = j;
  const nlohmann::json& model = j.contains("model") ? j.at("model") : j;
  c.model = GeneralModelFromJson(model);
  c.x0 = Eigen::VectorXd::Zero(c.model.base.n());
  c.sde_replicas = c.replicas;
  if (j.contains("experiment")) {
    const auto& e = j.at("experiment");
    if (e.contains("kind")) c.kind = ParseExperimentKind(e.at("kind").get<std::string>());
    if (e.contains("simulator")) c.simulator = ParseSimulator(e.at("simulator").get<std::string>());
    if (e.contains("statistic")) c.statistic = ParseStatistic(e.at("statistic").get<std::string>());
    if (e.contains("M")) c.M_list = e.at("M").get<std::vector<double>>();
    if (e.contains("replicas")) {
      c.replicas = e.at("replicas").get<int>();
      c.sde_replicas = c.replicas;
    }
    if (e.contains("sde_replicas")) c.sde_replicas = e.at("sde_replicas").get<int>();
    if (e.contains("horizon")) c.horizon = e.at("horizon").get<double>();
    if (e.contains("h")) c.h = e.at("h").get<double>();
    if (e.contains("grid")) c.grid = e.at("grid").get<double>();
    if (e.contains("seed")) c.seed = e.at("seed").get<std::uint64_t>();
    if (e.contains("x0")) c.x0 = VectorFromJson(e.at("x0"));
    if (e.contains("burn_in")) c.stationarity.burn_in = e.at("burn_in").get<double>();
    if (e.contains("thin")) c.stationarity.thin = e.at("thin").get<double>();
    if (e.contains("face_weight")) {
      const auto fw = e.at("face_weight").get<std::string>();
      if (fw == "published") {
        c.stationarity.convention = FaceWeightConvention::kPublished;
      } else if (fw == "corrected") {
        c.stationarity.convention = FaceWeightConvention::kCorrected;
      } else {
        throw std::invalid_argument("face_weight must be 'published' or 'corrected'");
      }
    }
  }
  if (j.contains("output_dir")) c.output_dir = j.at("output_dir").get<std::string>();
  c.stationarity.h = c.h;
  if (j.contains("experiment") && j.at("experiment").contains("horizon")) {
    c.stationarity.horizon = c.horizon;
  }
  return c;
}

ExperimentConfig ExperimentConfig::FromFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument("config " + path + " is not valid JSON: " + e.what());
  }
  return FromJson(j);
}

void ExperimentConfig::Validate() const {
  if (M_list.empty()) throw std::invalid_argument("M list is empty");
  for (std::size_t k = 0; k < M_list.size(); ++k) {
    if (!(M_list[k] > 0.0)) throw std::invalid_argument("M values must be positive");
    if (k > 0 && !(M_list[k] > M_list[k - 1])) {
      throw std::invalid_argument("M values must be increasing");
    }
  }
  if (replicas < 1 || sde_replicas < 1) {
    throw std::invalid_argument("replica count must be >= 1");
  }
  if (!(horizon > 0.0)) throw std::invalid_argument("horizon must be positive");
  if (!(h > 0.0)) throw std::invalid_argument("h must be positive");
  if (!(grid > 0.0)) throw std::invalid_argument("grid must be positive");
  if (x0.size() != model.base.n()) throw std::invalid_argument("x0 has wrong length");
  for (int i = 0; i + 1 < x0.size(); ++i) {
    if (x0(i + 1) < x0(i)) throw std::invalid_argument("x0 outside the wedge");
  }
}

int ResolveThreads(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("STICKY_WEDGE_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

void ParallelFor(std::int64_t count, int threads,
                 const std::function<void(std::int64_t)>& task) {
  std::atomic<std::int64_t> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  auto worker = [&] {
    while (true) {
      const std::int64_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        task(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mu);
        if (!error) error = std::current_exception();
        next.store(count);
      }
    }
  };
  const int n_workers =
      static_cast<int>(std::min<std::int64_t>(std::max(1, threads), count));
  if (n_workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < n_workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (error) std::rethrow_exception(error);
}

std::uint64_t ReplicaStream(int m_index, int replica) {
  const std::uint64_t block = m_index == kReferenceIndex
                                  ? 0xFFFFull
                                  : static_cast<std::uint64_t>(m_index + 1);
  return (block << 32) | static_cast<std::uint32_t>(replica);
}

ConvergenceTable RunConvergenceStudy(const ExperimentConfig& config,
                                     int threads) {
  config.Validate();
  ConvergenceTable table;
  table.statistic = config.statistic;
  table.simulator = config.simulator;
  table.conditions = CheckConditions(MatrixBundle::FromModel(config.model.base));
  table.assumption_a = table.conditions.completely_S.holds;
  table.assumption_b = table.conditions.jointly_completely_S.holds;
  if (!table.assumption_a) {
    throw std::runtime_error(
        "reflection matrix is not completely-S");
  }
  if (!table.assumption_b) {
    table.warnings.push_back(
        "reflection pair is not jointly completely-S; convergence is not guaranteed");
  }

  const int n_M = static_cast<int>(config.M_list.size());
  std::vector<std::optional<InterarrivalSpec>> specs(n_M);
  if (config.simulator == SimulatorKind::kRenewal) {
    for (int m = 0; m < n_M; ++m) {
      specs[m] = BuildInterarrivalSpec(config.model, config.M_list[m]);
    }
  }
  const SdeCoefficients ref_coeffs = ReferenceCoefficients(config);

  // The sup statistic has no SDE counterpart.
  const int sde_replicas =
      config.statistic == Statistic::kSupDelta ? 0 : config.sde_replicas;
  table.samples.assign(n_M, std::vector<double>(config.replicas));
  table.reference_samples.assign(sde_replicas, 0.0);
  std::vector<double> ledger_errors(static_cast<std::size_t>(n_M) * config.replicas, 0.0);
  const std::int64_t particle_tasks =
      static_cast<std::int64_t>(n_M) * config.replicas;
  const std::int64_t total = particle_tasks + sde_replicas;

  ParallelFor(total, threads, [&](std::int64_t task) {
    if (task < particle_tasks) {
      const int m = static_cast<int>(task / config.replicas);
      const int r = static_cast<int>(task % config.replicas);
      const PathRecord record = RunParticleSystem(
          config, specs[m] ? &*specs[m] : nullptr, config.M_list[m],
          ReplicaStream(m, r));
      table.samples[m][r] = LatticeStatistic(config.statistic, record);
      ledger_errors[task] = LedgerIdentityError(
          record, config.model.base.theta_L(), config.model.base.theta_R());
      return;
    }
    const int r = static_cast<int>(task - particle_tasks);
    StickyOptions options;
    options.h = config.h;
    options.horizon = config.horizon;
    options.grid = config.grid;
    const StickyPath path = SimulateSticky(ref_coeffs, config.x0, options,
                                           config.seed,
                                           ReplicaStream(kReferenceIndex, r));
    table.reference_samples[r] = StickyStatistic(config.statistic, path);
  });

  table.max_ledger_error =
      *std::max_element(ledger_errors.begin(), ledger_errors.end());
  if (sde_replicas > 0) table.reference = Summarize(0.0, table.reference_samples);
  for (int m = 0; m < n_M; ++m) {
    ConvergenceRow row = Summarize(config.M_list[m], table.samples[m]);
    if (config.statistic == Statistic::kFinalPosition) {
      const KsResult ks = KsTwoSample(table.samples[m], table.reference_samples);
      row.distance = ks.statistic;
      row.ks_p = ks.p_value;
    } else if (config.statistic == Statistic::kSupDelta) {
      row.distance = row.median;
    } else {
      row.distance = std::abs(row.mean - table.reference.mean);
      row.pooled_se = std::hypot(row.se, table.reference.se);
    }
    table.rows.push_back(row);
  }
  if (n_M > 1) {
    bool decreasing = true;
    for (int m = 1; m < n_M; ++m) {
      decreasing = decreasing && table.rows[m].distance < table.rows[m - 1].distance;
    }
    table.distance_decreasing = decreasing;
  }
  return table;
}

QvReport RunQvCheck(const ExperimentConfig& config, int threads) {
  config.Validate();
  const int n = config.model.base.n();
  const double M = config.M_list.back();
  QvReport report;
  report.M = M;
  const int R = config.replicas;

  std::vector<Eigen::VectorXd> lat_qv(R), lat_expected(R);
  std::vector<Eigen::VectorXd> st_qv(R), st_expected(R);
  std::vector<Eigen::MatrixXd> st_cross(R);
  const double two_a = 2.0 * config.model.base.a();
  const SdeCoefficients coeffs =
      n >= 2 ? ReferenceCoefficients(config) : SdeCoefficients{};
  if (n < 2) {
    report.sticky_skipped = "single particle";
  } else if (!IsCompletelyS(BuildReflectionMatrix(coeffs.V)).holds) {
    report.sticky_skipped = "reflection matrix is not completely-S";
  }
  const bool run_sticky = report.sticky_skipped.empty();
  std::optional<InterarrivalSpec> spec;
  if (config.simulator == SimulatorKind::kRenewal) {
    spec = BuildInterarrivalSpec(config.model, M);
  }

  ParallelFor(2 * static_cast<std::int64_t>(R), threads, [&](std::int64_t task) {
    const int r = static_cast<int>(task / 2);
    if (task % 2 == 0) {
      const PathRecord record = RunParticleSystem(
          config, spec ? &*spec : nullptr, M, ReplicaStream(0, r));
      const auto& s = record.final();
      lat_qv[r] = s.qv;
      // Thinned fast jumps happen only while every gap is open.
      lat_expected[r] = Eigen::VectorXd::Constant(n, two_a * s.open_time);
      return;
    }
    if (!run_sticky) return;
    StickyOptions options;
    options.h = config.h;
    options.horizon = config.horizon;
    options.grid = config.grid;
    const StickyPath path =
        SimulateSticky(coeffs, config.x0, options, config.seed,
                       ReplicaStream(kReferenceIndex, r));
    const double sigma = path.sigma.back();
    st_qv[r] = path.qv[path.qv.size() - 1];
    st_expected[r] = coeffs.c_frak.diagonal() * sigma;
    st_cross[r] = path.qv_matrix / sigma;
  });

  auto pool = [&](const std::vector<Eigen::VectorXd>& got,
                  const std::vector<Eigen::VectorXd>& want) {
    std::vector<QvCoordinate> out(n);
    for (int i = 0; i < n; ++i) {
      for (int r = 0; r < R; ++r) {
        out[i].realized += got[r](i);
        out[i].expected += want[r](i);
        if (want[r](i) > 0.0) {
          out[i].worst_path_error = std::max(
              out[i].worst_path_error, std::abs(got[r](i) / want[r](i) - 1.0));
        }
      }
      out[i].relative_error =
          out[i].expected > 0.0
              ? std::abs(out[i].realized / out[i].expected - 1.0)
              : std::abs(out[i].realized);
    }
    return out;
  };
  report.lattice = pool(lat_qv, lat_expected);
  if (run_sticky) {
    report.sticky = pool(st_qv, st_expected);
    report.sticky_cross = Eigen::MatrixXd::Zero(n, n);
    report.sticky_cross_se = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) {
      for (int k = 0; k < n; ++k) {
        std::vector<double> v(R);
        for (int r = 0; r < R; ++r) v[r] = st_cross[r](i, k);
        report.sticky_cross(i, k) = Mean(v);
        report.sticky_cross_se(i, k) = StandardError(v);
      }
    }
  }
  return report;
}

StationarityReport RunStationarity(const ExperimentConfig& config) {
  config.Validate();
  return EmpiricalStationarityTest(SdeCoefficients::FromModel(config.model.base),
                                   config.x0,
                                   config.stationarity, config.seed);
}

nlohmann::json RunManifest(const ExperimentConfig& config, int threads) {
  nlohmann::json m;
  m["library"] = "sticky_wedge";
  m["version"] = STICKY_WEDGE_VERSION;
  m["config"] = config.raw;
  m["seed"] = config.seed;
  m["rng"] = "philox4x32-10, key = seed xor stream, stream = (M index + 1) << 32 | replica";
  m["threads"] = threads;
  m["model"] = ModelToJson(config.model.base);
  if (config.simulator == SimulatorKind::kRenewal) {
    const InterarrivalFamilies& f = config.model.families;
    nlohmann::json fast_L = nlohmann::json::array(), fast_R = nlohmann::json::array();
    for (auto x : f.fast_L) fast_L.push_back(FamilyName(x));
    for (auto x : f.fast_R) fast_R.push_back(FamilyName(x));
    m["interarrivals"] = {
        {"fast_L", fast_L},
        {"fast_R", fast_R},
        {"slow", FamilyName(f.slow)},
        {"slow_shape", f.slow_shape},
        {"joint_law", "gaussian copula over marginal quantiles (modeling choice)"}};
  }
  return m;
}

void WriteText(const std::string& path, const std::string& content) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(p.parent_path(), ec);
    if (ec) throw std::runtime_error("cannot create directory " + p.parent_path().string());
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << content;
  if (!out) throw std::runtime_error("failed writing " + path);
}

void EmitManifest(const std::string& dir, const nlohmann::json& manifest) {
  WriteText((std::filesystem::path(dir) / "manifest.json").string(),
            manifest.dump(2) + "\n");
}

std::string ConvergenceCsv(const ConvergenceTable& table) {
  std::ostringstream os;
  os << "M,replicas,mean,se,median,distance,pooled_se,ks_p\n";
  auto line = [&](const ConvergenceRow& r, const std::string& label) {
    os << label << ',' << r.replicas << ',' << FormatDouble(r.mean) << ','
       << FormatDouble(r.se) << ',' << FormatDouble(r.median) << ','
       << FormatDouble(r.distance) << ',' << FormatDouble(r.pooled_se) << ','
       << FormatDouble(r.ks_p) << '\n';
  };
  for (const auto& r : table.rows) line(r, FormatDouble(r.M));
  if (table.statistic != Statistic::kSupDelta) line(table.reference, "sde");
  return os.str();
}

std::string ConvergenceSvg(const ConvergenceTable& table) {
  const double W = 480, H = 320, pad = 50;
  std::vector<double> xs, ys;
  for (const auto& r : table.rows) {
    xs.push_back(std::log10(r.M));
    ys.push_back(r.mean);
  }
  double ymin = *std::min_element(ys.begin(), ys.end());
  double ymax = *std::max_element(ys.begin(), ys.end());
  const bool with_ref = table.statistic != Statistic::kSupDelta;
  if (with_ref) {
    ymin = std::min(ymin, table.reference.mean);
    ymax = std::max(ymax, table.reference.mean);
  }
  if (ymax - ymin < 1e-12) {
    ymin -= 0.5;
    ymax += 0.5;
  }
  double xmin = xs.front() - 0.1, xmax = xs.back() + 0.1;
  auto px = [&](double x) { return pad + (x - xmin) / (xmax - xmin) * (W - 2 * pad); };
  auto py = [&](double y) { return H - pad - (y - ymin) / (ymax - ymin) * (H - 2 * pad); };
  std::ostringstream os;
  os << std::fixed << std::setprecision(2);
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
     << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<line x1=\"" << pad << "\" y1=\"" << H - pad << "\" x2=\"" << W - pad << "\" y2=\""
     << H - pad << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << pad << "\" y1=\"" << pad << "\" x2=\"" << pad << "\" y2=\"" << H - pad
     << "\" stroke=\"black\"/>\n";
  os << "<text x=\"" << W / 2 << "\" y=\"" << H - 10
     << "\" text-anchor=\"middle\" font-size=\"12\">log10 M</text>\n";
  os << "<text x=\"12\" y=\"" << H / 2 << "\" font-size=\"12\" transform=\"rotate(-90 12 "
     << H / 2 << ")\" text-anchor=\"middle\">" << StatisticName(table.statistic) << "</text>\n";
  if (with_ref) {
    os << "<line x1=\"" << pad << "\" y1=\"" << py(table.reference.mean) << "\" x2=\""
       << W - pad << "\" y2=\"" << py(table.reference.mean)
       << "\" stroke=\"gray\" stroke-dasharray=\"4 3\"/>\n";
  }
  os << "<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"2\" points=\"";
  for (std::size_t k = 0; k < xs.size(); ++k) os << px(xs[k]) << ',' << py(ys[k]) << ' ';
  os << "\"/>\n";
  for (std::size_t k = 0; k < xs.size(); ++k) {
    os << "<circle cx=\"" << px(xs[k]) << "\" cy=\"" << py(ys[k])
       << "\" r=\"3\" fill=\"steelblue\"/>\n";
    os << "<text x=\"" << px(xs[k]) << "\" y=\"" << H - pad + 15
       << "\" text-anchor=\"middle\" font-size=\"10\">" << xs[k] << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

nlohmann::json ConvergenceToJson(const ConvergenceTable& table) {
  nlohmann::json j;
  j["statistic"] = StatisticName(table.statistic);
  j["simulator"] = table.simulator == SimulatorKind::kLattice ? "lattice" : "renewal";
  j["completely_S"] = table.assumption_a;
  j["jointly_completely_S"] = table.assumption_b;
  j["warnings"] = table.warnings;
  j["max_ledger_error"] = table.max_ledger_error;
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : table.rows) {
    rows.push_back({{"M", r.M}, {"mean", r.mean}, {"se", r.se}, {"median", r.median},
                    {"distance", r.distance}, {"pooled_se", r.pooled_se}, {"ks_p", r.ks_p}});
  }
  j["rows"] = rows;
  j["reference"] = {{"mean", table.reference.mean}, {"se", table.reference.se},
                    {"replicas", table.reference.replicas}};
  if (table.distance_decreasing) j["distance_decreasing"] = *table.distance_decreasing;
  return j;
}

nlohmann::json QvToJson(const QvReport& report) {
  auto coords = [](const std::vector<QvCoordinate>& v) {
    nlohmann::json a = nlohmann::json::array();
    for (const auto& c : v) {
      a.push_back({{"realized", c.realized}, {"expected", c.expected},
                   {"relative_error", c.relative_error},
                   {"worst_path_error", c.worst_path_error}});
    }
    return a;
  };
  nlohmann::json j;
  j["M"] = report.M;
  j["lattice"] = coords(report.lattice);
  j["sticky"] = coords(report.sticky);
  if (!report.sticky_skipped.empty()) j["sticky_skipped"] = report.sticky_skipped;
  if (report.sticky_cross.size()) {
    j["sticky_cross_per_open_time"] = MatrixToJson(report.sticky_cross);
    j["sticky_cross_se"] = MatrixToJson(report.sticky_cross_se);
  }
  return j;
}

bool ConvergencePasses(const ConvergenceTable& table) {
  if (table.distance_decreasing && !*table.distance_decreasing) return false;
  if (table.rows.empty()) return false;
  const ConvergenceRow& last = table.rows.back();
  if (table.statistic == Statistic::kFinalPosition) return last.ks_p > 0.01;
  if (table.statistic == Statistic::kOccupationFraction) {
    return last.distance <= 3.0 * last.pooled_se;
  }
  return true;
}

bool QvPasses(const QvReport& report, double tol) {
  for (const auto& c : report.lattice) {
    if (c.relative_error > tol) return false;
  }
  for (const auto& c : report.sticky) {
    if (c.relative_error > tol) return false;
  }
  return true;
}

std::string LatticePathCsv(const PathRecord& record) {
  const int n = record.n;
  std::ostringstream os;
  os << "t";
  for (int i = 0; i < n; ++i) os << ",X_" << i + 1;
  for (int j = 0; j + 1 < n; ++j) os << ",occ_" << j + 1;
  os << ",open_time";
  for (int i = 0; i < n; ++i) os << ",A_M_" << i + 1;
  for (const char* field : {"I_L", "I_R", "Delta_L", "Delta_R"}) {
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j + 1 < n; ++j) os << ',' << field << '_' << i + 1 << '_' << j + 1;
    }
  }
  os << '\n';
  for (const auto& s : record.snapshots) {
    os << FormatDouble(s.t);
    for (int i = 0; i < n; ++i) os << ',' << FormatDouble(s.x(i));
    for (int j = 0; j + 1 < n; ++j) os << ',' << FormatDouble(s.gap_occupation(j));
    os << ',' << FormatDouble(s.open_time);
    for (int i = 0; i < n; ++i) os << ',' << FormatDouble(s.ledger.A_M(i));
    for (const Eigen::MatrixXd* m :
         {&s.ledger.I_L, &s.ledger.I_R, &s.ledger.Delta_L, &s.ledger.Delta_R}) {
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j + 1 < n; ++j) os << ',' << FormatDouble((*m)(i, j));
      }
    }
    os << '\n';
  }
  return os.str();
}

std::string StickyPathCsv(const StickyPath& path) {
  const int n = path.n;
  std::ostringstream os;
  os << "t";
  for (int i = 0; i < n; ++i) os << ",X_" << i + 1;
  for (int j = 0; j + 1 < n; ++j) os << ",Lambda_" << j + 1;
  for (int j = 0; j + 1 < n; ++j) os << ",pinned_" << j + 1;
  os << ",sigma\n";
  for (std::size_t k = 0; k < path.t.size(); ++k) {
    os << FormatDouble(path.t[k]);
    const auto x = path.X[k];
    for (int i = 0; i < n; ++i) os << ',' << FormatDouble(x(i));
    const auto occ = path.occupation[k];
    for (int j = 0; j + 1 < n; ++j) os << ',' << FormatDouble(occ(j));
    for (int j = 0; j + 1 < n; ++j) os << ',' << (path.IsPinned(k, j) ? 1 : 0);
    os << ',' << FormatDouble(path.sigma[k]) << '\n';
  }
  return os.str();
}

std::string CdfPointsCsv(const StationarityReport& report) {
  std::ostringstream os;
  os << "gap,x,empirical,theoretical\n";
  for (std::size_t j = 0; j < report.cdf_points.size(); ++j) {
    for (const auto& [x, emp] : report.cdf_points[j]) {
      const double theo = -std::expm1(report.law.gamma(j) * x);
      os << j + 1 << ',' << FormatDouble(x) << ',' << FormatDouble(emp) << ','
         << FormatDouble(theo) << '\n';
    }
  }
  return os.str();
}

void EmitConvergence(const std::string& dir, const ConvergenceTable& table) {
  const std::filesystem::path base(dir);
  const std::string stem = "convergence_" + StatisticName(table.statistic);
  WriteText((base / (stem + ".csv")).string(), ConvergenceCsv(table));
  WriteText((base / (stem + ".svg")).string(), ConvergenceSvg(table));
}

}  // namespace sticky_wedge
