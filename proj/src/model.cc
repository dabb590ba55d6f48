#include "sticky_wedge/model.h"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace sticky_wedge {

namespace {

void RequireShape(const MatrixXd& m, int rows, int cols, const char* name) {
  if (m.rows() != rows || m.cols() != cols) {
    std::ostringstream os;
    os << name << " must be " << rows << "x" << cols << ", got " << m.rows()
       << "x" << m.cols();
    throw std::invalid_argument(os.str());
  }
}

void RequireThetaShapes(const MatrixXd& theta_L, const MatrixXd& theta_R) {
  const auto n = theta_L.rows();
  if (n < 2) throw std::invalid_argument("theta matrices need n >= 2 rows");
  RequireShape(theta_L, static_cast<int>(n), static_cast<int>(n - 1),
               "theta_L");
  RequireShape(theta_R, static_cast<int>(n), static_cast<int>(n - 1),
               "theta_R");
}

}  // namespace

bool IsSymmetricPositiveDefinite(const MatrixXd& m, double tol) {
  if (m.rows() != m.cols() || m.rows() == 0) return false;
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > tol * scale) return false;
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(m);
  return es.eigenvalues().minCoeff() > tol * scale;
}

ModelParams::ModelParams(int n, double a, MatrixXd theta_L, MatrixXd theta_R,
                         VectorXd b, MatrixXd c_frak)
    : n_(n),
      a_(a),
      theta_L_(std::move(theta_L)),
      theta_R_(std::move(theta_R)),
      b_(std::move(b)),
      c_frak_(std::move(c_frak)) {
  if (n_ < 1) {
    throw std::invalid_argument("particle count n must be >= 1, got " +
                                std::to_string(n_));
  }
  if (!(a_ > 0.0) || !std::isfinite(a_)) {
    throw std::invalid_argument("fast rate a must be positive and finite");
  }
  RequireShape(theta_L_, n_, n_ - 1, "theta_L");
  RequireShape(theta_R_, n_, n_ - 1, "theta_R");
  if (!theta_L_.allFinite() || !theta_R_.allFinite() ||
      (n_ > 1 && (theta_L_.minCoeff() < 0.0 || theta_R_.minCoeff() < 0.0))) {
    throw std::invalid_argument("theta entries must be finite and >= 0");
  }
  if (b_.size() != n_) {
    throw std::invalid_argument("drift b must have length n = " +
                                std::to_string(n_));
  }
  RequireShape(c_frak_, n_, n_, "c_frak");
  if (!IsSymmetricPositiveDefinite(c_frak_)) {
    throw std::invalid_argument(
        "c_frak must be symmetric with strictly positive eigenvalues");
  }
}

ModelParams ModelParams::ExclusionLimit(int n, double a, MatrixXd theta_L,
                                        MatrixXd theta_R) {
  return ModelParams(n, a, std::move(theta_L), std::move(theta_R),
                     VectorXd::Zero(n), 2.0 * a * MatrixXd::Identity(n, n));
}

ModelParams ModelParams::Uniform(int n, double a, double theta) {
  const MatrixXd t = MatrixXd::Constant(n, n - 1, theta);
  return ExclusionLimit(n, a, t, t);
}

ModelParams ModelParams::Freeze(int n, double a, double theta) {
  MatrixXd tl = MatrixXd::Zero(n, n - 1);
  MatrixXd tr = MatrixXd::Zero(n, n - 1);
  for (int j = 0; j < n - 1; ++j) {
    tl(j, j) = theta;
    tr(j + 1, j) = theta;
  }
  return ExclusionLimit(n, a, tl, tr);
}

ModelParams ModelParams::Reversed() const {
  MatrixXd tl(n_, n_ - 1), tr(n_, n_ - 1);
  for (int i = 0; i < n_; ++i) {
    for (int j = 0; j < n_ - 1; ++j) {
      tl(i, j) = theta_R_(n_ - 1 - i, n_ - 2 - j);
      tr(i, j) = theta_L_(n_ - 1 - i, n_ - 2 - j);
    }
  }
  VectorXd b(n_);
  MatrixXd c(n_, n_);
  for (int i = 0; i < n_; ++i) {
    b(i) = -b_(n_ - 1 - i);
    for (int k = 0; k < n_; ++k) c(i, k) = c_frak_(n_ - 1 - i, n_ - 1 - k);
  }
  return ModelParams(n_, a_, tl, tr, b, c);
}

bool DoubleCollisionMatrix::IsZeroPair(int k, int l) const {
  return columns.find({k, l}) == columns.end();
}

MatrixXd DoubleCollisionMatrix::Dense() const {
  MatrixXd out = MatrixXd::Zero(dim, dim * dim);
  for (const auto& [kl, col] : columns) {
    out.col(kl.first * dim + kl.second) = col;
  }
  return out;
}

MatrixXd BuildSpeedChangeMatrix(const MatrixXd& theta_L,
                                const MatrixXd& theta_R) {
  RequireThetaShapes(theta_L, theta_R);
  const int n = static_cast<int>(theta_L.rows());
  MatrixXd V(n, n - 1);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n - 1; ++j) {
      if (j == i - 1) {
        V(i, j) = theta_R(i, j);
      } else if (j == i) {
        V(i, j) = -theta_L(i, j);
      } else {
        V(i, j) = theta_R(i, j) - theta_L(i, j);
      }
    }
  }
  return V;
}

MatrixXd BuildReflectionMatrix(const MatrixXd& V) {
  if (V.rows() < 2 || V.cols() != V.rows() - 1) {
    throw std::invalid_argument("V must be n x (n-1) with n >= 2");
  }
  const auto d = V.cols();
  return V.bottomRows(d) - V.topRows(d);
}

DoubleCollisionMatrix BuildDoubleCollisionMatrix(const MatrixXd& theta_L,
                                                 const MatrixXd& theta_R) {
  RequireThetaShapes(theta_L, theta_R);
  const int d = static_cast<int>(theta_L.cols());
  DoubleCollisionMatrix out;
  out.dim = d;
  for (int k = 0; k < d; ++k) {
    for (int l = 0; l < d; ++l) {
      VectorXd col = VectorXd::Zero(d);
      for (int i = 0; i < d; ++i) {
        if (k == i - 1 && l != i - 1) {
          col(i) = -theta_L(i, l);
        } else if (k == i && l != i) {
          col(i) = theta_L(i + 1, l) + theta_R(i, l);
        } else if (k == i + 1 && l != i + 1) {
          col(i) = -theta_R(i + 1, l);
        }
      }
      if ((col.array() == 0.0).all()) {
        out.zero_pairs.emplace_back(k, l);
      } else {
        out.columns.emplace(std::make_pair(k, l), std::move(col));
      }
    }
  }
  return out;
}

SpacingCovariance BuildSpacingCovariance(const MatrixXd& c_frak,
                                         const VectorXd& b) {
  const auto n = c_frak.rows();
  if (n < 2 || c_frak.cols() != n || b.size() != n) {
    throw std::invalid_argument("c_frak must be n x n and b length n, n >= 2");
  }
  const double scale = std::max(1.0, c_frak.cwiseAbs().maxCoeff());
  if ((c_frak - c_frak.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw std::invalid_argument("c_frak must be symmetric");
  }
  const auto d = n - 1;
  SpacingCovariance out;
  out.A.resize(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index k = 0; k < d; ++k) {
      out.A(i, k) = c_frak(i, k) + c_frak(i + 1, k + 1) - c_frak(i, k + 1) -
                    c_frak(i + 1, k);
    }
  }
  out.D = out.A.diagonal();
  out.mu = b.tail(d) - b.head(d);
  return out;
}

MatrixBundle MatrixBundle::FromModel(const ModelParams& params) {
  MatrixBundle out;
  out.V = BuildSpeedChangeMatrix(params.theta_L(), params.theta_R());
  out.Q = BuildReflectionMatrix(out.V);
  out.Q2 = BuildDoubleCollisionMatrix(params.theta_L(), params.theta_R());
  auto cov = BuildSpacingCovariance(params.c_frak(), params.b());
  out.A = std::move(cov.A);
  out.D = std::move(cov.D);
  out.mu = std::move(cov.mu);
  return out;
}

SdeCoefficients SdeCoefficients::FromModel(const ModelParams& params) {
  return {params.b(), params.c_frak(),
          BuildSpeedChangeMatrix(params.theta_L(), params.theta_R())};
}

InterarrivalFamily ParseFamily(const std::string& name) {
  if (name == "exponential") return InterarrivalFamily::kExponential;
  if (name == "gamma") return InterarrivalFamily::kGamma;
  if (name == "deterministic") return InterarrivalFamily::kDeterministic;
  if (name == "shifted_uniform" || name == "shifted-uniform") {
    return InterarrivalFamily::kShiftedUniform;
  }
  if (name == "pareto") return InterarrivalFamily::kPareto;
  throw std::invalid_argument("unknown interarrival family '" + name + "'");
}

std::string FamilyName(InterarrivalFamily family) {
  switch (family) {
    case InterarrivalFamily::kExponential:
      return "exponential";
    case InterarrivalFamily::kGamma:
      return "gamma";
    case InterarrivalFamily::kDeterministic:
      return "deterministic";
    case InterarrivalFamily::kShiftedUniform:
      return "shifted_uniform";
    case InterarrivalFamily::kPareto:
      return "pareto";
  }
  return "unknown";
}

MatrixXd GeneralModelParams::ImpliedCovariance() const {
  return c_LL + c_LR + c_LR.transpose() + c_RR;
}

SdeCoefficients GeneralModelParams::LimitCoefficients() const {
  const MatrixXd c = ImpliedCovariance();
  if (!IsSymmetricPositiveDefinite(c)) {
    throw std::invalid_argument(
        "implied covariance c_LL + c_LR + c_LR^T + c_RR is not symmetric "
        "positive definite; the general system has no diffusive limit");
  }
  const double a = base.a();
  return {lambda_R - lambda_L, a * a * a * c,
          BuildSpeedChangeMatrix(base.theta_L(), base.theta_R())};
}

GeneralModelParams GeneralModelParams::PoissonEquivalent(
    const ModelParams& base) {
  const int n = base.n();
  const double inv_a2 = 1.0 / (base.a() * base.a());
  InterarrivalFamilies fam;
  fam.fast_L.assign(n, InterarrivalFamily::kExponential);
  fam.fast_R.assign(n, InterarrivalFamily::kExponential);
  fam.slow = InterarrivalFamily::kExponential;
  return {base,
          VectorXd::Zero(n),
          VectorXd::Zero(n),
          inv_a2 * MatrixXd::Identity(n, n),
          MatrixXd::Zero(n, n),
          inv_a2 * MatrixXd::Identity(n, n),
          fam};
}

MatrixXd MatrixFromJson(const nlohmann::json& j) {
  if (!j.is_array() || j.empty()) {
    throw std::invalid_argument("matrix must be a non-empty array of rows");
  }
  const auto rows = j.size();
  const auto cols = j[0].is_array() ? j[0].size() : 0;
  MatrixXd m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    if (!j[r].is_array() || j[r].size() != cols) {
      throw std::invalid_argument("matrix rows must have equal length");
    }
    for (std::size_t c = 0; c < cols; ++c) m(r, c) = j[r][c].get<double>();
  }
  return m;
}

VectorXd VectorFromJson(const nlohmann::json& j) {
  if (!j.is_array()) throw std::invalid_argument("vector must be an array");
  VectorXd v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) v(i) = j[i].get<double>();
  return v;
}

nlohmann::json MatrixToJson(const MatrixXd& m) {
  auto out = nlohmann::json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    auto row = nlohmann::json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    out.push_back(std::move(row));
  }
  return out;
}

nlohmann::json VectorToJson(const VectorXd& v) {
  auto out = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

ModelParams ModelFromJson(const nlohmann::json& j) {
  const int n = j.at("n").get<int>();
  const double a = j.at("a").get<double>();
  if (n < 1) throw std::invalid_argument("n must be >= 1");
  MatrixXd tl, tr;
  if (n == 1) {
    tl = tr = MatrixXd(1, 0);
  } else if (j.contains("theta")) {
    // Shorthand: all rates equal.
    const double theta = j.at("theta").get<double>();
    tl = tr = MatrixXd::Constant(n, n - 1, theta);
  } else {
    tl = MatrixFromJson(j.at("theta_L"));
    tr = MatrixFromJson(j.at("theta_R"));
  }
  VectorXd b = j.contains("b") ? VectorFromJson(j.at("b")) : VectorXd::Zero(n);
  MatrixXd c = j.contains("c_frak") ? MatrixFromJson(j.at("c_frak"))
                                    : MatrixXd(2.0 * a * MatrixXd::Identity(n, n));
  return ModelParams(n, a, tl, tr, b, c);
}

namespace {

std::vector<InterarrivalFamily> FamilyList(const nlohmann::json& j, int n,
                                           const char* key) {
  if (!j.contains(key)) {
    return std::vector<InterarrivalFamily>(n, InterarrivalFamily::kExponential);
  }
  const auto& v = j.at(key);
  if (v.is_string()) {
    return std::vector<InterarrivalFamily>(n, ParseFamily(v.get<std::string>()));
  }
  if (!v.is_array() || static_cast<int>(v.size()) != n) {
    throw std::invalid_argument(std::string(key) +
                                " must be a family name or n names");
  }
  std::vector<InterarrivalFamily> out;
  for (const auto& e : v) out.push_back(ParseFamily(e.get<std::string>()));
  return out;
}

}  // namespace

GeneralModelParams GeneralModelFromJson(const nlohmann::json& j) {
  ModelParams base = ModelFromJson(j);
  GeneralModelParams out = GeneralModelParams::PoissonEquivalent(base);
  if (!j.contains("general")) return out;
  const auto& g = j.at("general");
  const int n = base.n();
  if (g.contains("lambda_L")) out.lambda_L = VectorFromJson(g.at("lambda_L"));
  if (g.contains("lambda_R")) out.lambda_R = VectorFromJson(g.at("lambda_R"));
  if (g.contains("c_LL")) out.c_LL = MatrixFromJson(g.at("c_LL"));
  if (g.contains("c_LR")) out.c_LR = MatrixFromJson(g.at("c_LR"));
  if (g.contains("c_RR")) out.c_RR = MatrixFromJson(g.at("c_RR"));
  if (out.lambda_L.size() != n || out.lambda_R.size() != n) {
    throw std::invalid_argument("lambda_L and lambda_R must have length n");
  }
  for (const MatrixXd* m : {&out.c_LL, &out.c_LR, &out.c_RR}) {
    RequireShape(*m, n, n, "interarrival covariance");
  }
  if (g.contains("interarrivals")) {
    const auto& ia = g.at("interarrivals");
    out.families.fast_L = FamilyList(ia, n, "fast_L");
    out.families.fast_R = FamilyList(ia, n, "fast_R");
    if (ia.contains("slow")) {
      out.families.slow = ParseFamily(ia.at("slow").get<std::string>());
    }
    if (ia.contains("slow_shape")) {
      out.families.slow_shape = ia.at("slow_shape").get<double>();
    }
    if (ia.contains("fast_pareto_tail")) {
      out.families.fast_pareto_tail = ia.at("fast_pareto_tail").get<double>();
    }
  }
  return out;
}

nlohmann::json ModelToJson(const ModelParams& params) {
  return {{"n", params.n()},
          {"a", params.a()},
          {"theta_L", MatrixToJson(params.theta_L())},
          {"theta_R", MatrixToJson(params.theta_R())},
          {"b", VectorToJson(params.b())},
          {"c_frak", MatrixToJson(params.c_frak())}};
}

std::string MatrixToCsv(const MatrixXd& m) {
  std::ostringstream os;
  os.precision(17);
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (c) os << ',';
      os << m(r, c);
    }
    os << '\n';
  }
  return os.str();
}

void WriteMatrixCsv(const MatrixXd& m, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << MatrixToCsv(m);
  if (!out) throw std::runtime_error("failed writing " + path);
}

}  // namespace sticky_wedge
