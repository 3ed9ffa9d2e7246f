#include "geowalk/physarum.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "geowalk/errors.hpp"
#include "geowalk/io.hpp"

namespace geowalk {

void PhysarumProblem::validate(double feasibility_tol) const {
  const Index m = A.rows(), n = A.cols();
  if (m == 0 || n == 0) throw InputError("physarum: empty constraint matrix");
  if (b.size() != m) throw InputError("physarum: b has wrong length");
  if (c.size() != n || x0.size() != n) throw InputError("physarum: c or x0 has wrong length");
  if (m > n) throw RankError("physarum: more equality rows than variables");
  if (!A.allFinite() || !b.allFinite() || !c.allFinite() || !x0.allFinite())
    throw InputError("physarum: non-finite entries");
  if (!(c.array() > 0).all()) throw InputError("physarum: costs must be strictly positive");
  if (!(x0.array() > 0).all()) throw InputError("physarum: x0 must be strictly positive");
  Eigen::JacobiSVD<Matrix> svd(A);
  const auto& sv = svd.singularValues();
  if (sv(m - 1) <= 1e-12 * sv(0)) throw RankError("physarum: A must have full row rank");
  const double err = (A * x0 - b).lpNorm<Eigen::Infinity>();
  if (err > feasibility_tol) {
    std::ostringstream msg;
    msg << "physarum: x0 infeasible, |Ax0 - b| = " << err;
    throw InputError(msg.str());
  }
}

namespace {

Vector json_vector(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || !j[key].is_array())
    throw InputError(std::string("physarum: missing array '") + key + "'");
  const auto v = j[key].get<std::vector<double>>();
  return Eigen::Map<const Vector>(v.data(), static_cast<Index>(v.size()));
}

}  // namespace

PhysarumProblem load_physarum(const nlohmann::json& doc) {
  PhysarumProblem p;
  try {
    if (!doc.contains("A") || !doc["A"].is_array() || doc["A"].empty())
      throw InputError("physarum: missing matrix 'A'");
    const auto rows = doc["A"].get<std::vector<std::vector<double>>>();
    const size_t n = rows.front().size();
    p.A.resize(static_cast<Index>(rows.size()), static_cast<Index>(n));
    for (size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].size() != n) throw InputError("physarum: ragged rows in 'A'");
      for (size_t j = 0; j < n; ++j) p.A(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
    }
    p.b = json_vector(doc, "b");
    p.c = json_vector(doc, "c");
    p.x0 = json_vector(doc, "x0");
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("physarum: malformed document: ") + e.what());
  }
  p.validate();
  return p;
}

PhysarumProblem load_physarum_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(path + ": " + e.what());
  }
  return load_physarum(doc);
}

nlohmann::json to_json(const PhysarumProblem& p) {
  auto vec = [](const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
  nlohmann::json A = nlohmann::json::array();
  for (Index i = 0; i < p.A.rows(); ++i) A.push_back(vec(p.A.row(i).transpose()));
  return {{"A", A}, {"b", vec(p.b)}, {"c", vec(p.c)}, {"x0", vec(p.x0)}};
}

namespace {

// lambda = (A W A^T)^-1 b with W = diag(x / c).
Vector dual_estimate(const Vector& x, const PhysarumProblem& prob) {
  const Vector w = x.cwiseQuotient(prob.c);
  const Matrix M = prob.A * w.asDiagonal() * prob.A.transpose();
  Eigen::LLT<Matrix> llt(M);
  if (llt.info() != Eigen::Success) throw FactorizationError("physarum: A W A^T is singular");
  const Vector d = llt.matrixLLT().diagonal();
  if (!(d.minCoeff() > 1e-8 * d.maxCoeff()))
    throw FactorizationError("physarum: A W A^T is numerically singular");
  return llt.solve(prob.b);
}

}  // namespace

Vector physarum_rhs(const Vector& x, const PhysarumProblem& prob) {
  if (x.size() != prob.n()) throw InputError("physarum_rhs: x has wrong length");
  if (!(x.array() > 0).all()) throw DomainError("physarum_rhs: x must be strictly positive");
  const Vector lambda = dual_estimate(x, prob);
  return x.cwiseQuotient(prob.c).cwiseProduct(prob.A.transpose() * lambda) - x;
}

Vector physarum_log_rhs(const Vector& y, const PhysarumProblem& prob) {
  if (y.size() != prob.n()) throw InputError("physarum_log_rhs: y has wrong length");
  if (!y.allFinite()) throw NonFiniteError("physarum_log_rhs: non-finite state");
  const Vector x = y.array().exp().matrix();
  const Vector lambda = dual_estimate(x, prob);
  return (prob.A.transpose() * lambda).cwiseQuotient(prob.c) - Vector::Ones(prob.n());
}

namespace {

PhysarumResult summarize(const PhysarumProblem& prob, const MultistepResult& ms, double T,
                         int checkpoints, bool log_coords) {
  PhysarumResult r;
  r.report = ms.report;
  r.steps = ms.steps;
  auto state = [&](double t) -> Vector {
    const Vector u = (T == 0 || t == 0) ? (log_coords ? Vector(prob.x0.array().log()) : prob.x0)
                                        : ms.curve.eval(std::min(t, ms.curve.length()));
    return log_coords ? Vector(u.array().exp()) : u;
  };
  const int K = std::max(checkpoints, 2);
  double prev = std::numeric_limits<double>::infinity();
  for (int k = 0; k < K; ++k) {
    const double t = T * k / (K - 1);
    PhysarumCheckpoint cp;
    cp.t = t;
    cp.x = state(t);
    cp.objective = prob.c.dot(cp.x);
    cp.infeasibility = (prob.A * cp.x - prob.b).lpNorm<Eigen::Infinity>();
    r.max_infeasibility = std::max(r.max_infeasibility, cp.infeasibility);
    const double rise = cp.objective - prev;
    if (rise > 0) {
      r.max_increase = std::max(r.max_increase, rise);
      if (rise > 1e-9) {
        r.last_increase_time = t;
        if (t > 0.5 * T) r.monotonicity_warning = true;
      }
    }
    prev = cp.objective;
    r.trajectory.push_back(std::move(cp));
  }
  r.x = r.trajectory.back().x;
  const Vector y_end = log_coords ? Vector(ms.endpoint) : Vector();
  for (Index i = 0; i < prob.n(); ++i) {
    const bool gone = log_coords ? y_end(i) < std::log(std::numeric_limits<double>::min())
                                 : r.x(i) < std::numeric_limits<double>::min();
    if (gone) r.underflowed.push_back(i);
  }
  return r;
}

}  // namespace

PhysarumResult physarum_solve(const PhysarumProblem& prob, double T, double eps, int checkpoints,
                              CollocationConfig cfg) {
  prob.validate();
  if (!(T >= 0) || !std::isfinite(T)) throw InputError("physarum: T must be finite and >= 0");
  if (!(eps > 0)) throw InputError("physarum: eps must be positive");
  cfg.tolerance = eps;
  const FirstOrderRhs F = [&prob](const Vector& y, double) { return physarum_log_rhs(y, prob); };
  const Vector y0 = prob.x0.array().log();
  const MultistepResult ms = collocation_multistep(F, y0, T, cfg);
  return summarize(prob, ms, T, checkpoints, true);
}

PhysarumResult physarum_solve_raw(const PhysarumProblem& prob, double T, double eps,
                                  int checkpoints, CollocationConfig cfg) {
  prob.validate();
  if (!(T >= 0) || !std::isfinite(T)) throw InputError("physarum: T must be finite and >= 0");
  if (!(eps > 0)) throw InputError("physarum: eps must be positive");
  cfg.tolerance = eps;
  const FirstOrderRhs F = [&prob](const Vector& x, double) { return physarum_rhs(x, prob); };
  const MultistepResult ms = collocation_multistep(F, prob.x0, T, cfg);
  return summarize(prob, ms, T, checkpoints, false);
}

std::string trajectory_csv(const PhysarumResult& r) {
  std::ostringstream out;
  const Index n = r.x.size();
  out << "t";
  for (Index j = 0; j < n; ++j) out << ",x" << j;
  out << ",objective,infeasibility\n";
  for (const auto& cp : r.trajectory) {
    out << io::format_double(cp.t);
    for (Index j = 0; j < n; ++j) out << ',' << io::format_double(cp.x(j));
    out << ',' << io::format_double(cp.objective) << ',' << io::format_double(cp.infeasibility)
        << '\n';
  }
  return out.str();
}

nlohmann::json to_json(const PhysarumResult& r) {
  nlohmann::json j;
  j["x"] = std::vector<double>(r.x.data(), r.x.data() + r.x.size());
  j["objective"] = r.trajectory.empty() ? 0.0 : r.trajectory.back().objective;
  j["max_infeasibility"] = r.max_infeasibility;
  j["max_objective_increase"] = r.max_increase;
  j["last_increase_time"] = r.last_increase_time;
  j["monotonicity_warning"] = r.monotonicity_warning;
  j["underflowed"] = r.underflowed;
  j["steps"] = r.steps;
  j["iterations"] = r.report.iterations;
  j["evaluations"] = r.report.evaluations;
  j["halvings"] = r.report.halvings;
  return j;
}

}  // namespace geowalk
