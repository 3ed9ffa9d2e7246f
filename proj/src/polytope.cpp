#include "geowalk/polytope.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "geowalk/kernels.hpp"

namespace geowalk {

namespace {

bool all_finite(const Matrix& M) { return M.allFinite(); }

double guard_scale(const Vector& b) {
  double s = b.size() ? b.cwiseAbs().maxCoeff() : 0.0;
  return s > 0 ? s : 1.0;
}

}  // namespace

Polytope::Polytope(Matrix A, Vector b, std::string name, double rank_tol)
    : A_(std::move(A)), b_(std::move(b)), name_(std::move(name)) {
  if (A_.rows() != b_.size())
    throw InputError("polytope: A has " + std::to_string(A_.rows()) + " rows but b has " +
                     std::to_string(b_.size()) + " entries");
  if (A_.cols() < 1) throw InputError("polytope: dimension n must be >= 1");
  if (A_.rows() < A_.cols())
    throw InputError("polytope: need m >= n constraints (m=" + std::to_string(A_.rows()) +
                     ", n=" + std::to_string(A_.cols()) + ")");
  if (!all_finite(A_) || !b_.allFinite()) throw InputError("polytope: non-finite entry");
  Eigen::JacobiSVD<Matrix> svd(A_);
  const Vector& sv = svd.singularValues();
  if (sv(0) == 0.0 || sv(sv.size() - 1) <= rank_tol * sv(0))
    throw RankError("polytope: A is rank deficient");
}

Vector Polytope::slack(const Vector& x) const {
  if (x.size() != n())
    throw InputError("point has dimension " + std::to_string(x.size()) + ", expected " +
                     std::to_string(n()));
  return A_ * x - b_;
}

Polytope load_polytope(const nlohmann::json& doc) {
  if (!doc.is_object() || !doc.contains("A") || !doc.contains("b"))
    throw InputError("polytope document needs keys \"A\" and \"b\"");
  const auto& jA = doc.at("A");
  const auto& jb = doc.at("b");
  if (!jA.is_array() || !jb.is_array() || jA.empty())
    throw InputError("polytope: \"A\" and \"b\" must be non-empty arrays");
  const Index m = static_cast<Index>(jA.size());
  if (!jA[0].is_array() || jA[0].empty()) throw InputError("polytope: rows of A must be arrays");
  const Index n = static_cast<Index>(jA[0].size());
  Matrix A(m, n);
  for (Index i = 0; i < m; ++i) {
    const auto& row = jA[static_cast<size_t>(i)];
    if (!row.is_array() || static_cast<Index>(row.size()) != n)
      throw InputError("polytope: row " + std::to_string(i) + " of A has wrong length");
    for (Index j = 0; j < n; ++j) {
      const auto& e = row[static_cast<size_t>(j)];
      if (!e.is_number()) throw InputError("polytope: non-numeric entry in A");
      A(i, j) = e.get<double>();
    }
  }
  Vector b(static_cast<Index>(jb.size()));
  for (Index i = 0; i < b.size(); ++i) {
    const auto& e = jb[static_cast<size_t>(i)];
    if (!e.is_number()) throw InputError("polytope: non-numeric entry in b");
    b(i) = e.get<double>();
  }
  std::string name = doc.value("name", std::string{});
  return Polytope(std::move(A), std::move(b), std::move(name));
}

Polytope load_polytope_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open polytope file: " + path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw InputError("polytope file " + path + ": " + e.what());
  }
  return load_polytope(doc);
}

nlohmann::json to_json(const Polytope& P) {
  nlohmann::json A = nlohmann::json::array();
  for (Index i = 0; i < P.m(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Index j = 0; j < P.n(); ++j) row.push_back(P.A()(i, j));
    A.push_back(row);
  }
  nlohmann::json b = nlohmann::json::array();
  for (Index i = 0; i < P.m(); ++i) b.push_back(P.b()(i));
  nlohmann::json doc = {{"A", A}, {"b", b}};
  if (!P.name().empty()) doc["name"] = P.name();
  return doc;
}

Polytope make_box(const Vector& lo, const Vector& hi, std::string name) {
  if (lo.size() != hi.size() || lo.size() == 0) throw InputError("box: bad bounds");
  if ((hi - lo).minCoeff() <= 0) throw InputError("box: need lo < hi");
  const Index n = lo.size();
  Matrix A = Matrix::Zero(2 * n, n);
  Vector b(2 * n);
  for (Index i = 0; i < n; ++i) {
    A(2 * i, i) = 1.0;
    b(2 * i) = lo(i);
    A(2 * i + 1, i) = -1.0;
    b(2 * i + 1) = -hi(i);
  }
  return Polytope(std::move(A), std::move(b), std::move(name));
}

Polytope make_hypercube(Index n) {
  return make_box(Vector::Constant(n, -1.0), Vector::Constant(n, 1.0), "hypercube");
}

Polytope make_simplex(Index n) {
  Matrix A = Matrix::Zero(n + 1, n);
  Vector b = Vector::Zero(n + 1);
  A.topRows(n).setIdentity();
  A.row(n).setConstant(-1.0);
  b(n) = -1.0;
  return Polytope(std::move(A), std::move(b), "simplex");
}

Polytope make_interval(double lo, double hi) {
  return make_box(Vector::Constant(1, lo), Vector::Constant(1, hi), "interval");
}

bool contains(const Polytope& P, const Vector& x) {
  if (x.size() != P.n() || !x.allFinite()) return false;
  return (P.slack(x).array() > 0.0).all();
}

LocalMetric::LocalMetric(const Polytope& P, const Vector& x, const Tolerances& tol)
    : P_(&P), x_(x) {
  if (!x.allFinite()) throw DomainError("point has non-finite coordinates");
  s_ = P.slack(x);
  const double smin = s_.minCoeff();
  if (smin <= 0.0) throw DomainError("point is not in the interior of the polytope");
  if (smin < tol.boundary_guard * guard_scale(P.b()))
    throw DomainError("point is too close to the boundary (min slack " + std::to_string(smin) +
                      ")");
  Ax_ = s_.cwiseInverse().asDiagonal() * P.A();
  g_.noalias() = Ax_.transpose() * Ax_;
  llt_.compute(g_);
  if (llt_.info() != Eigen::Success) throw FactorizationError("metric is not positive definite");
  const Vector d = llt_.matrixLLT().diagonal();
  const double ratio = d.minCoeff() / d.maxCoeff();
  if (!(ratio * ratio >= tol.min_pivot_ratio))
    throw FactorizationError("metric factorization is numerically singular");
}

double LocalMetric::log_det() const {
  const Matrix& L = llt_.matrixLLT();
  double s = 0.0;
  for (Index i = 0; i < L.rows(); ++i) s += std::log(L(i, i));
  return 2.0 * s;
}

ManifoldPoint::ManifoldPoint(const Polytope& P, const Vector& x, const Tolerances& tol)
    : local_(P, x, tol) {
  kernels::leverage(local_.lower(), local_.Ax(), W_, sigma_);
  mu_ = local_.solve(Vector(local_.Ax().transpose() * sigma_));
}

ManifoldPoint make_point(const Polytope& P, const Vector& x, const Tolerances& tol) {
  return ManifoldPoint(P, x, tol);
}

const Vector& drift(const ManifoldPoint& p) { return p.drift(); }

double metric_inner(const LocalMetric& p, const Vector& u, const Vector& v) {
  return (p.Ax() * u).dot(p.Ax() * v);
}
double metric_inner(const ManifoldPoint& p, const Vector& u, const Vector& v) {
  return metric_inner(p.local(), u, v);
}
double log_det_metric(const LocalMetric& p) { return p.log_det(); }
double log_det_metric(const ManifoldPoint& p) { return p.local().log_det(); }

Vector find_interior_point(const Polytope& P, const Tolerances& tol) {
  const Index n = P.n(), m = P.m();
  const Matrix& A = P.A();
  const Vector& b = P.b();
  const double scale = guard_scale(b);
  const double margin = 1e3 * tol.boundary_guard * scale;

  Vector x = Vector::Zero(n);
  if ((A * x - b).minCoeff() > margin) return x;
  double t = (b - A * x).maxCoeff() + 1.0;

  double kappa = 1.0;
  for (int round = 0; round < tol.phase_one_max_rounds; ++round, kappa *= 4.0) {
    for (int it = 0; it < tol.newton_max_iters; ++it) {
      const Vector r = A * x - b + Vector::Constant(m, t);
      const Vector ri = r.cwiseInverse();
      const Vector d = ri.cwiseAbs2();
      Matrix H(n + 1, n + 1);
      H.topLeftCorner(n, n) = A.transpose() * d.asDiagonal() * A;
      H.topRightCorner(n, 1) = A.transpose() * d;
      H.bottomLeftCorner(1, n) = H.topRightCorner(n, 1).transpose();
      H(n, n) = d.sum();
      Vector grad(n + 1);
      grad.head(n) = -A.transpose() * ri;
      grad(n) = kappa - ri.sum();
      Eigen::LDLT<Matrix> ldlt(H);
      if (ldlt.info() != Eigen::Success)
        throw ConvergenceError("phase one: singular Newton system (unbounded polytope?)");
      const Vector step = -ldlt.solve(grad);
      const double lambda2 = -grad.dot(step);
      if (!std::isfinite(lambda2)) throw ConvergenceError("phase one: non-finite Newton step");
      double alpha = 1.0 / (1.0 + std::sqrt(std::max(lambda2, 0.0)));
      const Vector dr = A * step.head(n) + Vector::Constant(m, step(n));
      while (((r + alpha * dr).array() <= 0.0).any()) alpha *= 0.5;
      x += alpha * step.head(n);
      t += alpha * step(n);
      if ((A * x - b).minCoeff() > margin) return x;
      if (lambda2 < 1e-12) break;
    }
  }
  throw ConvergenceError("phase one: no strictly interior point found (empty interior?)");
}

ManifoldPoint analytic_center(const Polytope& P, const std::optional<Vector>& start,
                              const Tolerances& tol) {
  Vector x = start ? *start : find_interior_point(P, tol);
  if (!contains(P, x)) throw DomainError("analytic center: start point is not interior");
  try {
    for (int it = 0; it < tol.center_max_iters; ++it) {
      const LocalMetric lm(P, x, tol);
      const Vector grad = -lm.Ax().transpose() * Vector::Ones(P.m());
      const Vector step = -lm.solve(grad);
      const double lambda = std::sqrt(std::max(0.0, -grad.dot(step)));
      if (lambda <= tol.center_tol) return ManifoldPoint(P, x, tol);
      if (!step.allFinite()) throw ConvergenceError("analytic center: non-finite Newton step");
      double alpha = lambda > 0.25 ? 1.0 / (1.0 + lambda) : 1.0;
      while (!contains(P, x + alpha * step)) alpha *= 0.5;
      x += alpha * step;
    }
  } catch (const FactorizationError& e) {
    throw ConvergenceError(std::string("analytic center diverged: ") + e.what());
  }
  throw ConvergenceError("analytic center: iteration cap reached (unbounded polytope?)");
}

Vector barrier_maximize(const Polytope& P, const Vector& c, const Vector& start, double gap_tol,
                        const Tolerances& tol) {
  if (!contains(P, start)) throw DomainError("barrier_maximize: start point is not interior");
  Vector x = start;
  const Index m = P.m();
  double tau = 1.0;
  while (true) {
    bool done = false;
    for (int it = 0; it < tol.newton_max_iters && !done; ++it) {
      const LocalMetric lm(P, x, Tolerances{.boundary_guard = 0.0, .min_pivot_ratio = 0.0});
      const Vector grad = -tau * c - lm.Ax().transpose() * Vector::Ones(m);
      const Vector step = -lm.solve(grad);
      const double lambda = std::sqrt(std::max(0.0, -grad.dot(step)));
      if (lambda < 1e-7) {
        done = true;
        break;
      }
      if (!step.allFinite()) throw ConvergenceError("barrier_maximize: non-finite Newton step");
      double alpha = 1.0 / (1.0 + lambda);
      while (!contains(P, x + alpha * step)) alpha *= 0.5;
      x += alpha * step;
    }
    if (!done) throw ConvergenceError("barrier_maximize: objective appears unbounded");
    if (static_cast<double>(m) / tau < gap_tol) return x;
    tau *= 10.0;
  }
}

}  // namespace geowalk
