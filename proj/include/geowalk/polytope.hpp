#pragma once

#include <nlohmann/json.hpp>
#include <optional>
#include <string>

#include "geowalk/errors.hpp"
#include "geowalk/tolerances.hpp"
#include "geowalk/types.hpp"

namespace geowalk {

// {x : Ax > b}. Immutable after construction.
class Polytope {
 public:
  Polytope(Matrix A, Vector b, std::string name = {}, double rank_tol = Tolerances{}.rank_tol);

  const Matrix& A() const { return A_; }
  const Vector& b() const { return b_; }
  Index m() const { return A_.rows(); }
  Index n() const { return A_.cols(); }
  const std::string& name() const { return name_; }

  Vector slack(const Vector& x) const;

 private:
  Matrix A_;
  Vector b_;
  std::string name_;
};

Polytope load_polytope(const nlohmann::json& doc);
Polytope load_polytope_file(const std::string& path);
nlohmann::json to_json(const Polytope& P);

Polytope make_box(const Vector& lo, const Vector& hi, std::string name = "box");
Polytope make_hypercube(Index n);  // [-1,1]^n
Polytope make_simplex(Index n);    // x >= 0, sum x <= 1
Polytope make_interval(double lo, double hi);

bool contains(const Polytope& P, const Vector& x);

// Slack, A_x = S^-1 A and the Cholesky factor of g = A_x^T A_x. Cheap: no
// leverage scores. Holds a pointer to the polytope, which must outlive it.
class LocalMetric {
 public:
  LocalMetric(const Polytope& P, const Vector& x, const Tolerances& tol = {});

  const Polytope& polytope() const { return *P_; }
  const Vector& x() const { return x_; }
  const Vector& slack() const { return s_; }
  const Matrix& Ax() const { return Ax_; }
  const Matrix& metric() const { return g_; }
  const Eigen::LLT<Matrix>& factor() const { return llt_; }
  Matrix lower() const { return llt_.matrixL(); }
  Index n() const { return Ax_.cols(); }
  Index m() const { return Ax_.rows(); }

  Vector solve(const Vector& rhs) const { return llt_.solve(rhs); }
  Matrix solve(const Matrix& rhs) const { return llt_.solve(rhs); }
  // s_u = A_x u
  Vector slack_velocity(const Vector& u) const { return Ax_ * u; }
  double log_det() const;

 private:
  const Polytope* P_;
  Vector x_;
  Vector s_;
  Matrix Ax_;
  Matrix g_;
  Eigen::LLT<Matrix> llt_;
};

// LocalMetric plus leverage scores and drift.
class ManifoldPoint {
 public:
  ManifoldPoint(const Polytope& P, const Vector& x, const Tolerances& tol = {});

  const LocalMetric& local() const { return local_; }
  const Polytope& polytope() const { return local_.polytope(); }
  const Vector& x() const { return local_.x(); }
  const Vector& slack() const { return local_.slack(); }
  const Vector& leverage() const { return sigma_; }
  const Vector& drift() const { return mu_; }
  // W = L^-1 A_x^T (n x m); P_x = W^T W.
  const Matrix& whitened() const { return W_; }
  Index n() const { return local_.n(); }
  Index m() const { return local_.m(); }

 private:
  LocalMetric local_;
  Matrix W_;
  Vector sigma_;
  Vector mu_;
};

ManifoldPoint make_point(const Polytope& P, const Vector& x, const Tolerances& tol = {});
const Vector& drift(const ManifoldPoint& p);
double metric_inner(const LocalMetric& p, const Vector& u, const Vector& v);
double metric_inner(const ManifoldPoint& p, const Vector& u, const Vector& v);
double log_det_metric(const LocalMetric& p);
double log_det_metric(const ManifoldPoint& p);

// Strictly interior point by Newton on a shifted barrier.
Vector find_interior_point(const Polytope& P, const Tolerances& tol = {});
ManifoldPoint analytic_center(const Polytope& P, const std::optional<Vector>& start = {},
                              const Tolerances& tol = {});
// Approximate argmax of c^T x over P by barrier path following. Duality gap
// is at most gap_tol. Throws ConvergenceError if the objective is unbounded.
Vector barrier_maximize(const Polytope& P, const Vector& c, const Vector& start,
                        double gap_tol = 1e-7, const Tolerances& tol = {});

}  // namespace geowalk
