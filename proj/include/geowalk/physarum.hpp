#pragma once

#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "geowalk/collocation.hpp"
#include "geowalk/types.hpp"

namespace geowalk {

// min c^T x subject to Ax = b, x >= 0, started from a strictly positive
// feasible x0.
struct PhysarumProblem {
  Matrix A;  // m x n, full row rank
  Vector b;
  Vector c;  // strictly positive
  Vector x0;

  void validate(double feasibility_tol = 1e-10) const;
  Index m() const { return A.rows(); }
  Index n() const { return A.cols(); }
};

PhysarumProblem load_physarum(const nlohmann::json& doc);
PhysarumProblem load_physarum_file(const std::string& path);
nlohmann::json to_json(const PhysarumProblem& p);

// dx/dt = W A^T (A W A^T)^-1 b - x, W = diag(x / c).
Vector physarum_rhs(const Vector& x, const PhysarumProblem& prob);
// Same flow in y = ln x: dy/dt = (A^T lambda) / c - 1, lambda = (A W A^T)^-1 b.
Vector physarum_log_rhs(const Vector& y, const PhysarumProblem& prob);

struct PhysarumCheckpoint {
  double t = 0;
  Vector x;
  double objective = 0;
  double infeasibility = 0;  // |Ax - b|_inf
};

struct PhysarumResult {
  Vector x;  // x(T)
  std::vector<PhysarumCheckpoint> trajectory;
  double max_infeasibility = 0;
  double max_increase = 0;        // largest rise of c^T x between checkpoints
  double last_increase_time = 0;  // end of the non-monotone window, 0 if none
  bool monotonicity_warning = false;  // a rise > 1e-9 in the second half of [0, T]
  std::vector<Index> underflowed;     // components driven to zero (optimal face)
  SolveReport report;
  int steps = 0;
};

// Multistep collocation in log coordinates; checkpoints are evenly spaced,
// both ends included.
PhysarumResult physarum_solve(const PhysarumProblem& prob, double T, double eps = 1e-10,
                              int checkpoints = 101, CollocationConfig cfg = {});
// The same flow integrated directly in x. For testing only.
PhysarumResult physarum_solve_raw(const PhysarumProblem& prob, double T, double eps = 1e-10,
                                  int checkpoints = 101, CollocationConfig cfg = {});

std::string trajectory_csv(const PhysarumResult& r);
nlohmann::json to_json(const PhysarumResult& r);

}  // namespace geowalk
