#include "support.hpp"

#include <cmath>
#include <limits>

namespace geowalk::testing {

Vector random_unit(Index n, Rng& rng) {
  std::normal_distribution<double> N;
  Vector u(n);
  for (Index i = 0; i < n; ++i) u(i) = N(rng);
  return u.normalized();
}

Polytope random_polytope(Index n, Index m, Rng& rng) {
  if (m < n + 1) throw InputError("random_polytope needs m >= n + 1");
  std::normal_distribution<double> N;
  std::uniform_real_distribution<double> U(0.0, 1.0);
  Matrix G(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) G(i, j) = N(rng);
  const Matrix Q = Eigen::HouseholderQR<Matrix>(G).householderQ();
  Matrix A(m, n);
  Vector b(m);
  for (Index i = 0; i < n; ++i) A.row(i) = Q.row(i);
  A.row(n) = -Q.colwise().sum() / std::sqrt(static_cast<double>(n));
  for (Index i = n + 1; i < m; ++i) A.row(i) = random_unit(n, rng).transpose();
  for (Index i = 0; i < m; ++i) b(i) = -(0.5 + U(rng));
  return Polytope(A, b, "random");
}

Vector random_interior_point(const Polytope& P, Rng& rng, double reach) {
  const Vector c = analytic_center(P).x();
  const Vector d = random_unit(P.n(), rng);
  const Vector s = P.slack(c);
  const Vector Ad = P.A() * d;
  double tmax = std::numeric_limits<double>::infinity();
  for (Index i = 0; i < P.m(); ++i)
    if (Ad(i) < 0) tmax = std::min(tmax, s(i) / -Ad(i));
  std::uniform_real_distribution<double> U(0.0, reach);
  return c + U(rng) * tmax * d;
}

namespace {

bool next_combination(std::vector<Index>& idx, Index n) {
  const Index k = static_cast<Index>(idx.size());
  for (Index i = k - 1; i >= 0; --i) {
    if (idx[static_cast<size_t>(i)] < n - k + i) {
      ++idx[static_cast<size_t>(i)];
      for (Index j = i + 1; j < k; ++j)
        idx[static_cast<size_t>(j)] = idx[static_cast<size_t>(j - 1)] + 1;
      return true;
    }
  }
  return false;
}

}  // namespace

LpSolution lp_vertex_enumeration(const Matrix& A, const Vector& b, const Vector& c) {
  const Index m = A.rows(), n = A.cols();
  std::vector<Index> idx(static_cast<size_t>(m));
  for (Index i = 0; i < m; ++i) idx[static_cast<size_t>(i)] = i;
  LpSolution best{std::numeric_limits<double>::infinity(), Vector::Zero(n)};
  do {
    Matrix B(m, m);
    for (Index j = 0; j < m; ++j) B.col(j) = A.col(idx[static_cast<size_t>(j)]);
    Eigen::FullPivLU<Matrix> lu(B);
    if (lu.rank() < m) continue;
    const Vector xb = lu.solve(b);
    if ((xb.array() < -1e-12).any()) continue;
    Vector x = Vector::Zero(n);
    for (Index j = 0; j < m; ++j) x(idx[static_cast<size_t>(j)]) = std::max(0.0, xb(j));
    const double val = c.dot(x);
    if (val < best.value) best = {val, x};
  } while (next_combination(idx, n));
  if (!std::isfinite(best.value)) throw ConvergenceError("LP has no basic feasible solution");
  return best;
}

Vector rk4(const std::function<Vector(const Vector&, double)>& F, Vector u, double T, int steps) {
  const double dt = T / steps;
  for (int k = 0; k < steps; ++k) {
    const double t = k * dt;
    const Vector k1 = F(u, t);
    const Vector k2 = F(u + 0.5 * dt * k1, t + 0.5 * dt);
    const Vector k3 = F(u + 0.5 * dt * k2, t + 0.5 * dt);
    const Vector k4 = F(u + dt * k3, t + dt);
    u += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return u;
}

double rel_err(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

double rel_err(const Vector& a, const Vector& b) {
  return (a - b).norm() / std::max(1.0, b.norm());
}

}  // namespace geowalk::testing
