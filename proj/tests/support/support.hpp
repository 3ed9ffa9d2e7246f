#pragma once

#include <functional>

#include "geowalk/physarum.hpp"
#include "geowalk/polytope.hpp"

namespace geowalk::testing {

// Bounded polytope around the origin: the rows of a randomly rotated simplex
// (so the normals positively span R^n) plus m - n - 1 random unit normals,
// offsets b_i = -(0.5 + U).
Polytope random_polytope(Index n, Index m, Rng& rng);

// Uniform-ish interior point: random chord from the analytic center, a random
// fraction (at most `reach`) of the way to the boundary.
Vector random_interior_point(const Polytope& P, Rng& rng, double reach = 0.8);

Vector random_unit(Index n, Rng& rng);

struct LpSolution {
  double value;
  Vector x;
};
// min c^T x s.t. Ax = b, x >= 0 by enumerating every basis.
LpSolution lp_vertex_enumeration(const Matrix& A, const Vector& b, const Vector& c);

// Classical fixed-step fourth-order Runge-Kutta.
Vector rk4(const std::function<Vector(const Vector&, double)>& F, Vector u, double T, int steps);

// Relative error |a - b| / max(1, |b|).
double rel_err(double a, double b);
double rel_err(const Vector& a, const Vector& b);

}  // namespace geowalk::testing
