#pragma once

#include <span>

#include "geowalk/polytope.hpp"

namespace geowalk {

// R(t) in a g-orthonormal frame: Rt(i,j) = <R(X_i, v) v, X_j>.
struct CurvatureOperator {
  Matrix Rt;
  Matrix frame;
};

// Gamma(u,v) = -g^-1 A_x^T (s_u * s_v)
Vector christoffel_action(const LocalMetric& p, const Vector& u, const Vector& v);
// gamma'' = g^-1 A_x^T s_v^2
Vector geodesic_rhs(const LocalMetric& p, const Vector& velocity);
// dv/dt = g^-1 A_x^T S_{gamma'} A_x v, columnwise for a frame.
Vector parallel_transport_rhs(const LocalMetric& p, const Vector& curve_velocity, const Vector& v);
Matrix parallel_transport_rhs(const LocalMetric& p, const Vector& curve_velocity, const Matrix& V);

// <R(u,v)w,z> = (s_u s_w)^T P (s_v s_z) - (s_u s_z)^T P (s_v s_w)
double riemann_inner(const LocalMetric& p, const Vector& u, const Vector& v, const Vector& w,
                     const Vector& z);
// Ric(u) = s_u^T P^(2) s_u - sigma^T P s_u^2, P^(2) the entrywise square.
double ricci(const LocalMetric& p, const Vector& u);

CurvatureOperator frame_curvature_matrix(const LocalMetric& p, const Vector& curve_velocity,
                                         const Matrix& frame, const Tolerances& tol = {});

// L^-T, columns g-orthonormal.
Matrix orthonormal_frame(const LocalMetric& p);
double frame_orthonormality_defect(const LocalMetric& p, const Matrix& X);
// Modified Gram-Schmidt in the g inner product.
Matrix orthonormalize_frame(const LocalMetric& p, const Matrix& X);

// max over samples of ||s||_4 n^{1/4} + ||s||_inf / (sqrt(log n / n) + sqrt(h)),
// where s is the slack velocity A_x gamma'.
double auxiliary_V(std::span<const Vector> slack_velocities, double h, Index n);

struct CurveSample {
  Vector x;
  Vector velocity;
};
double auxiliary_V(const Polytope& P, std::span<const CurveSample> samples, double h);

double hilbert_distance(const Polytope& P, const Vector& x, const Vector& y);

}  // namespace geowalk
