#include "geowalk/geometry.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace geowalk {

Vector christoffel_action(const LocalMetric& p, const Vector& u, const Vector& v) {
  const Vector su = p.Ax() * u;
  const Vector sv = p.Ax() * v;
  return -p.solve(Vector(p.Ax().transpose() * su.cwiseProduct(sv)));
}

Vector geodesic_rhs(const LocalMetric& p, const Vector& velocity) {
  const Vector s = p.Ax() * velocity;
  return p.solve(Vector(p.Ax().transpose() * s.cwiseAbs2()));
}

Vector parallel_transport_rhs(const LocalMetric& p, const Vector& curve_velocity, const Vector& v) {
  const Vector s = p.Ax() * curve_velocity;
  const Vector sv = p.Ax() * v;
  return p.solve(Vector(p.Ax().transpose() * s.cwiseProduct(sv)));
}

Matrix parallel_transport_rhs(const LocalMetric& p, const Vector& curve_velocity, const Matrix& V) {
  const Vector s = p.Ax() * curve_velocity;
  const Matrix SV = s.asDiagonal() * (p.Ax() * V);
  return p.solve(Matrix(p.Ax().transpose() * SV));
}

double riemann_inner(const LocalMetric& p, const Vector& u, const Vector& v, const Vector& w,
                     const Vector& z) {
  const Matrix& Ax = p.Ax();
  const Vector su = Ax * u, sv = Ax * v, sw = Ax * w, sz = Ax * z;
  // a^T P b = (A_x^T a)^T g^-1 (A_x^T b)
  auto pform = [&](const Vector& a, const Vector& b) {
    const Vector ta = Ax.transpose() * a;
    const Vector tb = Ax.transpose() * b;
    return ta.dot(p.solve(tb));
  };
  return pform(su.cwiseProduct(sw), sv.cwiseProduct(sz)) -
         pform(su.cwiseProduct(sz), sv.cwiseProduct(sw));
}

double ricci(const LocalMetric& p, const Vector& u) {
  const Matrix W = p.factor().matrixL().solve(Matrix(p.Ax().transpose()));
  const Vector s = p.Ax() * u;
  const Vector sigma = W.colwise().squaredNorm().transpose();
  const Matrix M = W * s.asDiagonal() * W.transpose();
  return M.squaredNorm() - (W * sigma).dot(W * s.cwiseAbs2());
}

Matrix orthonormal_frame(const LocalMetric& p) {
  return p.factor().matrixU().solve(Matrix(Matrix::Identity(p.n(), p.n())));
}

double frame_orthonormality_defect(const LocalMetric& p, const Matrix& X) {
  const Matrix Y = p.Ax() * X;
  return (Y.transpose() * Y - Matrix::Identity(X.cols(), X.cols())).cwiseAbs().maxCoeff();
}

Matrix orthonormalize_frame(const LocalMetric& p, const Matrix& X) {
  Matrix Q = X;
  for (Index j = 0; j < Q.cols(); ++j) {
    for (Index i = 0; i < j; ++i) Q.col(j) -= metric_inner(p, Q.col(i), Q.col(j)) * Q.col(i);
    const double nrm = std::sqrt(metric_inner(p, Q.col(j), Q.col(j)));
    if (!(nrm > 0)) throw FactorizationError("frame is degenerate");
    Q.col(j) /= nrm;
  }
  return Q;
}

CurvatureOperator frame_curvature_matrix(const LocalMetric& p, const Vector& curve_velocity,
                                         const Matrix& frame, const Tolerances& tol) {
  if (frame.rows() != p.n() || frame.cols() != p.n())
    throw InputError("frame_curvature_matrix: frame must be n x n");
  if (frame_orthonormality_defect(p, frame) > tol.frame_check)
    throw DomainError("frame_curvature_matrix: frame is not g-orthonormal");
  const Matrix& Ax = p.Ax();
  const Matrix Y = Ax * frame;
  const Vector s = Ax * curve_velocity;
  const Matrix C = Ax.transpose() * (s.asDiagonal() * Y);
  const Matrix term1 = C.transpose() * p.solve(C);
  const Vector d = Ax * p.solve(Vector(Ax.transpose() * s.cwiseAbs2()));
  const Matrix term2 = Y.transpose() * d.asDiagonal() * Y;
  Matrix R = term1 - term2;
  R = 0.5 * (R + R.transpose()).eval();
  return {std::move(R), frame};
}

double auxiliary_V(std::span<const Vector> slack_velocities, double h, Index n) {
  const double nd = static_cast<double>(n);
  const double denom = std::sqrt(std::log(nd) / nd) + std::sqrt(h);
  double best = 0.0;
  for (const Vector& s : slack_velocities) {
    const double l4 = std::sqrt(std::sqrt(s.array().pow(4).sum()));
    const double linf = s.size() ? s.cwiseAbs().maxCoeff() : 0.0;
    best = std::max(best, l4 * std::pow(nd, 0.25) + linf / denom);
  }
  return best;
}

double auxiliary_V(const Polytope& P, std::span<const CurveSample> samples, double h) {
  std::vector<Vector> s;
  s.reserve(samples.size());
  for (const auto& c : samples) {
    const Vector slack = P.slack(c.x);
    s.push_back((P.A() * c.velocity).cwiseQuotient(slack));
  }
  return auxiliary_V(std::span<const Vector>(s), h, P.n());
}

double hilbert_distance(const Polytope& P, const Vector& x, const Vector& y) {
  if (!contains(P, x) || !contains(P, y))
    throw DomainError("hilbert_distance: points must be interior");
  const Vector d = y - x;
  if (d.norm() == 0.0) return 0.0;
  const Vector s = P.slack(x);
  const Vector ad = P.A() * d;
  double tp = -std::numeric_limits<double>::infinity();
  double tq = std::numeric_limits<double>::infinity();
  for (Index i = 0; i < s.size(); ++i) {
    if (ad(i) > 0)
      tp = std::max(tp, -s(i) / ad(i));
    else if (ad(i) < 0)
      tq = std::min(tq, s(i) / -ad(i));
  }
  if (!std::isfinite(tp) || !std::isfinite(tq))
    throw DomainError("hilbert_distance: polytope is unbounded along the chord");
  return std::log1p((tq - tp) / ((-tp) * (tq - 1.0)));
}

}  // namespace geowalk
