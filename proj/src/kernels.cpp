#include "geowalk/kernels.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace geowalk::kernels {

namespace {

void solve_column(const Matrix& L, const Matrix& Ax, Matrix& W, Index i) {
  W.col(i) = Ax.row(i).transpose();
  L.triangularView<Eigen::Lower>().solveInPlace(W.col(i));
}

}  // namespace

void leverage_serial(const Matrix& L, const Matrix& Ax, Matrix& W, Vector& sigma) {
  const Index m = Ax.rows();
  W.resize(Ax.cols(), m);
  sigma.resize(m);
  for (Index i = 0; i < m; ++i) {
    solve_column(L, Ax, W, i);
    sigma(i) = W.col(i).squaredNorm();
  }
}

void leverage_parallel(const Matrix& L, const Matrix& Ax, Matrix& W, Vector& sigma) {
  const Index m = Ax.rows();
  W.resize(Ax.cols(), m);
  sigma.resize(m);
#pragma omp parallel for schedule(static)
  for (Index i = 0; i < m; ++i) {
    solve_column(L, Ax, W, i);
    sigma(i) = W.col(i).squaredNorm();
  }
}

void leverage(const Matrix& L, const Matrix& Ax, Matrix& W, Vector& sigma) {
  const double work = static_cast<double>(Ax.rows()) * Ax.cols() * Ax.cols();
  if (work > 2e5 && max_threads() > 1)
    leverage_parallel(L, Ax, W, sigma);
  else
    leverage_serial(L, Ax, W, sigma);
}

Matrix weighted_gram_serial(const Matrix& Y, const Vector& d) {
  const Index n = Y.cols();
  Matrix G(n, n);
  for (Index j = 0; j < n; ++j)
    for (Index i = 0; i <= j; ++i) {
      double s = 0.0;
      for (Index k = 0; k < Y.rows(); ++k) s += Y(k, i) * d(k) * Y(k, j);
      G(i, j) = s;
      G(j, i) = s;
    }
  return G;
}

Matrix weighted_gram_parallel(const Matrix& Y, const Vector& d) {
  const Index n = Y.cols();
  Matrix G(n, n);
#pragma omp parallel for schedule(dynamic)
  for (Index j = 0; j < n; ++j)
    for (Index i = 0; i <= j; ++i) {
      double s = 0.0;
      for (Index k = 0; k < Y.rows(); ++k) s += Y(k, i) * d(k) * Y(k, j);
      G(i, j) = s;
      G(j, i) = s;
    }
  return G;
}

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace geowalk::kernels
