#pragma once

#include "geowalk/types.hpp"

namespace geowalk::kernels {

// W = L^-1 A_x^T, sigma_i = ||W_:,i||^2. Serial reference and OpenMP version
// (columns split across threads). Same result bit for bit.
void leverage_serial(const Matrix& L, const Matrix& Ax, Matrix& W, Vector& sigma);
void leverage_parallel(const Matrix& L, const Matrix& Ax, Matrix& W, Vector& sigma);
// Picks the parallel path once m * n^2 is large enough to pay for the threads.
void leverage(const Matrix& L, const Matrix& Ax, Matrix& W, Vector& sigma);

// Y^T diag(d) Y.
Matrix weighted_gram_serial(const Matrix& Y, const Vector& d);
Matrix weighted_gram_parallel(const Matrix& Y, const Vector& d);

int max_threads();

}  // namespace geowalk::kernels
