#pragma once

namespace geowalk {

// Every numerical threshold used by the library. Defaults are the documented
// values; formulas read from here and never hard-code their own.
struct Tolerances {
  // make_point rejects min slack below boundary_guard * max|b| (or the
  // absolute value when b is zero).
  double boundary_guard = 1e-12;
  // Column-rank test on A: smallest/largest singular value ratio.
  double rank_tol = 1e-12;
  // Cholesky pivots with (min L_ii / max L_ii)^2 below this are treated as a
  // failed factorization.
  double min_pivot_ratio = 1e-16;

  double center_tol = 1e-8;  // ||grad phi||_{g^-1}
  int center_max_iters = 200;
  int phase_one_max_rounds = 40;
  int newton_max_iters = 100;

  double leverage_sum_tol = 1e-8;  // |sum sigma - n| <= tol * n

  // Frame drift above which the transported frame is re-orthonormalized.
  double frame_orthonormality = 1e-6;
  // frame_curvature_matrix refuses frames further off than this.
  double frame_check = 1e-6;

  int v_gamma_samples = 32;
  double v_gamma_threshold = 48.0;

  // log det Psi(l) below this counts as a singular exponential map.
  double singular_logdet = -30.0;
};

}  // namespace geowalk
