#pragma once

#include <cstdint>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "geowalk/polytope.hpp"
#include "geowalk/walk.hpp"

namespace geowalk {

// Log barrier on (alpha, beta): p = (x-alpha)^-2 + (beta-x)^-2,
// f(x) = int_mid^x sqrt(p), log part in closed form plus Gauss quadrature, f^-1 by bisection.
class OneDimBarrier {
 public:
  OneDimBarrier(double alpha, double beta);

  double lo() const { return alpha_; }
  double hi() const { return beta_; }
  double p(double x) const;
  double dp(double x) const;
  double f(double x) const;
  double f_inverse(double u) const;

 private:
  double alpha_, beta_, mid_;
};

// f^-1(f(x) + sqrt(p(x)) t v)
double oned_geodesic(const OneDimBarrier& bar, double x, double v, double t = 1.0);
// sqrt(p(y)/(2 pi h)) exp(-(f(x) - h p'(x)/(4 p(x)^{3/2}) - f(y))^2 / (2h))
double oned_transition_density(const OneDimBarrier& bar, double x, double y, double h);
double oned_log_transition_density(const OneDimBarrier& bar, double x, double y, double h);

// Brute-force versions of the geometry, written from index formulas with
// explicit inverses. Slow; for cross-checking only.
namespace oracle {
Matrix dense_metric(const Polytope& P, const Vector& x);
Matrix dense_projection(const Polytope& P, const Vector& x);
Vector dense_leverage(const Polytope& P, const Vector& x);
Vector dense_drift(const Polytope& P, const Vector& x);
double eigen_log_det(const Polytope& P, const Vector& x);
// Central differences of (1/2) log det g.
Vector fd_grad_half_logdet(const Polytope& P, const Vector& x, double step = 1e-6);
// phi_ijk = -2 sum_l (A_x)_li (A_x)_lj (A_x)_lk, stored at i + n(j + n k).
std::vector<double> third_derivative(const Polytope& P, const Vector& x);
// sum_ij Gamma^k_ij u_i v_j with Gamma^k_ij = 1/2 g^kl phi_ijl
Vector index_christoffel(const Polytope& P, const Vector& x, const Vector& u, const Vector& v);
// sum R_klij u_i v_j w_l z_k with R_klij = 1/4 g^pq (phi_jkp phi_ilq - phi_ikp phi_jlq)
double index_riemann(const Polytope& P, const Vector& x, const Vector& u, const Vector& v,
                     const Vector& w, const Vector& z);
double index_ricci(const Polytope& P, const Vector& x, const Vector& u);
// Hilbert distance with boundary hits located by bisection on membership.
double bisection_hilbert(const Polytope& P, const Vector& x, const Vector& y);
}  // namespace oracle

// Statistics.
double integrated_autocorrelation_time(const std::vector<double>& series, double window_c = 5.0);
double ks_statistic(std::vector<double> a, std::vector<double> b);
// Asymptotic two-sample p-value with effective sizes.
double ks_p_value(double D, double n_eff, double m_eff);

// Axis-aligned bounding box via barrier LPs, then rejection sampling.
struct BoundingBox {
  Vector lo, hi;
};
BoundingBox bounding_box(const Polytope& P);
Matrix rejection_sample(const Polytope& P, Index count, Rng& rng, long max_draws = 0);

// Closed-form moments for boxes and the standard simplex.
struct ExactMoments {
  Vector mean;
  Vector second;
};
std::optional<ExactMoments> exact_moments(const Polytope& P);

struct ProjectionTest {
  Vector direction;
  double ks = 0, p_value = 0, ess = 0;
};

struct UniformityReport {
  Index samples = 0;
  Vector mean, variance, ess;
  std::optional<ExactMoments> exact;
  Vector mean_z, second_z;  // (sample - exact) / SE with SE from ESS
  std::vector<ProjectionTest> projections;
  int projections_passed = 0;
  bool pass = false;
};
UniformityReport uniformity_report(const Matrix& samples, const Polytope& P, std::uint64_t seed,
                                   Index reference_size = 20000);
nlohmann::json to_json(const UniformityReport& r);

struct ComparisonRow {
  std::string walk;
  double h = 0;
  double radius = 0;
  double accept_rate = 0;
  double iat = 0;
  long steps = 0;
};
// Geodesic walk at each h and the Dikin walk at the matched radius sqrt(n h),
// both from the analytic center with the same seed. IAT of <x, u> for a
// fixed random unit u.
std::vector<ComparisonRow> compare_walks(const Polytope& P, const std::vector<double>& h_grid,
                                         long steps, std::uint64_t seed,
                                         const WalkConfig& base = {}, bool parallel = true);
std::string comparison_csv(const std::vector<ComparisonRow>& rows);

}  // namespace geowalk
