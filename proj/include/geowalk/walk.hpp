#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "geowalk/collocation.hpp"
#include "geowalk/geometry.hpp"
#include "geowalk/polytope.hpp"

namespace geowalk {

enum class FailureReason { None, Exit, Singular, NonContraction };
const char* to_string(FailureReason r);

struct WalkConfig {
  double h = 0.0;               // 0 selects step_constant / n^{3/4}
  double step_constant = 0.1;
  CollocationConfig collocation{};
  std::uint64_t seed = 0;
  int max_retries = 1;          // re-solves of a failed proposal at higher degree
  int retry_degree_increment = 8;
  bool record_diagnostics = false;
  long burn_in = -1;            // -1 selects 10 * ceil(1/h)
  long thin = 1;
  Tolerances tol{};

  static double default_step(Index n, double c = 0.1);
  double resolved_h(Index n) const;
  long resolved_burn_in(Index n) const;
  void validate() const;
};

// Internal geodesics run on [0, l] with l = sqrt(n h) and gamma'(0) = v / l,
// where v = sqrt(h) w + (h/2) mu is the tangent the densities are written in.
struct Rescaled {
  double ell;
  Vector velocity;
};
Rescaled to_rescaled(const Vector& v_unscaled, double h, Index n);
Vector to_unscaled(const Vector& rescaled_velocity, double ell);

struct Geodesic {
  PiecewiseCurve position;
  PiecewiseCurve velocity;
  double ell = 0.0;
  SolveReport report;
};

// Solves gamma'' = g^-1 A_x^T s_{gamma'}^2 from x with gamma'(0) = velocity on
// [0, ell]. Throws DomainError when the curve leaves the polytope.
Geodesic solve_geodesic(const Polytope& P, const Vector& x, const Vector& velocity, double ell,
                        const CollocationConfig& cfg, const Tolerances& tol = {});
// Times at which a solved geodesic is checked: every node plus `uniform` evenly
// spaced points including both ends.
std::vector<double> sample_times(const Geodesic& g, int uniform);

enum class Direction { Forward, Backward };

struct JacobiResult {
  double logdet = 0.0;
  Matrix psi;                // Psi(l)
  double max_curvature = 0;  // max ||R(t)||_F over the Jacobi nodes
  double frame_defect = 0;   // orthonormality defect of the transported frame at l
  int reorthonormalized = 0;
  SolveReport transport_report;
  SolveReport jacobi_report;
};
// Psi'' + R(t) Psi = 0, Psi(0) = 0, Psi'(0) = I/l along the geodesic (or its
// reversal). log det d exp = log det Psi(l). Throws FactorizationError when
// Psi(l) is singular.
JacobiResult solve_jacobi(const Polytope& P, const Geodesic& g, Direction dir,
                          const CollocationConfig& cfg, const Tolerances& tol = {});
double logdet_dexp(const Polytope& P, const Geodesic& g, Direction dir,
                   const CollocationConfig& cfg, const Tolerances& tol = {});

// -logdet + (1/2) log det g(to) - (n/2) log(2 pi h) - |v - (h/2) mu(from)|^2_from / (2h)
double transition_log_density(const ManifoldPoint& from, const Vector& v, const LocalMetric& to,
                              double logdet, double h);

// w = L^-T z, covariance g^-1.
Vector sample_gaussian_direction(const LocalMetric& p, Rng& rng);

struct WalkStep {
  Vector from;
  Vector w;
  Vector v_fwd;
  Vector to;
  Vector v_rev;
  double log_fwd = 0, log_rev = 0;
  double logdet_fwd = 0, logdet_rev = 0;
  double V_gamma = 0;
  double speed_deviation = 0;
  double max_curvature = 0;
  double log_ratio = 0;  // log p(y->x) - log p(x->y)
  bool accepted = false;
  FailureReason failure = FailureReason::None;
  std::string message;
  std::optional<Geodesic> geodesic;
};

// Full proposal for a given Gaussian draw w: geodesic, reverse tangent, both
// Jacobi determinants and log densities. Numerical failures are recorded in
// `failure`, never thrown.
WalkStep propose_with_direction(const ManifoldPoint& p, const Vector& w, const WalkConfig& cfg);
WalkStep propose(const ManifoldPoint& p, const WalkConfig& cfg, Rng& rng);
// Accept with probability min(1, exp(log_rev - log_fwd)); failures reject.
std::pair<ManifoldPoint, WalkStep> metropolis_step(const ManifoldPoint& p, const WalkConfig& cfg,
                                                   Rng& rng);

inline constexpr std::array<double, 5> kQuantileLevels{0.05, 0.25, 0.5, 0.75, 0.95};
std::vector<double> quantiles(std::vector<double> xs);

struct ChainStats {
  long steps = 0;
  long accepted = 0;
  long burn_in = 0;
  long burn_in_accepted = 0;
  double accept_rate = 0.0;
  long fail_exit = 0;
  long fail_singular = 0;
  long fail_non_contraction = 0;
  std::vector<double> v_gamma;    // per successful proposal
  std::vector<double> log_ratio;  // per successful proposal
  double wall_time_s = 0.0;
  std::uint64_t seed = 0;
  double h = 0.0;
  bool zero_acceptance = false;
};

struct ChainResult {
  Matrix samples;  // one row per retained state
  ChainStats stats;
};

// burn_in steps are discarded, then `steps` steps are run and every thin-th
// state is kept. The generator is seeded from cfg.seed.
ChainResult run_chain(const Polytope& P, const Vector& start, long steps, const WalkConfig& cfg);
ChainResult run_chain(const Polytope& P, const Vector& start, long steps, const WalkConfig& cfg,
                      Rng& rng);
// K chains with seeds cfg.seed + k, concurrently when parallel is set.
std::vector<ChainResult> run_chains(const Polytope& P, const Vector& start, long steps,
                                    const WalkConfig& cfg, int chains, bool parallel = true);

// Dikin baseline: y = x + r L^-T z / sqrt(n), Metropolis-filtered.
struct DikinStep {
  Vector to;
  double log_ratio = 0;
  bool accepted = false;
  bool exited = false;
};
DikinStep dikin_propose(const ManifoldPoint& p, double r, Rng& rng);
ManifoldPoint dikin_walk_step(const ManifoldPoint& p, double r, Rng& rng,
                              DikinStep* record = nullptr);
ChainResult run_dikin_chain(const Polytope& P, const Vector& start, long steps, double r,
                            std::uint64_t seed, long burn_in = 0, long thin = 1);

}  // namespace geowalk
