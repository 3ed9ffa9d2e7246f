#include "geowalk/walk.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <map>
#include <numbers>

namespace geowalk {

namespace {

Vector flatten(const Matrix& M) { return Eigen::Map<const Vector>(M.data(), M.size()); }

Matrix unflatten(const Vector& v, Index n) { return Eigen::Map<const Matrix>(v.data(), n, n); }

Vector standard_normal(Index n, Rng& rng) {
  std::normal_distribution<double> N(0.0, 1.0);
  Vector z(n);
  for (Index i = 0; i < n; ++i) z(i) = N(rng);
  return z;
}

double uniform01(Rng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

}  // namespace

const char* to_string(FailureReason r) {
  switch (r) {
    case FailureReason::None:
      return "none";
    case FailureReason::Exit:
      return "exit";
    case FailureReason::Singular:
      return "singular";
    case FailureReason::NonContraction:
      return "non_contraction";
  }
  return "unknown";
}

double WalkConfig::default_step(Index n, double c) {
  return c / std::pow(static_cast<double>(n), 0.75);
}

double WalkConfig::resolved_h(Index n) const { return h > 0 ? h : default_step(n, step_constant); }

long WalkConfig::resolved_burn_in(Index n) const {
  if (burn_in >= 0) return burn_in;
  return 10 * static_cast<long>(std::ceil(1.0 / resolved_h(n)));
}

void WalkConfig::validate() const {
  if (h < 0 || !std::isfinite(h)) throw InputError("walk: h must be positive");
  if (!(step_constant > 0)) throw InputError("walk: step constant must be positive");
  if (thin < 1) throw InputError("walk: thin must be >= 1");
  if (max_retries < 0) throw InputError("walk: max_retries must be >= 0");
  collocation.validate();
}

Rescaled to_rescaled(const Vector& v_unscaled, double h, Index n) {
  const double ell = std::sqrt(static_cast<double>(n) * h);
  return {ell, v_unscaled / ell};
}

Vector to_unscaled(const Vector& rescaled_velocity, double ell) { return ell * rescaled_velocity; }

Geodesic solve_geodesic(const Polytope& P, const Vector& x, const Vector& velocity, double ell,
                        const CollocationConfig& cfg, const Tolerances& tol) {
  const SecondOrderRhs F = [&P, &tol](const Vector& du, const Vector& u, double) {
    return geodesic_rhs(LocalMetric(P, u, tol), du);
  };
  CollocationConfig c = cfg;
  c.interval = ell;
  auto sol = collocation_second_order(F, x, velocity, c);
  Geodesic g{std::move(sol.position), std::move(sol.velocity), ell, sol.report};
  for (double t : sample_times(g, tol.v_gamma_samples))
    if (!contains(P, g.position.eval(t))) throw DomainError("geodesic exited polytope");
  return g;
}

std::vector<double> sample_times(const Geodesic& g, int uniform) {
  std::vector<double> t = g.position.node_times();
  for (int k = 0; k < uniform; ++k)
    t.push_back(uniform > 1 ? g.ell * k / (uniform - 1) : g.ell);
  std::sort(t.begin(), t.end());
  t.erase(std::unique(t.begin(), t.end()), t.end());
  return t;
}

JacobiResult solve_jacobi(const Polytope& P, const Geodesic& g, Direction dir,
                          const CollocationConfig& cfg, const Tolerances& tol) {
  const Index n = P.n();
  const double ell = g.ell;
  const bool fwd = dir == Direction::Forward;
  auto pos = [&](double t) -> Vector {
    return fwd ? g.position.eval(t) : g.position.eval(std::max(0.0, ell - t));
  };
  auto vel = [&](double t) -> Vector {
    return fwd ? g.velocity.eval(t) : Vector(-g.velocity.eval(std::max(0.0, ell - t)));
  };
  // Everything the transport and curvature callbacks need at time t, built
  // once per distinct t (Picard iterations revisit the same nodes).
  struct NodeData {
    LocalMetric metric;
    Vector velocity;
    Matrix transport;  // g^-1 A_x^T S_{gamma'} A_x
  };
  std::map<double, NodeData> nodes;
  auto node_at = [&](double t) -> const NodeData& {
    auto it = nodes.find(t);
    if (it != nodes.end()) return it->second;
    LocalMetric lm(P, pos(t), tol);
    Vector v = vel(t);
    Matrix T = parallel_transport_rhs(lm, v, Matrix(Matrix::Identity(n, n)));
    return nodes.emplace(t, NodeData{std::move(lm), std::move(v), std::move(T)}).first->second;
  };

  CollocationConfig c = cfg;
  c.interval = ell;
  JacobiResult out;

  const Matrix X0 = orthonormal_frame(node_at(0.0).metric);
  const FirstOrderRhs transport_rhs = [&](const Vector& xf, double t) {
    return flatten(node_at(t).transport * unflatten(xf, n));
  };
  const PiecewiseCurve frame =
      collocation_adaptive(transport_rhs, flatten(X0), 0.0, ell, c, &out.transport_report);

  std::map<double, Matrix> curvature;
  auto curvature_at = [&](double t) -> const Matrix& {
    auto it = curvature.find(t);
    if (it != curvature.end()) return it->second;
    const NodeData& nd = node_at(t);
    const LocalMetric& lm = nd.metric;
    Matrix X = unflatten(frame.eval(t), n);
    if (frame_orthonormality_defect(lm, X) > tol.frame_orthonormality) {
      X = orthonormalize_frame(lm, X);
      ++out.reorthonormalized;
    }
    Matrix R = frame_curvature_matrix(lm, nd.velocity, X, tol).Rt;
    out.max_curvature = std::max(out.max_curvature, R.norm());
    return curvature.emplace(t, std::move(R)).first->second;
  };
  const SecondOrderRhs jacobi_rhs = [&](const Vector&, const Vector& psi, double t) {
    return flatten(-curvature_at(t) * unflatten(psi, n));
  };
  const Matrix I = Matrix::Identity(n, n);
  auto sol = collocation_second_order(jacobi_rhs, Vector::Zero(n * n), flatten(I / ell), c);
  out.jacobi_report = sol.report;
  out.psi = unflatten(sol.position.end(), n);
  out.frame_defect = frame_orthonormality_defect(node_at(ell).metric, unflatten(frame.end(), n));

  Eigen::PartialPivLU<Matrix> lu(out.psi);
  const Vector diag = lu.matrixLU().diagonal();
  double sign = lu.permutationP().determinant();
  double logabs = 0.0;
  for (Index i = 0; i < n; ++i) {
    if (diag(i) == 0.0) throw FactorizationError("Jacobi matrix is singular");
    if (diag(i) < 0) sign = -sign;
    logabs += std::log(std::abs(diag(i)));
  }
  if (sign <= 0 || !std::isfinite(logabs) || logabs < tol.singular_logdet)
    throw FactorizationError("Jacobi matrix is singular");
  out.logdet = logabs;
  return out;
}

double logdet_dexp(const Polytope& P, const Geodesic& g, Direction dir,
                   const CollocationConfig& cfg, const Tolerances& tol) {
  return solve_jacobi(P, g, dir, cfg, tol).logdet;
}

double transition_log_density(const ManifoldPoint& from, const Vector& v, const LocalMetric& to,
                              double logdet, double h) {
  const double n = static_cast<double>(from.n());
  const Vector r = v - 0.5 * h * from.drift();
  const double q = metric_inner(from, r, r);
  return -logdet + 0.5 * to.log_det() - 0.5 * n * std::log(2.0 * std::numbers::pi * h) -
         q / (2.0 * h);
}

Vector sample_gaussian_direction(const LocalMetric& p, Rng& rng) {
  const Vector z = standard_normal(p.n(), rng);
  return p.factor().matrixU().solve(z);
}

namespace {

enum class Stage { Geodesic, Endpoint, Jacobi };

void attempt(const ManifoldPoint& p, const WalkConfig& cfg, const CollocationConfig& coll,
             WalkStep& s) {
  const Polytope& P = p.polytope();
  const Index n = p.n();
  const double h = cfg.resolved_h(n);
  const Rescaled r = to_rescaled(s.v_fwd, h, n);
  Stage stage = Stage::Geodesic;
  try {
    Geodesic g = solve_geodesic(P, p.x(), r.velocity, r.ell, coll, cfg.tol);
    stage = Stage::Endpoint;
    s.to = g.position.end();
    const ManifoldPoint q(P, s.to, cfg.tol);
    s.v_rev = -to_unscaled(g.velocity.end(), r.ell);

    std::vector<CurveSample> samples;
    const double sp0 = std::sqrt(metric_inner(p, r.velocity, r.velocity));
    s.speed_deviation = 0.0;
    for (double t : sample_times(g, cfg.tol.v_gamma_samples)) {
      CurveSample cs{g.position.eval(t), g.velocity.eval(t)};
      if (sp0 > 0) {
        const Vector sv = (P.A() * cs.velocity).cwiseQuotient(P.slack(cs.x));
        s.speed_deviation = std::max(s.speed_deviation, std::abs(sv.norm() - sp0) / sp0);
      }
      samples.push_back(std::move(cs));
    }
    s.V_gamma = auxiliary_V(P, std::span<const CurveSample>(samples), h);

    stage = Stage::Jacobi;
    const JacobiResult jf = solve_jacobi(P, g, Direction::Forward, coll, cfg.tol);
    const JacobiResult jb = solve_jacobi(P, g, Direction::Backward, coll, cfg.tol);
    s.logdet_fwd = jf.logdet;
    s.logdet_rev = jb.logdet;
    s.max_curvature = std::max(jf.max_curvature, jb.max_curvature);
    s.log_fwd = transition_log_density(p, s.v_fwd, q.local(), s.logdet_fwd, h);
    s.log_rev = transition_log_density(q, s.v_rev, p.local(), s.logdet_rev, h);
    s.log_ratio = s.log_rev - s.log_fwd;
    if (!std::isfinite(s.log_ratio)) {
      s.failure = FailureReason::NonContraction;
      s.message = "non-finite transition density";
      return;
    }
    s.failure = FailureReason::None;
    s.message.clear();
    if (cfg.record_diagnostics) s.geodesic = std::move(g);
  } catch (const DomainError& e) {
    s.failure = FailureReason::Exit;
    s.message = e.what();
  } catch (const FactorizationError& e) {
    s.failure = stage == Stage::Jacobi ? FailureReason::Singular : FailureReason::Exit;
    s.message = e.what();
  } catch (const NonContractionError& e) {
    s.failure = FailureReason::NonContraction;
    s.message = e.what();
  } catch (const NonFiniteError& e) {
    s.failure = FailureReason::NonContraction;
    s.message = e.what();
  }
}

}  // namespace

WalkStep propose_with_direction(const ManifoldPoint& p, const Vector& w, const WalkConfig& cfg) {
  const Index n = p.n();
  if (w.size() != n) throw InputError("direction has the wrong dimension");
  const double h = cfg.resolved_h(n);
  WalkStep s;
  s.from = p.x();
  s.w = w;
  s.v_fwd = std::sqrt(h) * w + 0.5 * h * p.drift();
  s.to = p.x();
  CollocationConfig coll = cfg.collocation;
  const int base_degree = coll.resolved_degree();
  for (int k = 0; k <= cfg.max_retries; ++k) {
    coll.degree = base_degree + k * cfg.retry_degree_increment;
    attempt(p, cfg, coll, s);
    if (s.failure != FailureReason::NonContraction) break;
  }
  if (s.failure != FailureReason::None) s.to = p.x();
  return s;
}

WalkStep propose(const ManifoldPoint& p, const WalkConfig& cfg, Rng& rng) {
  return propose_with_direction(p, sample_gaussian_direction(p.local(), rng), cfg);
}

std::pair<ManifoldPoint, WalkStep> metropolis_step(const ManifoldPoint& p, const WalkConfig& cfg,
                                                   Rng& rng) {
  WalkStep s = propose(p, cfg, rng);
  const double u = uniform01(rng);
  if (s.failure == FailureReason::None && std::log(u) < std::min(0.0, s.log_ratio)) {
    s.accepted = true;
    return {ManifoldPoint(p.polytope(), s.to, cfg.tol), std::move(s)};
  }
  s.accepted = false;
  return {p, std::move(s)};
}

std::vector<double> quantiles(std::vector<double> xs) {
  std::vector<double> out;
  if (xs.empty()) return out;
  std::sort(xs.begin(), xs.end());
  for (double q : kQuantileLevels) {
    const double pos = q * static_cast<double>(xs.size() - 1);
    const size_t lo = static_cast<size_t>(std::floor(pos));
    const size_t hi = std::min(lo + 1, xs.size() - 1);
    const double f = pos - static_cast<double>(lo);
    out.push_back(xs[lo] + f * (xs[hi] - xs[lo]));
  }
  return out;
}

ChainResult run_chain(const Polytope& P, const Vector& start, long steps, const WalkConfig& cfg) {
  Rng rng(cfg.seed);
  return run_chain(P, start, steps, cfg, rng);
}

ChainResult run_chain(const Polytope& P, const Vector& start, long steps, const WalkConfig& cfg,
                      Rng& rng) {
  cfg.validate();
  if (steps < 0) throw InputError("steps must be non-negative");
  const auto t0 = std::chrono::steady_clock::now();
  const Index n = P.n();
  ChainResult out;
  ChainStats& st = out.stats;
  st.seed = cfg.seed;
  st.h = cfg.resolved_h(n);
  out.samples.resize(steps / cfg.thin, n);
  if (steps == 0) return out;

  ManifoldPoint cur = make_point(P, start, cfg.tol);
  st.burn_in = cfg.resolved_burn_in(n);
  for (long i = 0; i < st.burn_in; ++i) {
    auto [next, s] = metropolis_step(cur, cfg, rng);
    if (s.accepted) ++st.burn_in_accepted;
    cur = std::move(next);
  }
  long row = 0;
  for (long i = 0; i < steps; ++i) {
    auto [next, s] = metropolis_step(cur, cfg, rng);
    ++st.steps;
    if (s.accepted) ++st.accepted;
    switch (s.failure) {
      case FailureReason::Exit:
        ++st.fail_exit;
        break;
      case FailureReason::Singular:
        ++st.fail_singular;
        break;
      case FailureReason::NonContraction:
        ++st.fail_non_contraction;
        break;
      case FailureReason::None:
        st.v_gamma.push_back(s.V_gamma);
        st.log_ratio.push_back(s.log_ratio);
        break;
    }
    cur = std::move(next);
    if ((i + 1) % cfg.thin == 0) out.samples.row(row++) = cur.x().transpose();
  }
  st.accept_rate = static_cast<double>(st.accepted) / static_cast<double>(st.steps);
  st.zero_acceptance = st.accepted == 0;
  st.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

std::vector<ChainResult> run_chains(const Polytope& P, const Vector& start, long steps,
                                    const WalkConfig& cfg, int chains, bool parallel) {
  if (chains < 1) throw InputError("need at least one chain");
  std::vector<ChainResult> out(static_cast<size_t>(chains));
  std::vector<std::exception_ptr> errors(static_cast<size_t>(chains));
#pragma omp parallel for schedule(dynamic) if (parallel)
  for (int k = 0; k < chains; ++k) {
    try {
      WalkConfig c = cfg;
      c.seed = cfg.seed + static_cast<std::uint64_t>(k);
      out[static_cast<size_t>(k)] = run_chain(P, start, steps, c);
    } catch (...) {
      errors[static_cast<size_t>(k)] = std::current_exception();
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

DikinStep dikin_propose(const ManifoldPoint& p, double r, Rng& rng) {
  const Index n = p.n();
  DikinStep s;
  const Vector z = standard_normal(n, rng);
  s.to = p.x() + (r / std::sqrt(static_cast<double>(n))) *
                     Vector(p.local().factor().matrixU().solve(z));
  if (r == 0.0) {
    s.to = p.x();
    return s;
  }
  if (!contains(p.polytope(), s.to)) {
    s.exited = true;
    return s;
  }
  try {
    const LocalMetric ly(p.polytope(), s.to);
    const Vector d = s.to - p.x();
    const double qx = metric_inner(p.local(), d, d);
    const double qy = metric_inner(ly, d, d);
    s.log_ratio = 0.5 * (ly.log_det() - p.local().log_det()) -
                  (static_cast<double>(n) / (2.0 * r * r)) * (qy - qx);
  } catch (const Error&) {
    s.exited = true;
  }
  return s;
}

ManifoldPoint dikin_walk_step(const ManifoldPoint& p, double r, Rng& rng, DikinStep* record) {
  DikinStep s = dikin_propose(p, r, rng);
  const double u = uniform01(rng);
  s.accepted = !s.exited && std::log(u) < std::min(0.0, s.log_ratio);
  if (record) *record = s;
  if (!s.accepted) return p;
  try {
    return ManifoldPoint(p.polytope(), s.to);
  } catch (const Error&) {
    if (record) record->accepted = false;
    return p;
  }
}

ChainResult run_dikin_chain(const Polytope& P, const Vector& start, long steps, double r,
                            std::uint64_t seed, long burn_in, long thin) {
  if (steps < 0 || thin < 1 || burn_in < 0 || !(r >= 0))
    throw InputError("dikin chain: bad arguments");
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(seed);
  ChainResult out;
  out.stats.seed = seed;
  out.samples.resize(steps / thin, P.n());
  if (steps == 0) return out;
  ManifoldPoint cur = make_point(P, start);
  for (long i = 0; i < burn_in; ++i) {
    DikinStep s;
    cur = dikin_walk_step(cur, r, rng, &s);
    if (s.accepted) ++out.stats.burn_in_accepted;
  }
  out.stats.burn_in = burn_in;
  long row = 0;
  for (long i = 0; i < steps; ++i) {
    DikinStep s;
    cur = dikin_walk_step(cur, r, rng, &s);
    ++out.stats.steps;
    if (s.accepted) ++out.stats.accepted;
    if (s.exited) ++out.stats.fail_exit;
    if (!s.exited) out.stats.log_ratio.push_back(s.log_ratio);
    if ((i + 1) % thin == 0) out.samples.row(row++) = cur.x().transpose();
  }
  out.stats.accept_rate =
      static_cast<double>(out.stats.accepted) / static_cast<double>(out.stats.steps);
  out.stats.zero_acceptance = out.stats.accepted == 0;
  out.stats.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

}  // namespace geowalk
