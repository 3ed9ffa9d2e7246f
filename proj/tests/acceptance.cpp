// Acceptance run: one PASS/FAIL line per criterion. With no arguments every
// criterion runs; otherwise only the listed numbers.

#include <algorithm>
#include <boost/math/quadrature/gauss.hpp>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "geowalk/collocation.hpp"
#include "geowalk/diagnostics.hpp"
#include "geowalk/geometry.hpp"
#include "geowalk/io.hpp"
#include "geowalk/physarum.hpp"
#include "geowalk/walk.hpp"
#include "support/support.hpp"

using namespace geowalk;
using testing::random_interior_point;
using testing::random_polytope;
using testing::random_unit;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

double rel(const Vector& a, const Vector& b) {
  return (a - b).norm() / std::max(b.norm(), 1e-300);
}

double rel(const Matrix& a, const Matrix& b) {
  return (a - b).norm() / std::max(b.norm(), 1e-300);
}

double mean(const std::vector<double>& x) {
  double s = 0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

double median(std::vector<double> x) {
  std::sort(x.begin(), x.end());
  const size_t k = x.size() / 2;
  return x.size() % 2 ? x[k] : 0.5 * (x[k - 1] + x[k]);
}

std::vector<double> column(const Matrix& S, Index j, int power = 1) {
  std::vector<double> out(static_cast<size_t>(S.rows()));
  for (Index i = 0; i < S.rows(); ++i) out[static_cast<size_t>(i)] = std::pow(S(i, j), power);
  return out;
}

// |sample mean - target| in units of the autocorrelation-corrected standard error.
double z_score(const std::vector<double>& x, double target) {
  const double m = mean(x);
  double var = 0;
  for (double v : x) var += (v - m) * (v - m);
  var /= static_cast<double>(x.size() - 1);
  const double tau = integrated_autocorrelation_time(x);
  return std::abs(m - target) / std::sqrt(var * tau / static_cast<double>(x.size()));
}

// Box with one nonzero per row and its bounds.
Polytope random_box(Index n, Rng& rng, Vector& lo, Vector& hi) {
  std::uniform_real_distribution<double> u(0.2, 3.0), c(-2.0, 2.0);
  lo.resize(n);
  hi.resize(n);
  for (Index i = 0; i < n; ++i) {
    const double mid = c(rng), half = u(rng);
    lo(i) = mid - half;
    hi(i) = mid + half;
  }
  return make_box(lo, hi);
}

Outcome criterion_1() {
  Rng rng(101);
  double worst = 0;
  std::string worst_what;
  auto track = [&](double e, const char* what) {
    if (e > worst) {
      worst = e;
      worst_what = what;
    }
  };
  for (int trial = 0; trial < 50; ++trial) {
    const Index n = 2 + trial % 5;
    const Index m = std::min<Index>(20, n + 1 + static_cast<Index>(rng() % 14));
    const Polytope P = random_polytope(n, m, rng);
    const Vector x = random_interior_point(P, rng, 0.7);
    const ManifoldPoint p(P, x);
    track(rel(p.local().metric(), oracle::dense_metric(P, x)), "metric");
    track(rel(p.leverage(), oracle::dense_leverage(P, x)), "leverage");
    track(rel(p.drift(), oracle::dense_drift(P, x)), "drift");
    for (int k = 0; k < 3; ++k) {
      const Vector a = random_unit(n, rng), b = random_unit(n, rng), c = random_unit(n, rng),
                   d = random_unit(n, rng);
      const double fast = riemann_inner(p.local(), a, b, c, d);
      const double slow = oracle::index_riemann(P, x, a, b, c, d);
      // scale by |R(a,b,b,a)|-sized terms so near-zero components are not over-weighted
      const double scale = std::max({std::abs(slow),
                                     std::abs(oracle::index_riemann(P, x, a, b, b, a)),
                                     std::abs(oracle::index_ricci(P, x, a))});
      track(std::abs(fast - slow) / scale, "riemann");
      track(rel(ricci(p.local(), a), oracle::index_ricci(P, x, a)), "ricci");
    }
  }
  return {worst <= 1e-8, "50 polytopes, worst relative error " + fmt("%.2e", worst) + " (" +
                             worst_what + ")"};
}

Outcome criterion_2() {
  Rng rng(202);
  double curv = 0, logdet = 0, geo = 0;
  WalkConfig cfg;
  cfg.record_diagnostics = true;
  for (Index n = 1; n <= 8; ++n) {
    Vector lo, hi;
    const Polytope B = random_box(n, rng, lo, hi);
    cfg.h = WalkConfig::default_step(n);
    for (int k = 0; k < 4; ++k) {
      const Vector x = random_interior_point(B, rng, 0.7);
      const ManifoldPoint p(B, x);
      const Matrix X = orthonormal_frame(p.local());
      for (int j = 0; j < 3; ++j) {
        const Vector u = random_unit(n, rng);
        curv = std::max(curv, frame_curvature_matrix(p.local(), u, X).Rt.cwiseAbs().maxCoeff());
        curv = std::max(curv, std::abs(ricci(p.local(), u)));
      }
      const WalkStep s = propose(p, cfg, rng);
      if (s.failure != FailureReason::None) continue;
      logdet = std::max({logdet, std::abs(s.logdet_fwd), std::abs(s.logdet_rev)});
      const Geodesic& g = *s.geodesic;
      for (double t : {0.25 * g.ell, 0.5 * g.ell, g.ell})
        for (Index i = 0; i < n; ++i) {
          const OneDimBarrier bar(lo(i), hi(i));
          geo = std::max(geo, std::abs(g.position.eval(t)(i) -
                                       oned_geodesic(bar, x(i), s.v_fwd(i) / g.ell, t)));
        }
    }
  }
  return {curv <= 1e-10 && logdet <= 1e-8 && geo <= 1e-7,
          "boxes n=1..8: max |R| " + fmt("%.1e", curv) + ", max |logdet| " + fmt("%.1e", logdet) +
              ", max 1-D geodesic error " + fmt("%.1e", geo)};
}

Outcome criterion_3() {
  Rng rng(303);
  double worst = 0;
  for (int k = 0; k < 20; ++k) {
    const Index n = 2 + k % 4;
    const Polytope P = random_polytope(n, 2 * n + 3, rng);
    const Vector x = random_interior_point(P, rng, 0.6);
    const ManifoldPoint p(P, x);
    // Newton step of (1/2) log det g for the Hessian metric g
    const Vector newton = -p.local().solve(oracle::fd_grad_half_logdet(P, x));
    worst = std::max(worst, rel(p.drift(), newton));
  }
  return {worst <= 1e-4, "20 points, worst relative error " + fmt("%.2e", worst)};
}

struct JacobiCheck {
  double residual = 0, literal = 0, bound = 0, nhR = 0;
};

// Curvature integral of a solved geodesic and the operator-norm curvature bound.
JacobiCheck jacobi_check(const Polytope& P, const Geodesic& g, double logdet, double h) {
  const Index n = P.n();
  const double ell = g.ell;
  auto ric = [&](double s) {
    const LocalMetric p(P, g.position.eval(s));
    return s * (ell - s) / ell * ricci(p, g.velocity.eval(s));
  };
  double integral = 0;
  constexpr int kPanels = 4;
  for (int k = 0; k < kPanels; ++k)
    integral += boost::math::quadrature::gauss<double, 20>::integrate(ric, k * ell / kPanels,
                                                                      (k + 1) * ell / kPanels);
  double R = 0;
  for (int k = 0; k <= 32; ++k) {
    const double t = ell * k / 32;
    const LocalMetric p(P, g.position.eval(t));
    const Matrix Rt = frame_curvature_matrix(p, g.velocity.eval(t), orthonormal_frame(p)).Rt;
    const Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (Rt + Rt.transpose()));
    R = std::max(R, es.eigenvalues().cwiseAbs().maxCoeff());
  }
  JacobiCheck c;
  c.nhR = static_cast<double>(n) * h * R;
  c.bound = c.nhR * c.nhR / 6 + 1e-6;
  c.residual = std::abs(logdet + integral);
  c.literal = std::abs(logdet - integral);
  return c;
}

Outcome criterion_4() {
  Rng rng(404);
  int checked = 0, failed = 0;
  double worst_ratio = 0, worst_literal = 0;
  for (int trial = 0; checked < 20 && trial < 200; ++trial) {
    const Index n = 2 + trial % 3;
    const Polytope P = trial % 2 ? make_simplex(n) : random_polytope(n, 3 * n, rng);
    const Vector x = random_interior_point(P, rng, 0.5);
    const ManifoldPoint p(P, x);
    const Vector w = sample_gaussian_direction(p.local(), rng);
    WalkConfig cfg;
    cfg.record_diagnostics = true;
    for (double h = 0.05; h > 1e-5; h /= 2) {
      cfg.h = h;
      const WalkStep s = propose_with_direction(p, w, cfg);
      if (s.failure != FailureReason::None) continue;
      const JacobiCheck c = jacobi_check(P, *s.geodesic, s.logdet_fwd, h);
      if (c.nhR > 0.5) continue;
      ++checked;
      failed += c.residual > c.bound;
      worst_ratio = std::max(worst_ratio, c.residual / c.bound);
      worst_literal = std::max(worst_literal, c.literal / c.bound);
      break;
    }
  }
  return {checked == 20 && failed == 0,
          std::to_string(checked) + " geodesics, worst residual/bound " + fmt("%.3f", worst_ratio) +
              " with log det Psi ~ -int s(l-s)/l Ric; literal + sign gives " +
              fmt("%.3f", worst_literal)};
}

Outcome criterion_5() {
  const std::vector<double> hs{1e-2, 2.5e-3, 6.25e-4};
  std::vector<Polytope> suite{make_interval(-1, 1)};
  for (Index n = 2; n <= 4; ++n) suite.push_back(make_hypercube(n));
  bool pass = true;
  std::string detail;
  for (const Polytope& P : suite) {
    const Index n = P.n();
    Rng starts(500 + static_cast<std::uint64_t>(n));
    std::uniform_real_distribution<double> u(-0.6, 0.6);
    std::vector<Vector> xs;
    for (int k = 0; k < 400; ++k) {
      Vector x(n);
      for (Index i = 0; i < n; ++i) x(i) = u(starts);
      xs.push_back(x);
    }
    std::vector<double> lx, ly;
    for (double h : hs) {
      WalkConfig cfg;
      cfg.h = h;
      std::vector<double> r;
      for (size_t k = 0; k < xs.size(); ++k) {
        Rng rng(7000 + k);
        const WalkStep s = propose(make_point(P, xs[k]), cfg, rng);
        if (s.failure == FailureReason::None) r.push_back(std::abs(s.log_ratio));
      }
      lx.push_back(std::log(h));
      ly.push_back(std::log(median(r)));
    }
    const double mx = mean(lx), my = mean(ly);
    double sxy = 0, sxx = 0;
    for (size_t k = 0; k < lx.size(); ++k) {
      sxy += (lx[k] - mx) * (ly[k] - my);
      sxx += (lx[k] - mx) * (lx[k] - mx);
    }
    const double slope = sxy / sxx;
    pass = pass && slope >= 1.35 && slope <= 1.65;
    detail += (detail.empty() ? "" : ", ") + std::string("n=") + std::to_string(n) + " slope " +
              fmt("%.3f", slope);
  }
  return {pass, detail};
}

Outcome criterion_6() {
  const Polytope C = make_hypercube(3);
  WalkConfig cfg;
  cfg.seed = 606;
  const ChainResult box = run_chain(C, Vector::Zero(3), 100000, cfg);
  double worst = 0;
  for (Index j = 0; j < 3; ++j) {
    worst = std::max(worst, z_score(column(box.samples, j), 0.0));
    worst = std::max(worst, z_score(column(box.samples, j, 2), 1.0 / 3));
  }

  const Polytope S = make_simplex(2);
  const auto exact = exact_moments(S);  // Dirichlet(1,1,1) marginals
  WalkConfig scfg;
  scfg.seed = 607;
  const ChainResult simplex = run_chain(S, Vector::Constant(2, 1.0 / 3), 100000, scfg);
  double worst_s = 0;
  for (Index j = 0; j < 2; ++j)
    worst_s = std::max(worst_s, z_score(column(simplex.samples, j), exact->mean(j)));

  return {worst <= 3 && worst_s <= 3,
          "box [-1,1]^3 max |z| " + fmt("%.2f", worst) + " (accept " +
              fmt("%.3f", box.stats.accept_rate) + "), simplex mean vs 1/3 max |z| " +
              fmt("%.2f", worst_s) + " (accept " + fmt("%.3f", simplex.stats.accept_rate) + ")"};
}

Outcome criterion_7() {
  auto cfg = [](int d, double ell) {
    CollocationConfig c;
    c.degree = d;
    c.interval = ell;
    return c;
  };
  std::vector<std::string> failures;
  auto need = [&](bool ok, const char* what) {
    if (!ok) failures.emplace_back(what);
  };

  const PolyCurve ex = collocation_first_order([](const Vector& u, double) { return u; },
                                               Vector::Ones(1), cfg(10, 0.25));
  need(std::abs(ex.eval(0.25)(0) - std::exp(0.25)) <= 1e-10, "exponential");

  CollocationConfig ms = cfg(0, 0.25);
  const auto decay = collocation_multistep([](const Vector& u, double) { return Vector(-u); },
                                           Vector::Ones(1), 1.0, ms);
  need(std::abs(decay.endpoint(0) - std::exp(-1.0)) <= 1e-8, "multistep decay");

  Vector e1(2);
  e1 << 1, 0;
  const auto rot = collocation_multistep([](const Vector& u, double) {
    Vector f(2);
    f << -u(1), u(0);
    return f;
  }, e1, std::numbers::pi / 2, ms);
  bool conserved = true;
  for (double t = 0; t <= std::numbers::pi / 2; t += 0.01)
    conserved = conserved && std::abs(rot.curve.eval(t).norm() - 1.0) <= 1e-9;
  need(std::abs(rot.endpoint(0)) <= 1e-8 && std::abs(rot.endpoint(1) - 1) <= 1e-8 && conserved,
       "rotation");

  const auto osc = collocation_second_order([](const Vector&, const Vector& u, double) {
    return Vector(-u);
  }, Vector::Ones(1), Vector::Zero(1), cfg(12, 0.3));
  need(std::abs(osc.position.end()(0) - std::cos(0.3)) <= 1e-9, "oscillator");

  CollocationConfig cc = cfg(12, 5e-4);
  cc.tolerance = 1e-14;
  SolveReport rep;
  collocation_first_order([](const Vector& u, double t) {
    return Vector((-u.array() + std::sin(t)).matrix());
  }, Vector::Ones(2), cc, &rep);
  double ratio = 0;
  for (size_t k = 2; k < rep.changes.size() && rep.changes[k - 1] > 1e-15; ++k)
    ratio = std::max(ratio, rep.changes[k] / rep.changes[k - 1]);
  need(rep.changes.size() >= 3 && ratio <= 0.6, "contraction ratio");

  double exact_err = 0;
  for (int d : {3, 6, 12, 20}) {
    const double ell = 0.8;
    const PolyCurve p = collocation_first_order([d](const Vector&, double t) {
      double s = 0;
      for (int k = 1; k <= d; ++k) s += k * std::pow(t, k - 1);
      return Vector(Vector::Constant(1, s));
    }, Vector::Zero(1), cfg(d, ell));
    for (double t : {0.1, 0.5, ell}) {
      double u = 0;
      for (int k = 1; k <= d; ++k) u += std::pow(t, k);
      exact_err = std::max(exact_err, std::abs(p.eval(t)(0) - u));
    }
  }
  need(exact_err <= 1e-11, "degree exactness");

  std::string detail = "contraction ratio " + fmt("%.1e", ratio) + ", degree-exactness error " +
                       fmt("%.1e", exact_err);
  for (const auto& f : failures) detail += "; failed: " + f;
  return {failures.empty(), detail};
}

// Minimum over nonbasic j of reduced cost / cost at the optimal vertex, or -1
// when the optimum is degenerate.
double reduced_cost_ratio(const PhysarumProblem& p, const Vector& xopt) {
  std::vector<Index> basis;
  for (Index j = 0; j < p.n(); ++j)
    if (xopt(j) > 1e-9) basis.push_back(j);
  if (static_cast<Index>(basis.size()) != p.m()) return -1;
  Matrix B(p.m(), p.m());
  Vector cB(p.m());
  for (Index k = 0; k < p.m(); ++k) {
    B.col(k) = p.A.col(basis[static_cast<size_t>(k)]);
    cB(k) = p.c(basis[static_cast<size_t>(k)]);
  }
  const Vector y = B.transpose().fullPivLu().solve(cB);
  double ratio = INFINITY;
  for (Index j = 0; j < p.n(); ++j) {
    if (std::find(basis.begin(), basis.end(), j) != basis.end()) continue;
    ratio = std::min(ratio, (p.c(j) - p.A.col(j).dot(y)) / p.c(j));
  }
  return ratio;
}

Outcome criterion_8() {
  std::vector<PhysarumProblem> suite;
  {
    PhysarumProblem p;
    p.A = Matrix::Ones(1, 2);
    p.b = Vector::Ones(1);
    p.c = Vector(2);
    p.c << 2, 1;
    p.x0 = Vector::Constant(2, 0.5);
    suite.push_back(p);
  }
  Rng rng(808);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int tries = 0; suite.size() < 6 && tries < 1000; ++tries) {
    const Index n = 3 + tries % 4, m = 1 + tries % 2;
    PhysarumProblem p;
    p.A = Matrix(m, n);
    for (Index i = 0; i < m; ++i)
      for (Index j = 0; j < n; ++j) p.A(i, j) = u(rng) + (i == j ? 1.0 : 0.0);
    p.c = Vector(n);
    for (Index j = 0; j < n; ++j) p.c(j) = 0.5 + 2 * u(rng);
    p.x0 = Vector::Ones(n);
    p.b = p.A * p.x0;
    const auto opt = testing::lp_vertex_enumeration(p.A, p.b, p.c);
    if (reduced_cost_ratio(p, opt.x) >= 0.5) suite.push_back(p);
  }

  double worst_gap = 0, worst_infeas = 0, worst_decay = 0;
  bool below_opt = false;
  for (const auto& p : suite) {
    const double opt = testing::lp_vertex_enumeration(p.A, p.b, p.c).value;
    std::vector<double> gaps;
    for (double T : {5.0, 10.0, 20.0}) {
      const PhysarumResult r = physarum_solve(p, T, 1e-10, 41);
      worst_infeas = std::max(worst_infeas, r.max_infeasibility);
      for (const auto& cp : r.trajectory) below_opt = below_opt || cp.objective < opt - 1e-9;
      gaps.push_back(p.c.dot(r.x) - opt);
    }
    worst_gap = std::max(worst_gap, gaps.back());
    worst_decay = std::max({worst_decay, gaps[1] / gaps[0], gaps[2] / gaps[1]});
  }
  return {suite.size() == 6 && worst_gap <= 1e-3 && worst_infeas <= 1e-8 && worst_decay <= 0.1 &&
              !below_opt,
          std::to_string(suite.size()) + " LPs, gap at T=20 " + fmt("%.1e", worst_gap) +
              ", max |Ax-b| " + fmt("%.1e", worst_infeas) + ", worst gap ratio per doubling " +
              fmt("%.3f", worst_decay) + (below_opt ? ", objective fell below OPT" : "")};
}

Outcome criterion_9() {
  auto chain_bytes = [](const Polytope& P, const Vector& x0, std::uint64_t seed) {
    WalkConfig cfg;
    cfg.seed = seed;
    const ChainResult r = run_chain(P, x0, 1000, cfg);
    std::ostringstream csv;
    io::write_samples_csv(csv, r.samples, P.n());
    return csv.str() + io::dump_json(io::stats_to_json(r.stats, false));
  };
  auto multi_bytes = [](const Polytope& P) {
    WalkConfig cfg;
    cfg.seed = 3;
    std::string out;
    for (const auto& r : run_chains(P, Vector::Zero(P.n()), 200, cfg, 4)) {
      std::ostringstream csv;
      io::write_samples_csv(csv, r.samples, P.n());
      out += csv.str();
    }
    return out;
  };
  const Polytope box = make_hypercube(3), simplex = make_simplex(2);
  const Vector c = Vector::Constant(2, 0.25);
  bool same = chain_bytes(box, Vector::Zero(3), 7) == chain_bytes(box, Vector::Zero(3), 7) &&
              chain_bytes(simplex, c, 11) == chain_bytes(simplex, c, 11) &&
              multi_bytes(box) == multi_bytes(box);
  const bool differs = chain_bytes(box, Vector::Zero(3), 7) != chain_bytes(box, Vector::Zero(3), 8);
  same = same && comparison_csv(compare_walks(box, {0.01}, 200, 5)) ==
                     comparison_csv(compare_walks(box, {0.01}, 200, 5));
  return {same && differs, same ? "identical bytes across reruns" : "outputs differ across reruns"};
}

Outcome criterion_10() {
  const Index n = 8;
  Vector lo = -Vector::Ones(n), hi = Vector::Ones(n);
  lo(0) = -10;
  hi(0) = 10;
  const Polytope B = make_box(lo, hi, "elongated");
  std::vector<double> grid;
  for (double h = 1e-3; h <= 2.1; h *= 2) grid.push_back(h);
  const auto rows = compare_walks(B, grid, 4000, 1010);

  std::printf("    %-9s %-9s %-8s %-8s %-8s\n", "walk", "h", "radius", "accept", "iat");
  for (const auto& r : rows)
    std::printf("    %-9s %-9.4g %-8.4f %-8.3f %-8.2f\n", r.walk.c_str(), r.h, r.radius,
                r.accept_rate, r.iat);

  const ComparisonRow* geo = nullptr;
  const ComparisonRow* dikin = nullptr;
  for (const auto& r : rows) {
    if (r.accept_rate < 0.5) continue;
    const ComparisonRow*& best = r.walk == "geodesic" ? geo : dikin;
    if (!best || r.h > best->h) best = &r;
  }
  if (!geo || !dikin) return {false, "no h reached 0.5 acceptance for one of the walks"};
  const double factor = geo->h / dikin->h;
  const bool iat_ok = geo->iat < dikin->iat;
  return {factor >= 4 && iat_ok,
          "largest h with accept >= 0.5: geodesic " + fmt("%.4g", geo->h) + ", Dikin " +
              fmt("%.4g", dikin->h) + " (factor " + fmt("%.1f", factor) + "); IAT " +
              fmt("%.2f", geo->iat) + " vs " + fmt("%.2f", dikin->iat)};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::function<Outcome()>> criteria{
      criterion_1, criterion_2, criterion_3, criterion_4, criterion_5,
      criterion_6, criterion_7, criterion_8, criterion_9, criterion_10};
  std::vector<int> which;
  for (int i = 1; i < argc; ++i) which.push_back(std::atoi(argv[i]));
  if (which.empty())
    for (int k = 1; k <= 10; ++k) which.push_back(k);

  int failures = 0;
  for (int k : which) {
    if (k < 1 || k > 10) {
      std::fprintf(stderr, "unknown criterion %d\n", k);
      return 2;
    }
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[static_cast<size_t>(k - 1)]();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("criterion %2d: %s  %s [%.1f s]\n", k, o.pass ? "PASS" : "FAIL", o.detail.c_str(),
                secs);
    std::fflush(stdout);
    failures += !o.pass;
  }
  return failures ? 1 : 0;
}
