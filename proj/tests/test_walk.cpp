#include <doctest.h>

#include <cmath>
#include <numbers>

#include "geowalk/diagnostics.hpp"
#include "geowalk/walk.hpp"
#include "support/support.hpp"

using namespace geowalk;
using testing::random_interior_point;
using testing::random_polytope;

namespace {

WalkConfig with_h(double h) {
  WalkConfig c;
  c.h = h;
  return c;
}

}  // namespace

TEST_CASE("gaussian directions have covariance g^-1") {
  const Polytope C = make_hypercube(3);
  const LocalMetric p(C, Vector::Zero(3));
  Rng rng(1);
  const int N = 100000;
  Matrix cov = Matrix::Zero(3, 3);
  double norm2 = 0, norm4 = 0;
  for (int k = 0; k < N; ++k) {
    const Vector w = sample_gaussian_direction(p, rng);
    cov += w * w.transpose();
    const double q = metric_inner(p, w, w);
    norm2 += q;
    norm4 += q * q;
  }
  cov /= N;
  for (Index i = 0; i < 3; ++i)
    for (Index j = 0; j < 3; ++j) {
      const double target = i == j ? 0.5 : 0.0;
      const double se = i == j ? std::sqrt(2.0 * 0.25 / N) : std::sqrt(0.25 / N);
      CHECK(std::abs(cov(i, j) - target) <= 3 * se);
    }
  const double mean = norm2 / N, var = norm4 / N - mean * mean;
  CHECK(std::abs(mean - 3.0) <= 3 * std::sqrt(var / N));

  Rng a(42), b(42);
  for (int k = 0; k < 10; ++k)
    CHECK(sample_gaussian_direction(p, a) == sample_gaussian_direction(p, b));
}

TEST_CASE("zero direction at a symmetric point stays put and is accepted") {
  const Polytope C = make_hypercube(2);
  const ManifoldPoint p = make_point(C, Vector::Zero(2));
  const WalkStep s = propose_with_direction(p, Vector::Zero(2), with_h(0.05));
  REQUIRE(s.failure == FailureReason::None);
  CHECK(s.to.norm() == 0.0);
  CHECK(s.log_ratio == 0.0);
  CHECK(std::abs(s.logdet_fwd) < 1e-12);
}

TEST_CASE("box geodesics split into one-dimensional closed forms") {
  Vector lo(3), hi(3);
  lo << -1, -2, 0;
  hi << 1, 1, 3;
  const Polytope B = make_box(lo, hi);
  Rng rng(77);
  WalkConfig cfg = with_h(0.05);
  cfg.record_diagnostics = true;
  for (int k = 0; k < 5; ++k) {
    const ManifoldPoint p = make_point(B, random_interior_point(B, rng, 0.6));
    const WalkStep s = propose(p, cfg, rng);
    REQUIRE(s.failure == FailureReason::None);
    const Geodesic& g = *s.geodesic;
    for (Index i = 0; i < 3; ++i) {
      const OneDimBarrier bar(lo(i), hi(i));
      for (double t : {0.3 * g.ell, g.ell}) {
        const double x1 = oned_geodesic(bar, p.x()(i), s.v_fwd(i) / g.ell, t);
        CHECK(std::abs(g.position.eval(t)(i) - x1) <= 1e-7);
      }
    }
    // flat: both determinants vanish, and the log densities are products of 1-D ones
    CHECK(std::abs(s.logdet_fwd) <= 1e-8);
    CHECK(std::abs(s.logdet_rev) <= 1e-8);
    double log1d = 0;
    for (Index i = 0; i < 3; ++i)
      log1d += oned_log_transition_density(OneDimBarrier(lo(i), hi(i)), p.x()(i), s.to(i), cfg.h);
    CHECK(std::abs(s.log_fwd - log1d) <= 1e-6);
  }
}

TEST_CASE("transition density at the center of an interval") {
  const Polytope C = make_hypercube(1);
  const ManifoldPoint p = make_point(C, Vector::Zero(1));
  const double h = 0.01;
  const double lp = transition_log_density(p, Vector::Zero(1), p.local(), 0.0, h);
  CHECK(lp == doctest::Approx(0.5 * std::log(2.0) - 0.5 * std::log(2 * std::numbers::pi * h)));
  const OneDimBarrier bar(-1, 1);
  CHECK(oned_transition_density(bar, 0, 0, h) ==
        doctest::Approx(std::sqrt(1.0 / (std::numbers::pi * h))));
}

TEST_CASE("one-dimensional walk density matches the closed form") {
  const Polytope I = make_interval(-1, 1);
  const OneDimBarrier bar(-1, 1);
  Rng rng(5);
  const WalkConfig cfg = with_h(0.02);
  for (double x : {-0.6, 0.0, 0.3, 0.8}) {
    const ManifoldPoint p = make_point(I, Vector::Constant(1, x));
    for (int k = 0; k < 3; ++k) {
      const WalkStep s = propose(p, cfg, rng);
      if (s.failure != FailureReason::None) continue;
      CHECK(std::abs(s.log_fwd - oned_log_transition_density(bar, x, s.to(0), cfg.h)) <= 1e-6);
      CHECK(std::abs(s.log_rev - oned_log_transition_density(bar, s.to(0), x, cfg.h)) <= 1e-6);
      CHECK(std::abs(s.logdet_fwd) <= 1e-8);
    }
  }
}

TEST_CASE("proposal invariants on random polytopes") {
  Rng rng(123);
  for (int trial = 0; trial < 6; ++trial) {
    const Polytope P = trial % 2 ? make_simplex(3) : random_polytope(3, 9, rng);
    const ManifoldPoint p = make_point(P, random_interior_point(P, rng, 0.5));
    WalkConfig cfg = with_h(0.02);
    cfg.record_diagnostics = true;
    const WalkStep s = propose(p, cfg, rng);
    if (s.failure != FailureReason::None) continue;
    const Geodesic& g = *s.geodesic;
    const ManifoldPoint q = make_point(P, s.to);
    const double h = cfg.h;

    // constant speed and ||v_x||_x = ||v_y||_y
    CHECK(s.speed_deviation <= 1e-6);
    const double nx = std::sqrt(metric_inner(p, s.v_fwd, s.v_fwd));
    const double ny = std::sqrt(metric_inner(q, s.v_rev, s.v_rev));
    CHECK(std::abs(nx - ny) <= 1e-6 * nx);

    // expanded filter ratio
    const Vector& mx = p.drift();
    const Vector& my = q.drift();
    const double expanded = s.logdet_fwd - s.logdet_rev + 0.5 * log_det_metric(p) -
                            0.5 * log_det_metric(q) +
                            (nx * nx - ny * ny) / (2 * h) - 0.5 * metric_inner(p, s.v_fwd, mx) +
                            h / 8 * metric_inner(p, mx, mx) + 0.5 * metric_inner(q, s.v_rev, my) -
                            h / 8 * metric_inner(q, my, my);
    CHECK(std::abs(s.log_ratio - expanded) <= 1e-8 * std::max(1.0, std::abs(expanded)));

    // reverse geodesic returns to x
    const Geodesic back = solve_geodesic(P, s.to, s.v_rev / g.ell, g.ell, cfg.collocation);
    CHECK((back.position.end() - p.x()).norm() <= 1e-7 * (1 + p.x().norm()));
    CHECK((g.ell * back.velocity.end() + s.v_fwd).norm() <= 1e-6);

    // transported frame stays orthonormal
    const JacobiResult jr = solve_jacobi(P, g, Direction::Forward, cfg.collocation);
    CHECK(jr.frame_defect <= 1e-6);
    CHECK(jr.logdet == doctest::Approx(s.logdet_fwd));
  }
}

TEST_CASE("flat Jacobi fields") {
  const Polytope C = make_hypercube(3);
  const ManifoldPoint p = make_point(C, Vector(Vector::Constant(3, 0.2)));
  Vector v(3);
  v << 0.1, -0.2, 0.05;
  const double ell = 0.5;
  const Geodesic g = solve_geodesic(C, p.x(), v, ell, CollocationConfig{});
  const JacobiResult j = solve_jacobi(C, g, Direction::Forward, CollocationConfig{});
  CHECK((j.psi - Matrix::Identity(3, 3)).norm() <= 1e-8);
  CHECK(std::abs(j.logdet) <= 1e-8);
  CHECK(std::abs(logdet_dexp(C, g, Direction::Backward, CollocationConfig{})) <= 1e-8);

  const Polytope I = make_interval(-1, 1);
  const Geodesic gi = solve_geodesic(I, Vector::Constant(1, 0.4), Vector::Constant(1, 0.3), 1.0,
                                     CollocationConfig{});
  CHECK(std::abs(logdet_dexp(I, gi, Direction::Forward, CollocationConfig{})) <= 1e-8);
}

TEST_CASE("metropolis acceptance on a flat square") {
  const Polytope C = make_hypercube(2);
  const ManifoldPoint p = make_point(C, Vector::Zero(2));
  const WalkConfig cfg = with_h(1e-3);
  Rng rng(2024);
  int accepted = 0;
  const int N = 2000;
  for (int k = 0; k < N; ++k) accepted += metropolis_step(p, cfg, rng).second.accepted;
  CHECK(accepted >= 0.9 * N);
}

TEST_CASE("V stays small on a box for small h") {
  const Polytope C = make_hypercube(4);
  const ManifoldPoint p = make_point(C, Vector::Zero(4));
  const WalkConfig cfg = with_h(1e-3);
  int good = 0, total = 0;
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    Rng rng(seed);
    const WalkStep s = propose(p, cfg, rng);
    if (s.failure != FailureReason::None) continue;
    ++total;
    good += s.V_gamma <= 24.0;
  }
  const double frac = static_cast<double>(good) / total;
  const double se = std::sqrt(0.25 / total);
  CHECK(frac + 3 * se >= 1.0 - 3.0 / 4.0);
}

TEST_CASE("chains") {
  const Polytope C = make_hypercube(2);
  WalkConfig cfg;
  cfg.seed = 9;
  const ChainResult empty = run_chain(C, Vector::Zero(2), 0, cfg);
  CHECK(empty.samples.rows() == 0);
  CHECK(empty.stats.steps == 0);
  CHECK(empty.stats.accepted == 0);

  const ChainResult a = run_chain(C, Vector::Zero(2), 200, cfg);
  const ChainResult b = run_chain(C, Vector::Zero(2), 200, cfg);
  CHECK(a.samples == b.samples);
  CHECK(a.samples.rows() == 200);
  CHECK(a.stats.accept_rate > 0.5);

  cfg.thin = 3;
  CHECK(run_chain(C, Vector::Zero(2), 200, cfg).samples.rows() == 66);
  cfg.thin = 1;
  const auto many = run_chains(C, Vector::Zero(2), 50, cfg, 3);
  REQUIRE(many.size() == 3);
  WalkConfig c1 = cfg;
  c1.seed = cfg.seed + 1;
  CHECK(many[1].samples == run_chain(C, Vector::Zero(2), 50, c1).samples);

  cfg.h = 10.0;
  cfg.burn_in = 0;
  const ChainResult wild = run_chain(C, Vector::Zero(2), 30, cfg);
  CHECK(wild.stats.fail_exit + wild.stats.fail_singular + wild.stats.fail_non_contraction +
            wild.stats.accepted <=
        30);
  CHECK(wild.stats.accept_rate < 0.5);
}

TEST_CASE("Dikin walk") {
  const Polytope C = make_hypercube(3);
  const ManifoldPoint p = make_point(C, Vector(Vector::Constant(3, 0.3)));
  Rng rng(4);
  for (int k = 0; k < 10; ++k) CHECK(dikin_walk_step(p, 0.0, rng).x() == p.x());

  const ChainResult r = run_dikin_chain(C, Vector::Zero(3), 10000, 0.3, 8);
  CHECK(r.stats.accept_rate > 0.5);

  const ChainResult big = run_dikin_chain(C, Vector::Zero(3), 100000, 0.5, 3, 1000);
  for (Index j = 0; j < 3; ++j) {
    std::vector<double> col(static_cast<size_t>(big.samples.rows())), sq(col.size());
    for (Index i = 0; i < big.samples.rows(); ++i) {
      col[static_cast<size_t>(i)] = big.samples(i, j);
      sq[static_cast<size_t>(i)] = big.samples(i, j) * big.samples(i, j);
    }
    const double N = static_cast<double>(col.size());
    double m = 0, m2 = 0;
    for (size_t i = 0; i < col.size(); ++i) {
      m += col[i];
      m2 += sq[i];
    }
    m /= N;
    m2 /= N;
    const double se = std::sqrt((1.0 / 3) * integrated_autocorrelation_time(col) / N);
    const double se2 = std::sqrt((1.0 / 5 - 1.0 / 9) * integrated_autocorrelation_time(sq) / N);
    CHECK(std::abs(m) <= 3 * se);
    CHECK(std::abs(m2 - 1.0 / 3) <= 3 * se2);
  }
}

TEST_CASE("configuration") {
  CHECK(WalkConfig::default_step(16) == doctest::Approx(0.1 / 8));
  WalkConfig c;
  CHECK(c.resolved_burn_in(16) == 10 * 80);
  c.thin = 0;
  CHECK_THROWS_AS(c.validate(), InputError);
  c = {};
  c.h = -1;
  CHECK_THROWS_AS(c.validate(), InputError);
  const Rescaled r = to_rescaled(Vector::Ones(4), 0.25, 4);
  CHECK(r.ell == doctest::Approx(1.0));
  CHECK((to_unscaled(r.velocity, r.ell) - Vector::Ones(4)).norm() < 1e-15);
  CHECK(std::string(to_string(FailureReason::NonContraction)) == "non_contraction");
}
