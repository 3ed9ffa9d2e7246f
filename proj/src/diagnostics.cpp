#include "geowalk/diagnostics.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss.hpp>
#include <cmath>
#include <numbers>
#include <sstream>

#include "geowalk/io.hpp"

namespace geowalk {

OneDimBarrier::OneDimBarrier(double alpha, double beta)
    : alpha_(alpha), beta_(beta), mid_(0.5 * (alpha + beta)) {
  if (!(std::isfinite(alpha) && std::isfinite(beta) && alpha < beta))
    throw InputError("OneDimBarrier needs finite alpha < beta");
}

double OneDimBarrier::p(double x) const {
  const double a = x - alpha_, b = beta_ - x;
  return 1.0 / (a * a) + 1.0 / (b * b);
}

double OneDimBarrier::dp(double x) const {
  const double a = x - alpha_, b = beta_ - x;
  return -2.0 / (a * a * a) + 2.0 / (b * b * b);
}

// sqrt(p) = 1/a + 1/b - 2/(sqrt(a^2 + b^2) + a + b) with a = x - alpha,
// b = beta - x. The first two terms integrate to log(a/b); only the bounded
// remainder goes to quadrature.
double OneDimBarrier::f(double x) const {
  if (!(x > alpha_ && x < beta_)) throw DomainError("OneDimBarrier::f outside (alpha, beta)");
  if (x == mid_) return 0.0;
  auto remainder = [this](double t) {
    const double a = t - alpha_, b = beta_ - t;
    return -2.0 / (std::hypot(a, b) + a + b);
  };
  // The remainder is analytic within (beta - alpha)/2 of the real axis, so
  // eight Gauss panels are exact to round-off.
  constexpr int kPanels = 8;
  const double step = (x - mid_) / kPanels;
  double q = 0.0;
  for (int k = 0; k < kPanels; ++k)
    q += boost::math::quadrature::gauss<double, 30>::integrate(remainder, mid_ + k * step,
                                                               mid_ + (k + 1) * step);
  return std::log((x - alpha_) / (beta_ - x)) + q;
}

double OneDimBarrier::f_inverse(double u) const {
  if (!std::isfinite(u)) throw DomainError("OneDimBarrier::f_inverse of a non-finite value");
  double lo = alpha_, hi = beta_;
  for (int it = 0; it < 200 && hi - lo > 4e-16 * (beta_ - alpha_); ++it) {
    const double c = 0.5 * (lo + hi);
    if (c <= alpha_ || c >= beta_) break;
    if (f(c) < u)
      lo = c;
    else
      hi = c;
  }
  const double x = 0.5 * (lo + hi);
  if (!(x > alpha_ && x < beta_)) throw DomainError("OneDimBarrier: geodesic leaves the interval");
  return x;
}

double oned_geodesic(const OneDimBarrier& bar, double x, double v, double t) {
  return bar.f_inverse(bar.f(x) + std::sqrt(bar.p(x)) * t * v);
}

double oned_log_transition_density(const OneDimBarrier& bar, double x, double y, double h) {
  const double px = bar.p(x);
  const double r = bar.f(x) - h * bar.dp(x) / (4.0 * std::pow(px, 1.5)) - bar.f(y);
  return 0.5 * std::log(bar.p(y) / (2.0 * std::numbers::pi * h)) - r * r / (2.0 * h);
}

double oned_transition_density(const OneDimBarrier& bar, double x, double y, double h) {
  return std::exp(oned_log_transition_density(bar, x, y, h));
}

namespace oracle {

namespace {

Matrix scaled_rows(const Polytope& P, const Vector& x) {
  Matrix Ax(P.m(), P.n());
  for (Index l = 0; l < P.m(); ++l) {
    double s = -P.b()(l);
    for (Index j = 0; j < P.n(); ++j) s += P.A()(l, j) * x(j);
    if (!(s > 0)) throw DomainError("oracle: point not interior");
    for (Index j = 0; j < P.n(); ++j) Ax(l, j) = P.A()(l, j) / s;
  }
  return Ax;
}

}  // namespace

Matrix dense_metric(const Polytope& P, const Vector& x) {
  const Matrix Ax = scaled_rows(P, x);
  const Index n = P.n();
  Matrix g = Matrix::Zero(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j)
      for (Index l = 0; l < P.m(); ++l) g(i, j) += Ax(l, i) * Ax(l, j);
  return g;
}

Matrix dense_projection(const Polytope& P, const Vector& x) {
  const Matrix Ax = scaled_rows(P, x);
  const Matrix ginv = dense_metric(P, x).inverse();
  return Ax * ginv * Ax.transpose();
}

Vector dense_leverage(const Polytope& P, const Vector& x) {
  return dense_projection(P, x).diagonal();
}

Vector dense_drift(const Polytope& P, const Vector& x) {
  const Matrix Ax = scaled_rows(P, x);
  return dense_metric(P, x).inverse() * Ax.transpose() * dense_leverage(P, x);
}

double eigen_log_det(const Polytope& P, const Vector& x) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(dense_metric(P, x), Eigen::EigenvaluesOnly);
  double s = 0;
  for (Index i = 0; i < es.eigenvalues().size(); ++i) {
    if (!(es.eigenvalues()(i) > 0)) throw FactorizationError("oracle: metric not positive");
    s += std::log(es.eigenvalues()(i));
  }
  return s;
}

Vector fd_grad_half_logdet(const Polytope& P, const Vector& x, double step) {
  Vector grad(P.n());
  for (Index i = 0; i < P.n(); ++i) {
    Vector xp = x, xm = x;
    xp(i) += step;
    xm(i) -= step;
    grad(i) = 0.25 * (eigen_log_det(P, xp) - eigen_log_det(P, xm)) / step;
  }
  return grad;
}

std::vector<double> third_derivative(const Polytope& P, const Vector& x) {
  const Matrix Ax = scaled_rows(P, x);
  const Index n = P.n();
  std::vector<double> phi(static_cast<size_t>(n * n * n), 0.0);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j)
      for (Index k = 0; k < n; ++k) {
        double s = 0;
        for (Index l = 0; l < P.m(); ++l) s += Ax(l, i) * Ax(l, j) * Ax(l, k);
        phi[static_cast<size_t>(i + n * (j + n * k))] = -2.0 * s;
      }
  return phi;
}

Vector index_christoffel(const Polytope& P, const Vector& x, const Vector& u, const Vector& v) {
  const Index n = P.n();
  const auto phi = third_derivative(P, x);
  const Matrix ginv = dense_metric(P, x).inverse();
  auto F = [&](Index i, Index j, Index k) { return phi[static_cast<size_t>(i + n * (j + n * k))]; };
  Vector out = Vector::Zero(n);
  for (Index k = 0; k < n; ++k)
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < n; ++j) {
        double G = 0;
        for (Index l = 0; l < n; ++l) G += 0.5 * ginv(k, l) * F(i, j, l);
        out(k) += G * u(i) * v(j);
      }
  return out;
}

double index_riemann(const Polytope& P, const Vector& x, const Vector& u, const Vector& v,
                     const Vector& w, const Vector& z) {
  const Index n = P.n();
  const auto phi = third_derivative(P, x);
  const Matrix ginv = dense_metric(P, x).inverse();
  auto F = [&](Index i, Index j, Index k) { return phi[static_cast<size_t>(i + n * (j + n * k))]; };
  double total = 0;
  for (Index k = 0; k < n; ++k)
    for (Index l = 0; l < n; ++l)
      for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < n; ++j) {
          const double coeff = u(i) * v(j) * w(l) * z(k);
          if (coeff == 0) continue;
          double R = 0;
          for (Index p = 0; p < n; ++p)
            for (Index q = 0; q < n; ++q)
              R += ginv(p, q) * (F(j, k, p) * F(i, l, q) - F(i, k, p) * F(j, l, q));
          total += 0.25 * R * coeff;
        }
  return total;
}

double index_ricci(const Polytope& P, const Vector& x, const Vector& u) {
  const Index n = P.n();
  const auto phi = third_derivative(P, x);
  const Matrix ginv = dense_metric(P, x).inverse();
  auto F = [&](Index i, Index j, Index k) { return phi[static_cast<size_t>(i + n * (j + n * k))]; };
  double total = 0;
  for (Index i = 0; i < n; ++i)
    for (Index k = 0; k < n; ++k) {
      if (u(i) * u(k) == 0) continue;
      double s = 0;
      for (Index j = 0; j < n; ++j)
        for (Index l = 0; l < n; ++l)
          for (Index p = 0; p < n; ++p)
            for (Index q = 0; q < n; ++q)
              s += ginv(p, q) * ginv(j, l) * (F(j, k, p) * F(i, l, q) - F(i, k, p) * F(j, l, q));
      total += 0.25 * s * u(i) * u(k);
    }
  return total;
}

namespace {

// Largest t in the given direction with x + t d still inside.
double boundary_hit(const Polytope& P, const Vector& x, const Vector& d, double t_inside) {
  double lo = t_inside;
  while (!contains(P, x + lo * d)) {
    lo *= 0.5;
    if (lo < 1e-300) throw DomainError("hilbert distance: no interior step along chord");
  }
  double hi = lo;
  for (int k = 0;; ++k) {
    hi *= 2.0;
    if (!contains(P, x + hi * d)) break;
    lo = hi;
    if (k > 200) throw DomainError("hilbert distance: polytope unbounded along chord");
  }
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    if (contains(P, x + mid * d))
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

double bisection_hilbert(const Polytope& P, const Vector& x, const Vector& y) {
  if (!contains(P, x) || !contains(P, y)) throw DomainError("hilbert distance: point not interior");
  const Vector d = y - x;
  if (d.norm() == 0) return 0.0;
  const double tq = boundary_hit(P, x, d, 1.0);
  const double tp = -boundary_hit(P, x, -d, 1.0 / 1024);
  return std::log(tq * (1.0 - tp) / ((-tp) * (tq - 1.0)));
}

}  // namespace oracle

double integrated_autocorrelation_time(const std::vector<double>& series, double window_c) {
  const size_t N = series.size();
  if (N < 2) throw InputError("autocorrelation time needs at least two samples");
  double mean = 0;
  for (double v : series) mean += v;
  mean /= static_cast<double>(N);
  std::vector<double> x(N);
  for (size_t i = 0; i < N; ++i) x[i] = series[i] - mean;
  auto acov = [&](size_t k) {
    double s = 0;
    for (size_t t = 0; t + k < N; ++t) s += x[t] * x[t + k];
    return s / static_cast<double>(N);
  };
  const double c0 = acov(0);
  if (!(c0 > 0)) return std::numeric_limits<double>::quiet_NaN();
  double tau = 1.0;
  for (size_t M = 1; M < N / 2; ++M) {
    tau += 2.0 * acov(M) / c0;
    if (static_cast<double>(M) >= window_c * tau) break;
  }
  return std::max(tau, 1.0 / static_cast<double>(N));
}

double ks_statistic(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw InputError("ks_statistic needs non-empty samples");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  size_t i = 0, j = 0;
  double D = 0;
  while (i < a.size() && j < b.size()) {
    const double v = std::min(a[i], b[j]);
    while (i < a.size() && a[i] == v) ++i;
    while (j < b.size() && b[j] == v) ++j;
    D = std::max(D, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return D;
}

double ks_p_value(double D, double n_eff, double m_eff) {
  if (!(n_eff > 0 && m_eff > 0) || !std::isfinite(D)) return 0.0;
  const double en = std::sqrt(n_eff * m_eff / (n_eff + m_eff));
  const double lambda = (en + 0.12 + 0.11 / en) * D;
  if (lambda < 0.2) return 1.0;
  double q = 0, sign = 1;
  for (int k = 1; k <= 100; ++k) {
    const double term = sign * std::exp(-2.0 * k * k * lambda * lambda);
    q += term;
    if (std::abs(term) < 1e-16) break;
    sign = -sign;
  }
  return std::clamp(2.0 * q, 0.0, 1.0);
}

BoundingBox bounding_box(const Polytope& P) {
  const Vector c = analytic_center(P).x();
  const Index n = P.n();
  BoundingBox box{Vector(n), Vector(n)};
  constexpr double gap = 1e-9;
  for (Index i = 0; i < n; ++i) {
    Vector e = Vector::Zero(n);
    e(i) = 1.0;
    const double hi = barrier_maximize(P, e, c, gap)(i);
    const double lo = barrier_maximize(P, -e, c, gap)(i);
    const double pad = gap + 1e-9 * (1.0 + hi - lo);
    box.lo(i) = lo - pad;
    box.hi(i) = hi + pad;
  }
  return box;
}

Matrix rejection_sample(const Polytope& P, Index count, Rng& rng, long max_draws) {
  const BoundingBox box = bounding_box(P);
  const Index n = P.n();
  if (max_draws <= 0) max_draws = std::max<long>(1000000, 1000L * count);
  Matrix out(count, n);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  Vector x(n);
  Index got = 0;
  for (long draw = 0; got < count; ++draw) {
    if (draw >= max_draws)
      throw ConvergenceError("rejection sampling: acceptance too low for bounding box");
    for (Index j = 0; j < n; ++j) x(j) = box.lo(j) + (box.hi(j) - box.lo(j)) * U(rng);
    if (contains(P, x)) out.row(got++) = x.transpose();
  }
  return out;
}

std::optional<ExactMoments> exact_moments(const Polytope& P) {
  const Index n = P.n(), m = P.m();
  const Matrix& A = P.A();
  const Vector& b = P.b();

  bool is_box = true;
  Vector lo = Vector::Constant(n, -std::numeric_limits<double>::infinity());
  Vector hi = Vector::Constant(n, std::numeric_limits<double>::infinity());
  for (Index l = 0; l < m && is_box; ++l) {
    Index nz = -1, count = 0;
    for (Index j = 0; j < n; ++j)
      if (A(l, j) != 0) {
        nz = j;
        ++count;
      }
    if (count != 1) {
      is_box = false;
      break;
    }
    const double bound = b(l) / A(l, nz);
    if (A(l, nz) > 0)
      lo(nz) = std::max(lo(nz), bound);
    else
      hi(nz) = std::min(hi(nz), bound);
  }
  if (is_box && lo.allFinite() && hi.allFinite()) {
    ExactMoments em{Vector(n), Vector(n)};
    for (Index i = 0; i < n; ++i) {
      em.mean(i) = 0.5 * (lo(i) + hi(i));
      em.second(i) = (lo(i) * lo(i) + lo(i) * hi(i) + hi(i) * hi(i)) / 3.0;
    }
    return em;
  }

  if (m == n + 1 && A.topRows(n).isIdentity(0.0) && b.head(n).isZero(0.0) &&
      (A.row(n).array() == -1.0).all() && b(n) == -1.0) {
    const double nn = static_cast<double>(n);
    return ExactMoments{Vector::Constant(n, 1.0 / (nn + 1.0)),
                        Vector::Constant(n, 2.0 / ((nn + 1.0) * (nn + 2.0)))};
  }
  return std::nullopt;
}

namespace {

struct Summary {
  double mean, var, ess;
};

Summary summarize(const std::vector<double>& v) {
  const double N = static_cast<double>(v.size());
  double mean = 0;
  for (double x : v) mean += x;
  mean /= N;
  double var = 0;
  for (double x : v) var += (x - mean) * (x - mean);
  var /= (N - 1.0);
  const double tau = integrated_autocorrelation_time(v);
  return {mean, var, std::isfinite(tau) ? N / tau : 1.0};
}

}  // namespace

UniformityReport uniformity_report(const Matrix& samples, const Polytope& P, std::uint64_t seed,
                                   Index reference_size) {
  const Index N = samples.rows(), n = P.n();
  if (samples.cols() != n) throw InputError("samples have wrong dimension");
  if (N < 1000) throw InputError("uniformity report needs at least 1000 samples");

  UniformityReport r;
  r.samples = N;
  r.mean.resize(n);
  r.variance.resize(n);
  r.ess.resize(n);
  r.exact = exact_moments(P);
  if (r.exact) {
    r.mean_z.resize(n);
    r.second_z.resize(n);
  }
  std::vector<double> col(static_cast<size_t>(N)), sq(static_cast<size_t>(N));
  for (Index j = 0; j < n; ++j) {
    for (Index i = 0; i < N; ++i) {
      col[static_cast<size_t>(i)] = samples(i, j);
      sq[static_cast<size_t>(i)] = samples(i, j) * samples(i, j);
    }
    const Summary s = summarize(col);
    r.mean(j) = s.mean;
    r.variance(j) = s.var;
    r.ess(j) = s.ess;
    if (r.exact) {
      const Summary s2 = summarize(sq);
      r.mean_z(j) = (s.mean - r.exact->mean(j)) / std::sqrt(s.var / s.ess);
      r.second_z(j) = (s2.mean - r.exact->second(j)) / std::sqrt(s2.var / s2.ess);
    }
  }

  Rng rng(seed);
  std::normal_distribution<double> normal;
  const Matrix ref = rejection_sample(P, reference_size, rng);
  constexpr int kProjections = 8;
  for (int k = 0; k < kProjections; ++k) {
    Vector u(n);
    for (Index j = 0; j < n; ++j) u(j) = normal(rng);
    u.normalize();
    std::vector<double> a(static_cast<size_t>(N)), b(static_cast<size_t>(reference_size));
    for (Index i = 0; i < N; ++i) a[static_cast<size_t>(i)] = samples.row(i).dot(u);
    for (Index i = 0; i < reference_size; ++i) b[static_cast<size_t>(i)] = ref.row(i).dot(u);
    ProjectionTest t;
    t.direction = u;
    t.ks = ks_statistic(a, b);
    const double tau = integrated_autocorrelation_time(a);
    if (std::isfinite(tau)) {
      t.ess = static_cast<double>(N) / tau;
      t.p_value = ks_p_value(t.ks, t.ess, static_cast<double>(reference_size));
    } else {
      // Constant projection: not a sample from a continuous law.
      t.ess = 1.0;
      t.p_value = 0.0;
    }
    if (t.p_value > 0.01) ++r.projections_passed;
    r.projections.push_back(std::move(t));
  }

  bool moments_ok = true;
  if (r.exact)
    for (Index j = 0; j < n; ++j)
      if (!(std::abs(r.mean_z(j)) <= 3.0) || !(std::abs(r.second_z(j)) <= 3.0)) moments_ok = false;
  r.pass = r.projections_passed >= 7 && moments_ok;
  return r;
}

nlohmann::json to_json(const UniformityReport& r) {
  auto vec = [](const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
  nlohmann::json j;
  j["samples"] = r.samples;
  j["mean"] = vec(r.mean);
  j["variance"] = vec(r.variance);
  j["ess"] = vec(r.ess);
  if (r.exact) {
    j["exact_mean"] = vec(r.exact->mean);
    j["exact_second_moment"] = vec(r.exact->second);
    j["mean_z"] = vec(r.mean_z);
    j["second_moment_z"] = vec(r.second_z);
  } else {
    j["exact_mean"] = nullptr;
  }
  nlohmann::json proj = nlohmann::json::array();
  for (const auto& t : r.projections)
    proj.push_back({{"direction", vec(t.direction)},
                    {"ks", t.ks},
                    {"p_value", t.p_value},
                    {"ess", t.ess}});
  j["projections"] = proj;
  j["projections_passed"] = r.projections_passed;
  j["pass"] = r.pass;
  return j;
}

std::vector<ComparisonRow> compare_walks(const Polytope& P, const std::vector<double>& h_grid,
                                         long steps, std::uint64_t seed, const WalkConfig& base,
                                         bool parallel) {
  if (steps < 0) throw InputError("compare_walks: steps must be non-negative");
  if (steps == 0) return {};
  for (double h : h_grid)
    if (!(h > 0) || !std::isfinite(h)) throw InputError("step sizes must be positive");
  const Index n = P.n();
  const Vector center = analytic_center(P).x();
  Vector u(n);
  {
    Rng rng(seed ^ 0x9e3779b97f4a7c15ULL);
    std::normal_distribution<double> normal;
    for (Index j = 0; j < n; ++j) u(j) = normal(rng);
    u.normalize();
  }
  auto iat_of = [&](const Matrix& S) {
    std::vector<double> proj(static_cast<size_t>(S.rows()));
    for (Index i = 0; i < S.rows(); ++i) proj[static_cast<size_t>(i)] = S.row(i).dot(u);
    return proj.size() >= 2 ? integrated_autocorrelation_time(proj)
                            : std::numeric_limits<double>::quiet_NaN();
  };

  const long K = static_cast<long>(h_grid.size());
  std::vector<ComparisonRow> rows(static_cast<size_t>(2 * K));
  std::vector<std::string> errors(static_cast<size_t>(2 * K));
#pragma omp parallel for schedule(dynamic) if (parallel)
  for (long job = 0; job < 2 * K; ++job) {
    const double h = h_grid[static_cast<size_t>(job / 2)];
    const long burn = steps / 10;
    try {
      ComparisonRow row;
      row.h = h;
      row.steps = steps;
      row.radius = std::sqrt(static_cast<double>(n) * h);
      if (job % 2 == 0) {
        WalkConfig cfg = base;
        cfg.h = h;
        cfg.seed = seed;
        cfg.burn_in = burn;
        cfg.thin = 1;
        const ChainResult res = run_chain(P, center, steps, cfg);
        row.walk = "geodesic";
        row.accept_rate = res.stats.accept_rate;
        row.iat = iat_of(res.samples);
      } else {
        const ChainResult res = run_dikin_chain(P, center, steps, row.radius, seed, burn);
        row.walk = "dikin";
        row.accept_rate = res.stats.accept_rate;
        row.iat = iat_of(res.samples);
      }
      rows[static_cast<size_t>(job)] = std::move(row);
    } catch (const std::exception& e) {
      errors[static_cast<size_t>(job)] = e.what();
    }
  }
  for (const auto& e : errors)
    if (!e.empty()) throw Error("compare_walks: " + e);
  return rows;
}

std::string comparison_csv(const std::vector<ComparisonRow>& rows) {
  std::ostringstream out;
  out << "walk,h,radius,accept_rate,iat,steps\n";
  for (const auto& r : rows)
    out << r.walk << ',' << io::format_double(r.h) << ',' << io::format_double(r.radius) << ','
        << io::format_double(r.accept_rate) << ',' << io::format_double(r.iat) << ',' << r.steps
        << '\n';
  return out.str();
}

}  // namespace geowalk
