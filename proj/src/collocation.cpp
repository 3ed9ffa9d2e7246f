#include "geowalk/collocation.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <numbers>

namespace geowalk {

namespace {

constexpr double kMachEps = std::numeric_limits<double>::epsilon();
constexpr int kExactDegreeLimit = 32;

// T_0..T_{d} at tau.
void chebyshev_values(double tau, int d, std::vector<double>& T) {
  T.resize(static_cast<size_t>(d) + 1);
  T[0] = 1.0;
  if (d >= 1) T[1] = tau;
  for (int k = 1; k < d; ++k) T[k + 1] = 2.0 * tau * T[k] - T[k - 1];
}

// int_{-1}^{tau} T_k, k = 0..d-1, from T_0..T_d.
void chebyshev_integrals(double tau, int d, const std::vector<double>& T, std::vector<double>& I) {
  I.resize(static_cast<size_t>(d));
  if (d >= 1) I[0] = tau + 1.0;
  if (d >= 2) I[1] = 0.5 * (tau * tau - 1.0);
  for (int k = 2; k < d; ++k) {
    const double kk = static_cast<double>(k);
    const double sign = (k % 2 == 0) ? -1.0 : 1.0;  // (-1)^{k+1}
    I[k] = 0.5 * (T[k + 1] / (kk + 1.0) - T[k - 1] / (kk - 1.0)) + sign / (kk * kk - 1.0);
  }
}

Vector barycentric_weights(const Vector& tau) {
  const Index d = tau.size();
  Vector w(d);
  for (Index j = 0; j < d; ++j) {
    double p = 1.0;
    for (Index k = 0; k < d; ++k)
      if (k != j) p *= (tau(j) - tau(k));
    w(j) = 1.0 / p;
  }
  return w;
}

double lagrange_basis(const Vector& tau, const Vector& w, Index j, double x) {
  double num = 0.0, den = 0.0;
  for (Index k = 0; k < tau.size(); ++k) {
    const double diff = x - tau(k);
    if (diff == 0.0) return k == j ? 1.0 : 0.0;
    const double t = w(k) / diff;
    den += t;
    if (k == j) num = t;
  }
  return num / den;
}

double weighted_norm(const Vector& x, const Vector& weights, NormKind p) {
  return vector_norm(weights.cwiseProduct(x), p);
}

double rows_norm(const Matrix& Z, const Vector& weights, NormKind p) {
  double best = 0.0;
  for (Index i = 0; i < Z.rows(); ++i)
    best = std::max(best, weighted_norm(Z.row(i).transpose(), weights, p));
  return best;
}

Vector call_rhs(const FirstOrderRhs& F, const Vector& u, double t, int& evals) {
  ++evals;
  Vector f = F(u, t);
  if (f.size() != u.size()) throw InputError("ODE right-hand side returned wrong dimension");
  if (!f.allFinite()) throw NonFiniteError("ODE right-hand side is not finite");
  return f;
}

struct SegmentResult {
  PolyCurve curve;
  int iterations;
  double residual;
  double offnode;
  std::vector<double> changes;
};

// Fixed-point iteration zeta <- v + M F(zeta) on one interval, plus the
// post-solve residual checks.
SegmentResult solve_segment(const FirstOrderRhs& F, const Vector& v,
                            const std::shared_ptr<const NodeBasis>& basis, double ell, double t0,
                            const Vector& weights, const CollocationConfig& cfg, double eps,
                            int& evals) {
  const Index d = basis->tau.size();
  const Index n = v.size();
  const Matrix M = (0.5 * ell) * basis->unit_integral;
  Vector times(d);
  for (Index j = 0; j < d; ++j) times(j) = t0 + 0.5 * ell * (basis->tau(j) + 1.0);

  auto eval_nodes = [&](const Matrix& Z) {
    Matrix D(d, n);
    for (Index j = 0; j < d; ++j)
      D.row(j) = call_rhs(F, Z.row(j).transpose(), times(j), evals).transpose();
    return D;
  };
  const Matrix base = Vector::Ones(d) * v.transpose();

  Matrix D(d, n);
  for (Index j = 0; j < d; ++j) D.row(j) = call_rhs(F, v, times(j), evals).transpose();
  const double K = 4000.0 * ell * rows_norm(D, weights, cfg.norm);
  int Z = cfg.max_iters;
  if (Z <= 0) Z = K > eps ? static_cast<int>(std::ceil(std::log2(K / eps))) : 1;
  Z = std::clamp(Z, 1, cfg.iteration_cap);

  Matrix zeta = base + M * D;
  std::vector<double> changes;
  int increases = 0;
  bool converged = false;
  double change = std::numeric_limits<double>::infinity();
  double scale = 1.0;
  int it = 0;
  for (; it < Z; ++it) {
    D = eval_nodes(zeta);
    Matrix next = base + M * D;
    change = rows_norm(next - zeta, weights, cfg.norm);
    zeta.swap(next);
    scale = std::max(1.0, rows_norm(zeta, weights, cfg.norm));
    if (!changes.empty() && change > changes.back())
      ++increases;
    else
      increases = 0;
    changes.push_back(change);
    if (!std::isfinite(change)) throw NonContractionError("collocation iteration diverged");
    if (change <= 0.1 * eps * scale) {
      converged = true;
      ++it;
      break;
    }
    if (increases >= 3 && change > 64.0 * kMachEps * scale)
      throw NonContractionError("collocation iteration is not contracting");
  }
  if (!converged && change > eps * scale)
    throw NonContractionError("collocation iteration did not reach tolerance within Z steps");

  D = eval_nodes(zeta);
  PolyCurve curve(v, basis, D, ell);

  // Node residual of the returned polynomial, recomputed from scratch.
  const Matrix P = curve.node_values();
  double residual = 0.0;
  for (Index j = 0; j < d; ++j) {
    const Vector r = D.row(j).transpose() - call_rhs(F, P.row(j).transpose(), times(j), evals);
    residual = std::max(residual, weighted_norm(r, weights, cfg.norm));
  }
  double offnode = 0.0;
  for (int k = 0; k < cfg.residual_checks; ++k) {
    const double t = ell * (k + 0.5) / cfg.residual_checks;
    const Vector r = curve.derivative(t) - call_rhs(F, curve.eval(t), t0 + t, evals);
    offnode = std::max(offnode, ell * weighted_norm(r, weights, cfg.norm));
  }
  if (offnode > cfg.residual_tolerance * scale)
    throw NonContractionError("collocation polynomial misses the ODE between nodes");
  return {std::move(curve), it, residual, offnode, std::move(changes)};
}

void merge(SolveReport& into, const SegmentResult& s, int depth) {
  into.iterations += s.iterations;
  into.segments += 1;
  into.halvings = std::max(into.halvings, depth);
  into.residual = std::max(into.residual, s.residual);
  into.offnode_residual = std::max(into.offnode_residual, s.offnode);
  into.changes = s.changes;
}

PiecewiseCurve adaptive_impl(const FirstOrderRhs& F, const Vector& v, double t0, double ell,
                             const CollocationConfig& cfg, double eps, int depth,
                             SolveReport& rep) {
  const auto basis = chebyshev_basis(cfg.resolved_degree());
  const Vector weights = Vector::Ones(v.size());
  try {
    auto seg = solve_segment(F, v, basis, ell, t0, weights, cfg, eps, rep.evaluations);
    merge(rep, seg, depth);
    return PiecewiseCurve(std::move(seg.curve));
  } catch (const NonContractionError&) {
    if (depth >= cfg.max_halvings) throw;
  } catch (const NonFiniteError&) {
    if (depth >= cfg.max_halvings) throw;
  } catch (const DomainError&) {
    if (depth >= cfg.max_halvings) throw;
  } catch (const FactorizationError&) {
    if (depth >= cfg.max_halvings) throw;
  }
  PiecewiseCurve left = adaptive_impl(F, v, t0, 0.5 * ell, cfg, eps, depth + 1, rep);
  PiecewiseCurve right =
      adaptive_impl(F, left.end(), t0 + 0.5 * ell, 0.5 * ell, cfg, eps, depth + 1, rep);
  left.append(right);
  return left;
}

}  // namespace

double vector_norm(const Vector& x, NormKind p) {
  switch (p) {
    case NormKind::L2:
      return x.norm();
    case NormKind::L4:
      return std::sqrt(std::sqrt(x.array().square().square().sum()));
    case NormKind::Inf:
      return x.size() ? x.cwiseAbs().maxCoeff() : 0.0;
  }
  return 0.0;
}

NormKind parse_norm(const std::string& s) {
  if (s == "2") return NormKind::L2;
  if (s == "4") return NormKind::L4;
  if (s == "inf") return NormKind::Inf;
  throw InputError("norm must be one of 2, 4, inf");
}

int CollocationConfig::default_degree(double eps) {
  return std::max(8, static_cast<int>(std::ceil(0.5 * std::log2(1.0 / eps))));
}

void CollocationConfig::validate() const {
  if (degree < 0) throw InputError("collocation: degree must be >= 1");
  if (!(interval > 0) || !std::isfinite(interval))
    throw InputError("collocation: interval must be positive");
  if (!(tolerance > 0)) throw InputError("collocation: tolerance must be positive");
  if (residual_checks < 0 || max_halvings < 0 || iteration_cap < 1)
    throw InputError("collocation: bad iteration limits");
}

ChebyshevNodes chebyshev_nodes(int d, double ell) {
  if (d < 1) throw InputError("chebyshev_nodes: d must be >= 1");
  if (!(ell > 0)) throw InputError("chebyshev_nodes: interval must be positive");
  ChebyshevNodes out;
  out.values.resize(d);
  out.order.resize(static_cast<size_t>(d));
  for (int k = 0; k < d; ++k) {
    const double tau = std::sin((2.0 * k + 1.0 - d) * std::numbers::pi / (2.0 * d));
    out.values(k) = 0.5 * ell + 0.5 * ell * tau;
    out.order[static_cast<size_t>(k)] = d - k;
  }
  return out;
}

std::shared_ptr<const NodeBasis> make_basis(const Vector& tau) {
  const Index d = tau.size();
  if (d < 1) throw InputError("collocation: need at least one node");
  std::vector<double> sorted(tau.data(), tau.data() + d);
  std::sort(sorted.begin(), sorted.end());
  for (Index k = 1; k < d; ++k)
    if (!(sorted[k] > sorted[k - 1])) throw InputError("collocation: duplicate nodes");
  if (sorted.front() < -1.0 || sorted.back() > 1.0)
    throw InputError("collocation: nodes outside the interval");

  auto B = std::make_shared<NodeBasis>();
  B->tau = tau;
  Matrix V(d, d);
  std::vector<double> T, I;
  for (Index i = 0; i < d; ++i) {
    chebyshev_values(tau(i), static_cast<int>(d), T);
    for (Index k = 0; k < d; ++k) V(i, k) = T[k];
  }
  B->to_coeffs = V.partialPivLu().inverse();
  B->unit_integral.resize(d, d);
  if (d <= kExactDegreeLimit) {
    for (Index i = 0; i < d; ++i) {
      chebyshev_values(tau(i), static_cast<int>(d), T);
      chebyshev_integrals(tau(i), static_cast<int>(d), T, I);
      for (Index j = 0; j < d; ++j) {
        double s = 0.0;
        for (Index k = 0; k < d; ++k) s += B->to_coeffs(k, j) * I[k];
        B->unit_integral(i, j) = s;
      }
    }
  } else {
    using boost::math::quadrature::gauss_kronrod;
    const Vector w = barycentric_weights(tau);
    for (Index j = 0; j < d; ++j) {
      auto phi = [&](double x) { return lagrange_basis(tau, w, j, x); };
      for (Index i = 0; i < d; ++i)
        B->unit_integral(i, j) = gauss_kronrod<double, 61>::integrate(phi, -1.0, tau(i), 3, 1e-13);
    }
  }
  return B;
}

std::shared_ptr<const NodeBasis> chebyshev_basis(int d) {
  static std::mutex mu;
  static std::map<int, std::shared_ptr<const NodeBasis>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(d);
  if (it != cache.end()) return it->second;
  const ChebyshevNodes c = chebyshev_nodes(d, 2.0);
  auto B = make_basis((c.values.array() - 1.0).matrix());
  cache.emplace(d, B);
  return B;
}

Matrix lagrange_integral_matrix(const Vector& nodes, double ell) {
  if (!(ell > 0)) throw InputError("lagrange_integral_matrix: interval must be positive");
  const Vector tau = (2.0 / ell) * nodes.array() - 1.0;
  return (0.5 * ell) * make_basis(tau)->unit_integral;
}

PolyCurve::PolyCurve(Vector v, std::shared_ptr<const NodeBasis> basis, Matrix node_derivatives,
                     double ell)
    : v_(std::move(v)), basis_(std::move(basis)), D_(std::move(node_derivatives)), ell_(ell) {
  if (D_.rows() != basis_->tau.size() || D_.cols() != v_.size())
    throw InputError("PolyCurve: node data has the wrong shape");
  coef_ = basis_->to_coeffs * D_;
}

double PolyCurve::to_tau(double t) const {
  const double slop = 1e-12 * std::max(1.0, ell_);
  if (!(t >= -slop && t <= ell_ + slop)) throw InputError("curve evaluated outside [0, l]");
  t = std::clamp(t, 0.0, ell_);
  return 2.0 * t / ell_ - 1.0;
}

Vector PolyCurve::eval(double t) const {
  const double tau = to_tau(t);
  if (tau == -1.0) return v_;
  const int d = degree();
  thread_local std::vector<double> T, I;
  chebyshev_values(tau, d, T);
  chebyshev_integrals(tau, d, T, I);
  Vector acc = Vector::Zero(v_.size());
  for (int k = 0; k < d; ++k) acc += I[k] * coef_.row(k).transpose();
  return v_ + (0.5 * ell_) * acc;
}

Vector PolyCurve::derivative(double t) const {
  const double tau = to_tau(t);
  const int d = degree();
  thread_local std::vector<double> T;
  chebyshev_values(tau, d, T);
  Vector acc = Vector::Zero(v_.size());
  for (int k = 0; k < d; ++k) acc += T[k] * coef_.row(k).transpose();
  return acc;
}

Matrix PolyCurve::node_values() const {
  return Vector::Ones(D_.rows()) * v_.transpose() + (0.5 * ell_) * basis_->unit_integral * D_;
}

Vector PolyCurve::nodes() const { return (0.5 * ell_) * (basis_->tau.array() + 1.0).matrix(); }

PiecewiseCurve::PiecewiseCurve(PolyCurve c) { append(std::move(c)); }

void PiecewiseCurve::append(PolyCurve c) {
  starts_.push_back(total_);
  total_ += c.length();
  segs_.push_back(std::move(c));
}

void PiecewiseCurve::append(const PiecewiseCurve& other) {
  for (const auto& s : other.segs_) append(s);
}

size_t PiecewiseCurve::locate(double t) const {
  if (segs_.empty()) throw InputError("empty curve");
  auto it = std::upper_bound(starts_.begin(), starts_.end(), t);
  size_t k = it == starts_.begin() ? 0 : static_cast<size_t>(it - starts_.begin()) - 1;
  return std::min(k, segs_.size() - 1);
}

Vector PiecewiseCurve::eval(double t) const {
  const size_t k = locate(t);
  const double local = t - starts_[k];
  if (local > segs_[k].length() && local <= segs_[k].length() * (1.0 + 1e-12))
    return segs_[k].eval(segs_[k].length());
  return segs_[k].eval(local);
}

Vector PiecewiseCurve::derivative(double t) const {
  const size_t k = locate(t);
  const double local = t - starts_[k];
  if (local > segs_[k].length() && local <= segs_[k].length() * (1.0 + 1e-12))
    return segs_[k].derivative(segs_[k].length());
  return segs_[k].derivative(local);
}

std::vector<double> PiecewiseCurve::node_times() const {
  std::vector<double> out;
  for (size_t k = 0; k < segs_.size(); ++k) {
    const Vector c = segs_[k].nodes();
    for (Index i = 0; i < c.size(); ++i) out.push_back(starts_[k] + c(i));
  }
  std::sort(out.begin(), out.end());
  return out;
}

PolyCurve collocation_first_order(const FirstOrderRhs& F, const Vector& v,
                                  const CollocationConfig& cfg, SolveReport* report) {
  cfg.validate();
  SolveReport rep;
  auto seg = solve_segment(F, v, chebyshev_basis(cfg.resolved_degree()), cfg.interval, 0.0,
                           Vector::Ones(v.size()), cfg, cfg.tolerance, rep.evaluations);
  merge(rep, seg, 0);
  if (report) *report = rep;
  return std::move(seg.curve);
}

PolyCurve collocation_first_order(const FirstOrderRhs& F, const Vector& v, const Vector& nodes,
                                  const CollocationConfig& cfg, SolveReport* report) {
  cfg.validate();
  const Vector tau = (2.0 / cfg.interval) * nodes.array() - 1.0;
  SolveReport rep;
  auto seg = solve_segment(F, v, make_basis(tau), cfg.interval, 0.0, Vector::Ones(v.size()), cfg,
                           cfg.tolerance, rep.evaluations);
  merge(rep, seg, 0);
  if (report) *report = rep;
  return std::move(seg.curve);
}

PiecewiseCurve collocation_adaptive(const FirstOrderRhs& F, const Vector& v, double t0,
                                    double length, const CollocationConfig& cfg,
                                    SolveReport* report) {
  cfg.validate();
  SolveReport rep;
  auto curve = adaptive_impl(F, v, t0, length, cfg, cfg.tolerance, 0, rep);
  if (report) *report = rep;
  return curve;
}

MultistepResult collocation_multistep(const FirstOrderRhs& F, const Vector& v, double T,
                                      const CollocationConfig& cfg,
                                      std::optional<double> lipschitz) {
  cfg.validate();
  if (!(T >= 0)) throw InputError("multistep: T must be non-negative");
  MultistepResult out;
  out.endpoint = v;
  if (T == 0) return out;
  double ell = cfg.interval;
  if (lipschitz) {
    if (!(*lipschitz > 0)) throw InputError("multistep: Lipschitz estimate must be positive");
    ell = 1.0 / (2000.0 * *lipschitz);
  }
  const int N = std::max(1, static_cast<int>(std::ceil(T / ell - 1e-9)));
  ell = T / N;
  const double floor_eps = 1e-14;
  Vector u = v;
  for (int k = 1; k <= N; ++k) {
    const double eps = std::max(cfg.tolerance * std::pow(0.5, N - k), floor_eps);
    auto piece = adaptive_impl(F, u, (k - 1) * ell, ell, cfg, eps, 0, out.report);
    u = piece.end();
    out.curve.append(piece);
  }
  out.steps = N;
  out.endpoint = u;
  return out;
}

namespace {

struct SecondOrderPieces {
  PiecewiseCurve position, velocity;
};

SecondOrderPieces second_order_impl(const SecondOrderRhs& F, const Vector& v, const Vector& w,
                                    double t0, double ell, const CollocationConfig& cfg, int depth,
                                    SolveReport& rep) {
  const Index n = v.size();
  const FirstOrderRhs stacked = [&F, n](const Vector& z, double t) {
    Vector out(2 * n);
    out.head(n) = F(z.head(n), z.tail(n), t);
    out.tail(n) = z.head(n);
    return out;
  };
  Vector z0(2 * n);
  z0 << w, v;
  Vector weights(2 * n);
  weights.head(n).setConstant(4000.0 * ell);
  weights.tail(n).setOnes();
  const auto basis = chebyshev_basis(cfg.resolved_degree());
  try {
    auto seg = solve_segment(stacked, z0, basis, ell, t0, weights, cfg, cfg.tolerance,
                             rep.evaluations);
    merge(rep, seg, depth);
    const Matrix& D = seg.curve.node_derivatives();
    SecondOrderPieces out;
    out.position = PiecewiseCurve(PolyCurve(v, basis, D.rightCols(n), ell));
    out.velocity = PiecewiseCurve(PolyCurve(w, basis, D.leftCols(n), ell));
    return out;
  } catch (const NonContractionError&) {
    if (depth >= cfg.max_halvings) throw;
  } catch (const NonFiniteError&) {
    if (depth >= cfg.max_halvings) throw;
  } catch (const DomainError&) {
    if (depth >= cfg.max_halvings) throw;
  } catch (const FactorizationError&) {
    if (depth >= cfg.max_halvings) throw;
  }
  auto left = second_order_impl(F, v, w, t0, 0.5 * ell, cfg, depth + 1, rep);
  auto right = second_order_impl(F, left.position.end(), left.velocity.end(), t0 + 0.5 * ell,
                                 0.5 * ell, cfg, depth + 1, rep);
  left.position.append(right.position);
  left.velocity.append(right.velocity);
  return left;
}

}  // namespace

SecondOrderSolution collocation_second_order(const SecondOrderRhs& F, const Vector& v,
                                             const Vector& w, const CollocationConfig& cfg) {
  cfg.validate();
  if (v.size() != w.size()) throw InputError("second order: position and velocity sizes differ");
  SecondOrderSolution out;
  auto pieces = second_order_impl(F, v, w, 0.0, cfg.interval, cfg, 0, out.report);
  out.position = std::move(pieces.position);
  out.velocity = std::move(pieces.velocity);
  return out;
}

Vector eval_curve(const PolyCurve& c, double t) { return c.eval(t); }
Vector eval_derivative(const PolyCurve& c, double t) { return c.derivative(t); }

}  // namespace geowalk
