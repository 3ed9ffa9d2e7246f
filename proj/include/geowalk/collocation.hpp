#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "geowalk/errors.hpp"
#include "geowalk/types.hpp"

namespace geowalk {

enum class NormKind { L2, L4, Inf };

double vector_norm(const Vector& x, NormKind p);
NormKind parse_norm(const std::string& s);

struct CollocationConfig {
  int degree = 0;            // 0 selects default_degree(tolerance)
  double interval = 1.0;     // l
  int max_iters = 0;         // Z; 0 derives it from K = 4000 l max|F(v,t)|
  double tolerance = 1e-11;  // eps, relative to max(1, |solution|)
  NormKind norm = NormKind::Inf;
  int residual_checks = 8;            // off-node residual samples
  double residual_tolerance = 1e-9;   // l * max off-node residual, relative
  int max_halvings = 20;
  int iteration_cap = 400;

  static int default_degree(double eps);
  int resolved_degree() const { return degree > 0 ? degree : default_degree(tolerance); }
  void validate() const;
};

// Chebyshev points c_i = l/2 + (l/2) cos((2i-1) pi / (2d)), i = 1..d, sorted
// ascending. order[k] is the i whose node landed at position k.
struct ChebyshevNodes {
  Vector values;
  std::vector<int> order;
};
ChebyshevNodes chebyshev_nodes(int d, double ell);

// Nodes mapped to [-1, 1] with the data every curve on them needs.
struct NodeBasis {
  Vector tau;
  Matrix to_coeffs;       // node values -> Chebyshev coefficients
  Matrix unit_integral;   // int_{-1}^{tau_i} phi_j(s) ds
};
std::shared_ptr<const NodeBasis> make_basis(const Vector& tau);
// Cached basis for sorted Chebyshev nodes of degree d.
std::shared_ptr<const NodeBasis> chebyshev_basis(int d);

// M_ij = int_0^{c_i} phi_j(s) ds for distinct nodes c in [0, l].
Matrix lagrange_integral_matrix(const Vector& nodes, double ell);

// p(t) = v + int_0^t sum_j D_j phi_j(s) ds on [0, l].
class PolyCurve {
 public:
  PolyCurve(Vector v, std::shared_ptr<const NodeBasis> basis, Matrix node_derivatives, double ell);

  Vector eval(double t) const;
  Vector derivative(double t) const;
  // p(c_i), one row per node.
  Matrix node_values() const;
  Vector nodes() const;  // absolute times in [0, l]

  double length() const { return ell_; }
  int degree() const { return static_cast<int>(D_.rows()); }
  Index dim() const { return v_.size(); }
  const Vector& initial() const { return v_; }
  const Matrix& node_derivatives() const { return D_; }

 private:
  double to_tau(double t) const;

  Vector v_;
  std::shared_ptr<const NodeBasis> basis_;
  Matrix D_;
  Matrix coef_;  // Chebyshev coefficients of p', row k for T_k
  double ell_;
};

// Segments placed end to end on [0, sum of lengths].
class PiecewiseCurve {
 public:
  PiecewiseCurve() = default;
  explicit PiecewiseCurve(PolyCurve c);

  void append(PolyCurve c);
  void append(const PiecewiseCurve& other);

  Vector eval(double t) const;
  Vector derivative(double t) const;
  double length() const { return total_; }
  Vector start() const { return segs_.front().initial(); }
  Vector end() const { return eval(total_); }
  size_t segments() const { return segs_.size(); }
  const PolyCurve& segment(size_t k) const { return segs_[k]; }
  double segment_start(size_t k) const { return starts_[k]; }
  // Absolute node times of every segment, ascending.
  std::vector<double> node_times() const;

 private:
  size_t locate(double t) const;

  std::vector<PolyCurve> segs_;
  std::vector<double> starts_;
  double total_ = 0.0;
};

struct SolveReport {
  int iterations = 0;    // summed over segments
  int evaluations = 0;   // calls of F
  int halvings = 0;      // deepest subdivision level reached
  int segments = 0;
  double residual = 0.0;         // max node residual, recomputed after the solve
  double offnode_residual = 0.0; // max l * off-node residual
  std::vector<double> changes;   // node changes of the last segment
};

using FirstOrderRhs = std::function<Vector(const Vector& u, double t)>;
using SecondOrderRhs = std::function<Vector(const Vector& du, const Vector& u, double t)>;

// One interval [0, cfg.interval] on Chebyshev nodes. Throws NonContractionError.
PolyCurve collocation_first_order(const FirstOrderRhs& F, const Vector& v,
                                  const CollocationConfig& cfg, SolveReport* report = nullptr);
// Same on caller-supplied distinct nodes inside [0, cfg.interval], any order.
PolyCurve collocation_first_order(const FirstOrderRhs& F, const Vector& v, const Vector& nodes,
                                  const CollocationConfig& cfg, SolveReport* report = nullptr);

// [t0, t0 + length], halving on failure up to cfg.max_halvings times.
PiecewiseCurve collocation_adaptive(const FirstOrderRhs& F, const Vector& v, double t0,
                                    double length, const CollocationConfig& cfg,
                                    SolveReport* report = nullptr);

struct MultistepResult {
  Vector endpoint;
  PiecewiseCurve curve;
  SolveReport report;
  int steps = 0;
};
// [0, T] in ceil(T / l) steps, l = 1/(2000 L) when a Lipschitz estimate is
// given, cfg.interval otherwise. Step k targets eps * 2^-(N-k).
MultistepResult collocation_multistep(const FirstOrderRhs& F, const Vector& v, double T,
                                      const CollocationConfig& cfg,
                                      std::optional<double> lipschitz = std::nullopt);

struct SecondOrderSolution {
  PiecewiseCurve position;
  PiecewiseCurve velocity;
  SolveReport report;
};
// u'' = F(u', u, t), u(0) = v, u'(0) = w on [0, cfg.interval], with halving.
// Iterates the stacked system (u', u) with the u' block weighted by
// alpha = 4000 l in every norm.
SecondOrderSolution collocation_second_order(const SecondOrderRhs& F, const Vector& v,
                                             const Vector& w, const CollocationConfig& cfg);

Vector eval_curve(const PolyCurve& c, double t);
Vector eval_derivative(const PolyCurve& c, double t);

}  // namespace geowalk
