#pragma once

#include <Eigen/Dense>
#include <complex>
#include <functional>
#include <optional>
#include <vector>

#include "mlq/phase_point.hpp"
#include "mlq/polynomial.hpp"

namespace mlq {

// Evaluator bundle for a principal symbol p, its subprincipal symbol p0, and
// (optionally) analytic derivatives of p.  Immutable after construction; all
// evaluators are pure, so concurrent evaluation is safe.
//
// Derivative layout follows PhasePoint::flat(): (t, x[0..d), tau, xi[0..d)).
struct SymbolModel {
  int base_dim = 1;                  // d = n - 1
  double homogeneity_degree = 1.0;   // degree m of p in the fiber

  std::function<double(const PhasePoint&)> p;
  std::function<std::complex<double>(const PhasePoint&)> p0;

  // Optional analytic derivatives; finite differences are used when absent.
  std::function<Eigen::VectorXd(const PhasePoint&)> grad;                // 2n
  std::function<Eigen::MatrixXd(const PhasePoint&)> hess;                // 2n x 2n
  std::function<std::vector<Eigen::MatrixXd>(const PhasePoint&)> third;  // slice k = d(Hess)/dz_k

  int dim() const { return base_dim + 1; }
  bool has_analytic() const { return static_cast<bool>(grad); }
};

double eval_principal(const SymbolModel& model, const PhasePoint& w);
std::complex<double> eval_subprincipal(const SymbolModel& model, const PhasePoint& w);

// Central finite differences with scale-aware step h = eps_mach^{1/3} * max(1, |w|).
Eigen::VectorXd fd_gradient(const std::function<double(const PhasePoint&)>& f, const PhasePoint& w);
Eigen::MatrixXd fd_hessian(const std::function<double(const PhasePoint&)>& f, const PhasePoint& w);

Eigen::VectorXd gradient(const SymbolModel& model, const PhasePoint& w);
Eigen::MatrixXd hessian(const SymbolModel& model, const PhasePoint& w);

// H_p = (dp/dtau, dp/dxi, -dp/dt, -dp/dx) in flat (t, x, tau, xi) slots.
Eigen::VectorXd hamilton_field(const SymbolModel& model, const PhasePoint& w);
Eigen::VectorXd hamilton_field_from_grad(const Eigen::VectorXd& grad);

// |H_p|^{-1} H_p; throws DegenerateHamiltonField below the threshold.
Eigen::VectorXd normalized_hamilton_field(const SymbolModel& model, const PhasePoint& w,
                                          double degeneracy_threshold = 1e-12);

struct HomGradOptions {
  // Whether |xi| in the homogeneous-gradient weight means the full fiber
  // norm |(tau,xi)| (default) or the xi-part only.
  bool full_fiber = true;
};

// sqrt(|d_{(t,x)} p|^2 / F^2 + |d_{(tau,xi)} p|^2) with F the fiber norm.
double homogeneous_gradient_norm(const SymbolModel& model, const PhasePoint& w,
                                 const HomGradOptions& opts = {});

// --- Built-in families ---------------------------------------------------

enum class Q2Case { MinusEta1Sq, Y1Eta1, Eta1Eta2 };

// Generic polynomial symbol over flat variables (t, x, tau, xi); exact
// derivatives to third order.
SymbolModel symbol_from_polynomial(int base_dim, const PolyR& p, const PolyC& p0,
                                   double homogeneity_degree = 1.0);

// p = tau - r(t, x, xi) with r a polynomial in flat variables (tau-power 0).
SymbolModel symbol_tau_minus_r(int base_dim, const PolyR& r, const PolyC& p0);

// Hyperbolic quadratic normal form Q1(x,xi) + Q2(y,eta):
//   Q1 = sum_j mu_j (x_j^2 + xi_j^2) + sum over line modes xi_j^2,  mu_j > 0.
// Base slots are ordered circle modes, line modes, then the y-block of Q2.
SymbolModel symbol_quadratic_hyperbolic(const std::vector<double>& mu, int line_modes,
                                        Q2Case q2, double mu0, const PolyC& p0);

// p = product of real factor symbols.
SymbolModel symbol_product(int base_dim, const std::vector<PolyR>& factors, const PolyC& p0);

// p = w1^k - a(w') with w1 = tau by default (var index in flat layout).
SymbolModel symbol_root(int base_dim, int k, const PolyR& a, const PolyC& p0, int w1_var = -1);

// Helpers for building flat-variable polynomials.
namespace vars {
inline int t_var(int) { return 0; }
inline int x_var(int /*d*/, int i) { return 1 + i; }
inline int tau_var(int d) { return d + 1; }
inline int xi_var(int d, int i) { return d + 2 + i; }
inline std::vector<int> zero(int d) { return std::vector<int>(2 * (d + 1), 0); }
}  // namespace vars

}  // namespace mlq
