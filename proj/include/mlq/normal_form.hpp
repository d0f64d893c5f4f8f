#pragma once

#include <complex>
#include <memory>

#include "mlq/bicharacteristic.hpp"
#include "mlq/polynomial.hpp"
#include "mlq/riccati.hpp"
#include "mlq/symbol_model.hpp"

namespace mlq {

struct Exponents {
  double epsilon = 0.1;
  double delta = 0.4;
  double rho = 0.1;
  double kappa_exp = 0.1;

  // The expansion hypothesis ties delta to epsilon; scenarios may override
  // with an explicit waiver.
  void validate(bool waiver = false) const {
    if (waiver) return;
    if (std::abs(delta - (1.0 + 2.0 * epsilon) / 3.0) > 1e-12)
      throw ContractViolation("Exponents: delta != (1 + 2 epsilon)/3 (set the waiver to override)");
    if (!(epsilon > 0.0 && epsilon < 1.0 / 7.0))
      throw ContractViolation("Exponents: need 0 < epsilon < 1/7 (set the waiver to override)");
  }
};

// Prepared normal-form data: the cosphere-scaled root symbol
// s_lambda(t, x, nu) with r(t, x, xi) = lambda s_lambda(t, x, xi/lambda),
// s = |grad s| = 0 on Gamma = {(t, 0; 0, xi0)}, plus the effective
// subprincipal coefficient q0 on Gamma and the scaling exponents.
struct PreparedModel {
  int base_dim = 1;
  Eigen::VectorXd xi0;
  double t_min = -1.0, t_max = 1.0;  // the interval I (contains 0)
  Exponents expo;

  using ScalarFn =
      std::function<double(double, const Eigen::VectorXd&, const Eigen::VectorXd&, double)>;
  using VecFn =
      std::function<Eigen::VectorXd(double, const Eigen::VectorXd&, const Eigen::VectorXd&, double)>;
  using MatFn =
      std::function<Eigen::MatrixXd(double, const Eigen::VectorXd&, const Eigen::VectorXd&, double)>;

  ScalarFn s;             // (t, x, nu, lambda)
  VecFn s_dx, s_dnu;
  MatFn s_dxx, s_dxnu, s_dnunu;  // (s_dxnu)_{ij} = d_{x_i} d_{nu_j} s

  std::function<std::complex<double>(double, double)> q0;  // (t, lambda), on Gamma

  // Per-slice polynomial form of s at fixed (t, lambda), as terms
  // coeff * x^xpow * (nu - xi0)^nupow; drives the discrete quantization of
  // the direct backend.  Null when no polynomial form is available.
  struct SliceTerm {
    double coeff;
    int xpow;
    int nupow;
  };
  std::function<std::vector<SliceTerm>(double, double)> slice_table;

  bool straightened = false;  // d_x^2 s(t,0,xi0) == 0 is known to hold

  double interval_length() const { return t_max - t_min; }
};

// Table-driven construction; validates that every term vanishes to second
// order at Gamma (total degree >= 2 in (x, nu - xi0)).
PreparedModel prepared_from_graded(int base_dim, const Eigen::VectorXd& xi0, double t_min,
                                   double t_max, const Exponents& expo, const GradedPolyR& s_table,
                                   const GradedPolyC& q0_table, bool exponent_waiver = false);

struct TauRootOptions {
  double tol = 1e-12;
  int max_iter = 50;
  double dtau_floor = 1e-8;  // |dp/dtau| below this is a branch degeneracy
};

// Newton iteration for the tau-root of p(t, x, ., xi) from the seed.
double tau_root_solve(const SymbolModel& model, double t, const Eigen::VectorXd& x,
                      const Eigen::VectorXd& xi, double seed, const TauRootOptions& opts = {});

// Continuation along a path of (t, x, xi): each root seeds the next solve.
std::vector<double> tau_root_path(const SymbolModel& model,
                                  const std::vector<std::tuple<double, Eigen::VectorXd, Eigen::VectorXd>>& path,
                                  double seed0, const TauRootOptions& opts = {});

// Prepared model from a symbol that is solvable for tau near the seed branch;
// first derivatives by implicit differentiation, second by differences.
PreparedModel prepared_from_symbol(const SymbolModel& model, const Eigen::VectorXd& xi0,
                                   double t_min, double t_max, const Exponents& expo,
                                   double tau_seed = 0.0);

// q0(t) = D_t |grad_h p| / (2 |grad_h p|) + p0 / |grad_h p| sampled along the
// curve (D_t by central differencing along the flow).
struct Q0Samples {
  std::vector<double> t;
  std::vector<std::complex<double>> values;
};
Q0Samples q0_normalform(const SymbolModel& model, const Bicharacteristic& curve,
                        const HomGradOptions& hopts = {});

// lambda = kappa^{-1/epsilon}
double lambda_from_kappa(double kappa, double epsilon);

// Second derivatives of s at Gamma as Riccati coefficient functions.
QuadraticCoefficients riccati_coefficients(const PreparedModel& pm, double lambda);

// Applies the quadratic-phase straightening so that d_x^2 s(t, 0, xi0) == 0:
// s~(t,x,nu) = s(t, x, nu + A(t) x) - <A'(t) x, x>/2 with A the grazing
// Riccati solution, A(0) = 0.
PreparedModel straighten(const PreparedModel& pm, double lambda);

// Cosphere symbol p = kappa_mult (tau - s_lambda(t,x,xi)) with subprincipal
// kappa_mult q0; used to run flow diagnostics on prepared scenarios.
SymbolModel prepared_symbol_model(const PreparedModel& pm, double lambda, double kappa_mult = 1.0);

}  // namespace mlq
