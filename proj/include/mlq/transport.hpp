#pragma once

#include <Eigen/Dense>
#include <complex>

#include "mlq/normal_form.hpp"

namespace mlq {

using cplx = std::complex<double>;

// C-infinity bump profile, phi(0) = 1, support |u| < 1.
double bump_profile(double u);

// Time cutoff: 1 on the inner region of I, smooth transition to 0 within the
// endpoint intervals (length ~ kappa = lambda^{-eps}, capped at a fixed
// fraction of I).
struct Cutoff {
  double t_lo = -1.0, t_hi = 1.0;
  double width = 0.1;
  bool active = true;  // false: chi == 1 everywhere

  double operator()(double t) const;
  double max_slope() const;  // max |chi'|
};

Cutoff cutoff_chi(double t_lo, double t_hi, double kappa, double lambda);

// Antiderivative of q0 anchored at B(0) = 0, by cumulative composite Simpson
// on a uniform grid that contains t = 0.
Eigen::VectorXcd compute_B(const Eigen::VectorXcd& q0_samples, const std::vector<double>& t_grid);

// Straightening change of variables x = Y(t) y with Y' = a(t) Y, Y(0) = Id,
// a_{jk}(t) = -d_{x_k} d_{nu_j} s(t, 0, xi0).
struct Straightening {
  std::vector<double> ts;
  std::vector<Eigen::MatrixXd> Y, Yinv;
  bool identity = true;  // true when a == 0 (no resampling needed)

  const Eigen::MatrixXd& at(int node) const { return Y[node]; }
  const Eigen::MatrixXd& inv_at(int node) const { return Yinv[node]; }
};

Straightening straighten_Dp(const PreparedModel& pm, double lambda,
                            const std::vector<double>& t_grid, double cond_limit = 1e6);

// Leading amplitude phi0(t, x) = phi(lam^delta Y(t)^{-1} x) exp(-i B(t)) on
// the tensor grid (row = t node, column = x node).
Eigen::MatrixXcd solve_phi0(const Eigen::VectorXcd& B, const Straightening& Y,
                            const std::vector<double>& t_grid, const Eigen::VectorXd& x_grid,
                            double lam_delta);

// Correction amplitude: solves D_t phihat = lambda^{k rho} R_k per x-gridline
// with phihat(0, .) = 0 and returns phi_k = exp(-i B) phihat.  R_k are the
// stripped residual samples of the previous partial sum, premultiplied by
// exp(+iB) (see the quasimode hierarchy).
Eigen::MatrixXcd solve_phik(const Eigen::VectorXcd& B, const Eigen::MatrixXcd& Rk,
                            const std::vector<double>& t_grid, int k, double lambda, double rho);

}  // namespace mlq
