#include "mlq/transport.hpp"

#include <omp.h>

#include <cmath>

#include "mlq/ode.hpp"

namespace mlq {

namespace {

int anchor_index(const std::vector<double>& t_grid) {
  for (size_t i = 0; i < t_grid.size(); ++i)
    if (std::abs(t_grid[i]) < 1e-12) return static_cast<int>(i);
  throw ContractViolation("transport: the time grid must contain t = 0");
}

// cumulative integral on a uniform grid (composite Simpson on pairs, cubic
// half-rule on the odd offsets)
template <typename Scalar>
std::vector<Scalar> cumulative(const std::vector<Scalar>& f, double h) {
  const int n = static_cast<int>(f.size());
  std::vector<Scalar> F(n, Scalar(0));
  for (int i = 2; i < n; i += 2)
    F[i] = F[i - 2] + (h / 3.0) * (f[i - 2] + 4.0 * f[i - 1] + f[i]);
  for (int i = 1; i < n; i += 2) {
    if (i + 1 < n)
      F[i] = F[i - 1] + (h / 12.0) * (5.0 * f[i - 1] + 8.0 * f[i] - f[i + 1]);
    else
      F[i] = F[i - 1] + (h / 12.0) * (-f[i - 2] + 8.0 * f[i - 1] + 5.0 * f[i]);
  }
  return F;
}

double smoothstep(double u) {
  // exp-profile step: 0 for u <= 0, 1 for u >= 1
  if (u <= 0.0) return 0.0;
  if (u >= 1.0) return 1.0;
  const double a = std::exp(-1.0 / u);
  const double b = std::exp(-1.0 / (1.0 - u));
  return a / (a + b);
}

}  // namespace

double bump_profile(double u) {
  const double u2 = u * u;
  if (u2 >= 1.0) return 0.0;
  return std::exp(1.0 - 1.0 / (1.0 - u2));
}

double Cutoff::operator()(double t) const {
  if (!active) return 1.0;
  if (t <= t_lo || t >= t_hi) return 0.0;
  const double up = (t - t_lo) / width;
  const double dn = (t_hi - t) / width;
  double v = 1.0;
  if (up < 1.0) v *= smoothstep(up);
  if (dn < 1.0) v *= smoothstep(dn);
  return v;
}

double Cutoff::max_slope() const {
  // max |S'| of the exp-profile step is 2 (attained at the midpoint)
  return 2.0 / width;
}

Cutoff cutoff_chi(double t_lo, double t_hi, double kappa, double lambda) {
  if (!(t_hi > t_lo)) throw CutoffPlacementError("cutoff_chi: empty interval");
  if (!(kappa > 0.0)) throw CutoffPlacementError("cutoff_chi: bad kappa");
  if (kappa >= (t_hi - t_lo))
    throw CutoffPlacementError("cutoff_chi: endpoint intervals (length ~ kappa) cover I");
  Cutoff chi;
  chi.t_lo = t_lo;
  chi.t_hi = t_hi;
  chi.width = std::min(kappa, 0.15 * 0.5 * (t_hi - t_lo));
  if (!(0.0 > t_lo + chi.width && 0.0 < t_hi - chi.width))
    throw CutoffPlacementError("cutoff_chi: t = 0 is not inside the flat region");
  (void)lambda;
  return chi;
}

Eigen::VectorXcd compute_B(const Eigen::VectorXcd& q0_samples, const std::vector<double>& t_grid) {
  const int n = static_cast<int>(t_grid.size());
  if (static_cast<int>(q0_samples.size()) != n)
    throw ContractViolation("compute_B: size mismatch");
  const int i0 = anchor_index(t_grid);
  const double h = t_grid[1] - t_grid[0];
  std::vector<cplx> f(n);
  for (int i = 0; i < n; ++i) f[i] = q0_samples(i);
  auto F = cumulative(f, h);
  Eigen::VectorXcd B(n);
  for (int i = 0; i < n; ++i) B(i) = F[i] - F[i0];
  return B;
}

Straightening straighten_Dp(const PreparedModel& pm, double lambda,
                            const std::vector<double>& t_grid, double cond_limit) {
  const int d = pm.base_dim;
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(d);

  auto a_at = [&](double t) {
    // a_{jk} = -d_{x_k} d_{nu_j} s = -(s_dxnu)^T
    return Eigen::MatrixXd(-pm.s_dxnu(t, zero, pm.xi0, lambda).transpose());
  };

  Straightening out;
  out.ts = t_grid;
  const int n = static_cast<int>(t_grid.size());
  out.Y.assign(n, Eigen::MatrixXd::Identity(d, d));
  out.Yinv.assign(n, Eigen::MatrixXd::Identity(d, d));

  // quick exit for the common a == 0 case
  bool all_zero = true;
  for (double t : {t_grid.front(), 0.5 * (t_grid.front() + t_grid.back()), t_grid.back()})
    if (a_at(t).norm() > 0.0) all_zero = false;
  if (all_zero) return out;
  out.identity = false;

  auto pack = [d](const Eigen::MatrixXd& M) {
    return Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(M.data(), d * d));
  };
  auto unpack = [d](const Eigen::VectorXd& v) {
    return Eigen::MatrixXd(Eigen::Map<const Eigen::MatrixXd>(v.data(), d, d));
  };

  OdeRhs rhs = [&](double t, const Eigen::VectorXd& y) {
    return pack(a_at(t) * unpack(y));
  };
  OdeOptions oo;
  oo.atol = 1e-13;
  oo.rtol = 1e-13;
  OdeIntegrator solver(rhs, oo);

  const int i0 = anchor_index(t_grid);
  // forward from 0
  Eigen::VectorXd y = pack(Eigen::MatrixXd::Identity(d, d));
  double t = 0.0;
  for (int i = i0; i < n; ++i) {
    if (t_grid[i] != t) solver.integrate(t, y, t_grid[i]);
    t = t_grid[i];
    out.Y[i] = unpack(y);
  }
  // backward from 0
  y = pack(Eigen::MatrixXd::Identity(d, d));
  t = 0.0;
  for (int i = i0; i >= 0; --i) {
    if (t_grid[i] != t) solver.integrate(t, y, t_grid[i]);
    t = t_grid[i];
    out.Y[i] = unpack(y);
  }
  for (int i = 0; i < n; ++i) {
    Eigen::FullPivLU<Eigen::MatrixXd> lu(out.Y[i]);
    if (!lu.isInvertible())
      throw ConditioningError("straighten_Dp: Y(t) is singular");
    out.Yinv[i] = lu.inverse();
    if (out.Y[i].norm() > cond_limit || out.Yinv[i].norm() > cond_limit)
      throw ConditioningError("straighten_Dp: ||Y|| or ||Y^-1|| exceeds the conditioning limit");
  }
  return out;
}

Eigen::MatrixXcd solve_phi0(const Eigen::VectorXcd& B, const Straightening& Y,
                            const std::vector<double>& t_grid, const Eigen::VectorXd& x_grid,
                            double lam_delta) {
  const int nt = static_cast<int>(t_grid.size());
  const int nx = static_cast<int>(x_grid.size());
  if (static_cast<int>(B.size()) != nt || static_cast<int>(Y.ts.size()) != nt)
    throw ContractViolation("solve_phi0: grid mismatch");
  Eigen::MatrixXcd phi(nt, nx);
  const cplx I(0.0, 1.0);
#pragma omp parallel for schedule(static)
  for (int it = 0; it < nt; ++it) {
    const cplx decay = std::exp(-I * B(it));
    for (int jx = 0; jx < nx; ++jx) {
      double ys;
      if (Y.identity) ys = x_grid(jx);
      else ys = (Y.inv_at(it) * Eigen::VectorXd::Constant(1, x_grid(jx)))(0);
      phi(it, jx) = bump_profile(lam_delta * ys) * decay;
    }
  }
  return phi;
}

Eigen::MatrixXcd solve_phik(const Eigen::VectorXcd& B, const Eigen::MatrixXcd& Rk,
                            const std::vector<double>& t_grid, int k, double lambda, double rho) {
  const int nt = static_cast<int>(t_grid.size());
  const int nx = static_cast<int>(Rk.cols());
  if (Rk.rows() != nt || static_cast<int>(B.size()) != nt)
    throw ContractViolation("solve_phik: grid mismatch");
  const double h = t_grid[1] - t_grid[0];
  const int i0 = anchor_index(t_grid);
  const double scale = std::pow(lambda, k * rho);
  const cplx I(0.0, 1.0);

  Eigen::MatrixXcd phi(nt, nx);
#pragma omp parallel for schedule(static)
  for (int jx = 0; jx < nx; ++jx) {
    std::vector<cplx> f(nt);
    for (int it = 0; it < nt; ++it) f[it] = I * scale * Rk(it, jx);
    auto F = cumulative(f, h);
    for (int it = 0; it < nt; ++it)
      phi(it, jx) = std::exp(-I * B(it)) * (F[it] - F[i0]);
  }
  return phi;
}

}  // namespace mlq
