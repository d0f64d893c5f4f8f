#include "mlq/phase_point.hpp"

#include <cmath>

namespace mlq {

namespace {

// Squared distance as a function of the ray parameter rho.
// base part is constant; fiber part |v - rho u|^2 / (1 + rho^2 |u|^2).
struct RayObjective {
  double base2;
  double v2, vu, u2;  // |v|^2, <v,u>, |u|^2

  double fiber2(double rho) const {
    const double num = v2 - 2.0 * rho * vu + rho * rho * u2;
    return num / (1.0 + rho * rho * u2);
  }
  double value(double rho) const { return base2 + fiber2(rho); }
  double dfiber(double rho) const {
    const double den = 1.0 + rho * rho * u2;
    const double num = v2 - 2.0 * rho * vu + rho * rho * u2;
    const double dnum = -2.0 * vu + 2.0 * rho * u2;
    const double dden = 2.0 * rho * u2;
    return (dnum * den - num * dden) / (den * den);
  }
};

}  // namespace

double homogeneous_distance(const PhasePoint& w, const Ray& ray) {
  if (ray.base_dim() != w.base_dim())
    throw ContractViolation("homogeneous_distance: dimension mismatch");
  if (ray.dir_norm() <= 0.0)
    throw ContractViolation("homogeneous_distance: zero fiber direction");

  RayObjective f;
  {
    const double dt = w.t - ray.t;
    f.base2 = dt * dt + (w.x - ray.x).squaredNorm();
    Eigen::VectorXd v(w.base_dim() + 1), u(w.base_dim() + 1);
    v(0) = w.tau;
    v.tail(w.base_dim()) = w.xi;
    u(0) = ray.tau_dir;
    u.tail(w.base_dim()) = ray.xi_dir;
    f.v2 = v.squaredNorm();
    f.vu = v.dot(u);
    f.u2 = u.squaredNorm();
  }

  // Bracket the minimizer.  The Euclidean-weight minimizer <v,u>/|u|^2 is a
  // good seed; the weighted objective stays unimodal on [0, rho_hi].
  double lo = 0.0;
  double hi = std::max(4.0 * std::abs(f.vu) / f.u2, 4.0 * std::sqrt(f.v2 / f.u2)) + 1.0;
  double rho = std::max(f.vu / f.u2, 1e-12);

  for (int it = 0; it < 80; ++it) {
    const double g = f.dfiber(rho);
    // numeric second derivative for the Newton step
    const double h = std::max(1e-6, 1e-6 * rho);
    const double g2 = (f.dfiber(rho + h) - f.dfiber(rho - h)) / (2.0 * h);
    double step = (g2 > 0.0) ? -g / g2 : 0.0;
    double next = rho + step;
    if (!(next > lo) || !(next < hi) || step == 0.0) next = 0.5 * (lo + hi);  // bisection fallback
    if (f.dfiber(next) > 0.0) hi = next; else lo = next;
    if (std::abs(next - rho) < 1e-14 * (1.0 + rho)) { rho = next; break; }
    rho = next;
  }
  rho = std::max(rho, 0.0);
  const double at_rho = f.value(rho);
  const double at_zero = f.base2 + f.v2;  // rho -> 0 boundary
  return std::sqrt(std::min(at_rho, at_zero));
}

}  // namespace mlq
