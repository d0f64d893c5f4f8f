#pragma once

#include <Eigen/Dense>

#include "mlq/errors.hpp"

namespace mlq {

// A point (t, x; tau, xi) of phase space, n = 1 + dim(x) >= 2.
// Flat layout used throughout: (t, x[0..d), tau, xi[0..d)).
struct PhasePoint {
  double t = 0.0;
  Eigen::VectorXd x;
  double tau = 0.0;
  Eigen::VectorXd xi;

  PhasePoint() = default;
  PhasePoint(double t, Eigen::VectorXd x, double tau, Eigen::VectorXd xi)
      : t(t), x(std::move(x)), tau(tau), xi(std::move(xi)) {
    if (this->x.size() != this->xi.size())
      throw ContractViolation("PhasePoint: dim(x) != dim(xi)");
    if (this->x.size() < 1)
      throw ContractViolation("PhasePoint: need base dimension >= 1 (n >= 2)");
  }

  // 1-d convenience
  PhasePoint(double t, double x1, double tau, double xi1)
      : PhasePoint(t, Eigen::VectorXd::Constant(1, x1), tau, Eigen::VectorXd::Constant(1, xi1)) {}

  int base_dim() const { return static_cast<int>(x.size()); }
  int dim() const { return base_dim() + 1; }  // n

  double fiber_norm() const { return std::sqrt(tau * tau + xi.squaredNorm()); }

  Eigen::VectorXd flat() const {
    const int d = base_dim();
    Eigen::VectorXd v(2 * (d + 1));
    v(0) = t;
    v.segment(1, d) = x;
    v(d + 1) = tau;
    v.segment(d + 2, d) = xi;
    return v;
  }

  static PhasePoint from_flat(const Eigen::VectorXd& v) {
    const int n2 = static_cast<int>(v.size());
    if (n2 % 2 != 0 || n2 < 4) throw ContractViolation("PhasePoint::from_flat: bad size");
    const int d = n2 / 2 - 1;
    return PhasePoint(v(0), v.segment(1, d), v(d + 1), v.segment(d + 2, d));
  }
};

// A conic ray: base point (t, x) and a fiber direction (tau, xi) != 0.
struct Ray {
  double t = 0.0;
  Eigen::VectorXd x;
  double tau_dir = 0.0;
  Eigen::VectorXd xi_dir;

  int base_dim() const { return static_cast<int>(x.size()); }
  double dir_norm() const { return std::sqrt(tau_dir * tau_dir + xi_dir.squaredNorm()); }
};

// Distance from w to the ray {(ray.t, ray.x; rho * dir) : rho > 0} in the
// homogeneous metric dt^2 + |dx|^2 + (dtau^2 + |dxi|^2) / <(tau,xi)>^2,
// with the fiber weight evaluated at the ray point.  Minimized over the ray
// parameter with a Newton/bisection hybrid.
double homogeneous_distance(const PhasePoint& w, const Ray& ray);

}  // namespace mlq
