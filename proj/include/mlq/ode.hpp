#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>

#include "mlq/errors.hpp"

namespace mlq {

// Embedded adaptive Runge-Kutta of order 5(4), Dormand-Prince coefficients.
struct OdeOptions {
  double atol = 1e-12;
  double rtol = 1e-12;
  double h_max = std::numeric_limits<double>::infinity();
  long max_steps = 2'000'000;
};

enum class StepAction { Continue, Stop };

using OdeRhs = std::function<Eigen::VectorXd(double, const Eigen::VectorXd&)>;
// Called after each accepted step; may modify the state in place (projection).
using OdeHook = std::function<StepAction(double, Eigen::VectorXd&)>;

namespace detail {

struct Dp5Tableau {
  static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                          a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                          a64 = 49.0 / 176, a65 = -5103.0 / 18656;
  static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                          b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                          e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
};

}  // namespace detail

class OdeIntegrator {
 public:
  explicit OdeIntegrator(OdeRhs rhs, OdeOptions opts = {}) : rhs_(std::move(rhs)), opts_(opts) {}

  // Integrates from (t0, y0) to t1 (either direction).  The hook, when given,
  // runs after each accepted step and may stop the integration early.
  // Returns the reached time (== t1 unless the hook stopped).
  double integrate(double t0, Eigen::VectorXd& y, double t1, const OdeHook& hook = nullptr) const {
    using T = detail::Dp5Tableau;
    if (t1 == t0) return t0;
    const double dir = (t1 > t0) ? 1.0 : -1.0;
    double t = t0;
    double h = dir * std::min(opts_.h_max, std::abs(t1 - t0) / 16.0);
    Eigen::VectorXd k1 = rhs_(t, y), k2, k3, k4, k5, k6, k7;
    Eigen::VectorXd ytmp, y5;

    for (long step = 0; step < opts_.max_steps; ++step) {
      if (dir * (t + h - t1) > 0.0) h = t1 - t;
      ytmp = y + h * (T::a21 * k1);
      k2 = rhs_(t + T::c2 * h, ytmp);
      ytmp = y + h * (T::a31 * k1 + T::a32 * k2);
      k3 = rhs_(t + T::c3 * h, ytmp);
      ytmp = y + h * (T::a41 * k1 + T::a42 * k2 + T::a43 * k3);
      k4 = rhs_(t + T::c4 * h, ytmp);
      ytmp = y + h * (T::a51 * k1 + T::a52 * k2 + T::a53 * k3 + T::a54 * k4);
      k5 = rhs_(t + T::c5 * h, ytmp);
      ytmp = y + h * (T::a61 * k1 + T::a62 * k2 + T::a63 * k3 + T::a64 * k4 + T::a65 * k5);
      k6 = rhs_(t + h, ytmp);
      y5 = y + h * (T::b1 * k1 + T::b3 * k3 + T::b4 * k4 + T::b5 * k5 + T::b6 * k6);
      k7 = rhs_(t + h, y5);

      const Eigen::VectorXd err =
          h * (T::e1 * k1 + T::e3 * k3 + T::e4 * k4 + T::e5 * k5 + T::e6 * k6 + T::e7 * k7);
      double en = 0.0;
      for (Eigen::Index i = 0; i < err.size(); ++i) {
        const double sc = opts_.atol + opts_.rtol * std::max(std::abs(y(i)), std::abs(y5(i)));
        const double q = err(i) / sc;
        en += q * q;
      }
      en = std::sqrt(en / static_cast<double>(err.size()));

      if (en <= 1.0) {
        t += h;
        y = y5;
        k1 = k7;  // FSAL
        if (hook) {
          if (hook(t, y) == StepAction::Stop) return t;
          k1 = rhs_(t, y);  // state may have been projected
        }
        if (t == t1 || dir * (t - t1) >= 0.0) return t;
      }
      const double fac = std::clamp(0.9 * std::pow(std::max(en, 1e-16), -0.2), 0.2, 5.0);
      h *= fac;
      if (std::abs(h) > opts_.h_max) h = dir * opts_.h_max;
      if (!(std::abs(h) > 0.0) || t + h == t)
        throw std::runtime_error("OdeIntegrator: step size underflow");
    }
    throw std::runtime_error("OdeIntegrator: max step count exceeded");
  }

 private:
  OdeRhs rhs_;
  OdeOptions opts_;
};

// Convenience: integrate and return states at each requested output time.
inline std::vector<Eigen::VectorXd> integrate_at(const OdeRhs& rhs, double t0,
                                                 const Eigen::VectorXd& y0,
                                                 const std::vector<double>& ts,
                                                 const OdeOptions& opts = {}) {
  OdeIntegrator solver(rhs, opts);
  std::vector<Eigen::VectorXd> out;
  out.reserve(ts.size());
  Eigen::VectorXd y = y0;
  double t = t0;
  for (double target : ts) {
    if (target != t) solver.integrate(t, y, target);
    t = target;
    out.push_back(y);
  }
  return out;
}

}  // namespace mlq
