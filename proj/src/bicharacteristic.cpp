#include "mlq/bicharacteristic.hpp"

#include <cmath>

#include "mlq/ode.hpp"

namespace mlq {

namespace {

// One Newton correction onto {p = 0} and (optionally) {|(tau,xi)| = 1},
// along the gradient and radial directions.
void project_to_characteristic(const SymbolModel& model, Eigen::VectorXd& flat, bool cosphere) {
  PhasePoint w = PhasePoint::from_flat(flat);
  const int d = w.base_dim();
  const double g1 = model.p(w);
  Eigen::VectorXd n1 = gradient(model, w);
  if (!cosphere) {
    const double nn = n1.squaredNorm();
    if (nn < 1e-30) return;
    flat -= (g1 / nn) * n1;
    return;
  }
  const double g2 = 0.5 * (w.fiber_norm() * w.fiber_norm() - 1.0);
  Eigen::VectorXd n2 = Eigen::VectorXd::Zero(2 * (d + 1));
  n2(d + 1) = w.tau;
  n2.segment(d + 2, d) = w.xi;

  Eigen::Matrix2d G;
  G << n1.dot(n1), n1.dot(n2), n2.dot(n1), n2.dot(n2);
  Eigen::Vector2d rhs(g1, g2);
  if (std::abs(G.determinant()) < 1e-30) return;  // degenerate; leave the point alone
  Eigen::Vector2d c = G.inverse() * rhs;
  flat -= c(0) * n1 + c(1) * n2;
}

// Removes the radial fiber component, giving the induced field on the
// cosphere; arc length below is measured along the projected flow.
Eigen::VectorXd remove_radial(const Eigen::VectorXd& h, const PhasePoint& w) {
  const int d = w.base_dim();
  Eigen::VectorXd out = h;
  const double f2 = w.tau * w.tau + w.xi.squaredNorm();
  if (f2 <= 0.0) return out;
  double dot = h(d + 1) * w.tau;
  for (int i = 0; i < d; ++i) dot += h(d + 2 + i) * w.xi(i);
  const double c = dot / f2;
  out(d + 1) -= c * w.tau;
  out.segment(d + 2, d) -= c * w.xi;
  return out;
}

}  // namespace

Eigen::VectorXd normalized_gradient(const SymbolModel& model, const PhasePoint& w) {
  Eigen::VectorXd g = gradient(model, w);
  const double n = g.norm();
  if (n <= 0.0) throw DegenerateHamiltonField("normalized_gradient: |grad p| = 0");
  return g / n;
}

Bicharacteristic integrate_bicharacteristic(const SymbolModel& model, const PhasePoint& start,
                                            double length, const FlowOptions& opts) {
  if (length <= 0.0) throw ContractViolation("integrate_bicharacteristic: length must be > 0");
  if (std::abs(model.p(start)) > opts.tol_p_start)
    throw ContractViolation("integrate_bicharacteristic: start is off the characteristic set, |p| = " +
                            std::to_string(std::abs(model.p(start))));
  {
    const double hp0 = hamilton_field(model, start).norm();
    if (hp0 <= opts.degeneracy_threshold)
      throw DegenerateHamiltonField("integrate_bicharacteristic: degenerate start");
  }

  Bicharacteristic curve;
  curve.family_index = opts.family_index;
  curve.orientation = opts.orientation;
  curve.cosphere = opts.cosphere;

  const double dir = (opts.orientation >= 0) ? 1.0 : -1.0;
  const double floor_norm = 0.01 * opts.degeneracy_threshold;

  OdeRhs rhs = [&](double, const Eigen::VectorXd& flat) {
    PhasePoint w = PhasePoint::from_flat(flat);
    Eigen::VectorXd h = hamilton_field(model, w);
    if (opts.cosphere) h = remove_radial(h, w);
    const double n = h.norm();
    return Eigen::VectorXd(dir * h / std::max(n, floor_norm));
  };

  auto record = [&](double s, const Eigen::VectorXd& flat) {
    PhasePoint w = PhasePoint::from_flat(flat);
    Eigen::VectorXd h = hamilton_field(model, w);
    const double n = h.norm();  // full |H_p|, the degeneracy measure
    Eigen::VectorXd v = opts.cosphere ? remove_radial(h, w) : h;
    curve.s.push_back(s);
    curve.pts.push_back(w);
    curve.tangents.push_back(dir * v / std::max(v.norm(), floor_norm));
    curve.p_vals.push_back(model.p(w));
    curve.hp_norms.push_back(n);
    return n;
  };

  Eigen::VectorXd y = start.flat();
  project_to_characteristic(model, y, opts.cosphere);
  record(0.0, y);

  OdeOptions oo;
  oo.atol = opts.atol;
  oo.rtol = opts.rtol;
  oo.h_max = length / static_cast<double>(opts.min_samples - 1);

  OdeHook hook = [&](double s, Eigen::VectorXd& flat) {
    project_to_characteristic(model, flat, opts.cosphere);
    const double n = record(s, flat);
    if (n <= opts.degeneracy_threshold) {
      curve.truncated = true;
      return StepAction::Stop;
    }
    return StepAction::Continue;
  };

  OdeIntegrator solver(rhs, oo);
  solver.integrate(0.0, y, length, hook);
  return curve;
}

namespace {

int locate(const std::vector<double>& s, double target) {
  // index i with s[i] <= target <= s[i+1]
  int lo = 0, hi = static_cast<int>(s.size()) - 2;
  while (lo < hi) {
    int mid = (lo + hi + 1) / 2;
    if (s[mid] <= target) lo = mid; else hi = mid - 1;
  }
  return lo;
}

Eigen::VectorXd hermite(const Eigen::VectorXd& y0, const Eigen::VectorXd& y1,
                        const Eigen::VectorXd& d0, const Eigen::VectorXd& d1, double h, double u) {
  const double u2 = u * u, u3 = u2 * u;
  const double h00 = 2 * u3 - 3 * u2 + 1, h10 = u3 - 2 * u2 + u;
  const double h01 = -2 * u3 + 3 * u2, h11 = u3 - u2;
  return h00 * y0 + h * h10 * d0 + h01 * y1 + h * h11 * d1;
}

}  // namespace

PhasePoint curve_point(const Bicharacteristic& curve, double s) {
  if (curve.size() < 2) throw ContractViolation("curve_point: need at least 2 samples");
  const double s0 = curve.s.front(), s1 = curve.s.back();
  if (s < s0 - 1e-12 || s > s1 + 1e-12)
    throw ContractViolation("curve_point: arc parameter out of range");
  const int i = locate(curve.s, std::clamp(s, s0, s1));
  const double h = curve.s[i + 1] - curve.s[i];
  const double u = (s - curve.s[i]) / h;
  Eigen::VectorXd v = hermite(curve.pts[i].flat(), curve.pts[i + 1].flat(),
                              curve.tangents[i], curve.tangents[i + 1], h, u);
  return PhasePoint::from_flat(v);
}

Bicharacteristic reparametrize(const SymbolModel& model, const Bicharacteristic& curve,
                               const std::vector<double>& grid) {
  Bicharacteristic out;
  out.family_index = curve.family_index;
  out.orientation = curve.orientation;
  out.truncated = curve.truncated;
  out.cosphere = curve.cosphere;
  double prev = -std::numeric_limits<double>::infinity();
  for (double s : grid) {
    if (s < prev) throw ContractViolation("reparametrize: grid must be increasing");
    prev = s;
    PhasePoint w = curve_point(curve, s);
    Eigen::VectorXd h = hamilton_field(model, w);
    const double n = h.norm();
    Eigen::VectorXd v = curve.cosphere ? remove_radial(h, w) : h;
    out.s.push_back(s);
    out.pts.push_back(w);
    out.tangents.push_back((curve.orientation >= 0 ? 1.0 : -1.0) * v / std::max(v.norm(), 1e-300));
    out.p_vals.push_back(model.p(w));
    out.hp_norms.push_back(n);
  }
  return out;
}

FlowDerivatives derivative_along_flow(const SymbolModel& model, const Bicharacteristic& curve,
                                      const std::function<Eigen::VectorXd(const PhasePoint&)>& quantity,
                                      int order, int resample_points) {
  if (order < 0) throw ContractViolation("derivative_along_flow: order must be >= 0");
  if (resample_points <= 0) resample_points = std::max(129, curve.size());
  // order-6 central first derivative, applied `order` times; each application
  // trims 3 points per side
  const int trim = 3 * order;
  if (resample_points - 2 * trim < 5)
    throw ContractViolation("derivative_along_flow: curve too short for requested order");

  const double s0 = curve.s.front(), s1 = curve.s.back();
  const double h = (s1 - s0) / (resample_points - 1);

  Eigen::VectorXd q0 = quantity(curve.pts.front());
  const int qdim = static_cast<int>(q0.size());
  Eigen::MatrixXd Q(resample_points, qdim);
  for (int i = 0; i < resample_points; ++i) {
    PhasePoint w = curve_point(curve, s0 + i * h);
    Q.row(i) = quantity(w).transpose();
  }

  for (int pass = 0; pass < order; ++pass) {
    const int n = static_cast<int>(Q.rows());
    Eigen::MatrixXd D(n - 6, qdim);
    for (int i = 3; i < n - 3; ++i) {
      D.row(i - 3) = (-Q.row(i - 3) + 9.0 * Q.row(i - 2) - 45.0 * Q.row(i - 1) +
                      45.0 * Q.row(i + 1) - 9.0 * Q.row(i + 2) + Q.row(i + 3)) /
                     (60.0 * h);
    }
    Q = D;
  }

  FlowDerivatives out;
  out.values = Q;
  out.s.resize(Q.rows());
  for (Eigen::Index i = 0; i < Q.rows(); ++i) out.s[i] = s0 + (trim + i) * h;
  return out;
}

}  // namespace mlq
