#include "mlq/eikonal.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>

#include "mlq/ode.hpp"

namespace mlq {

namespace {

Eigen::VectorXd lobatto_nodes(int n, double radius) {
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) y(i) = -radius * std::cos(M_PI * i / (n - 1));
  return y;
}

Eigen::VectorXd lobatto_weights(int n) {
  Eigen::VectorXd w(n);
  for (int i = 0; i < n; ++i) {
    w(i) = (i % 2 == 0) ? 1.0 : -1.0;
    if (i == 0 || i == n - 1) w(i) *= 0.5;
  }
  return w;
}

// differentiation matrix for the Lobatto nodes
Eigen::MatrixXd diff_matrix(const Eigen::VectorXd& y, const Eigen::VectorXd& w) {
  const int n = static_cast<int>(y.size());
  Eigen::MatrixXd D(n, n);
  for (int i = 0; i < n; ++i) {
    double diag = 0.0;
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      D(i, j) = (w(j) / w(i)) / (y(i) - y(j));
      diag -= D(i, j);
    }
    D(i, i) = diag;
  }
  return D;
}

double bary_eval(const Eigen::VectorXd& y, const Eigen::VectorXd& wts, const Eigen::VectorXd& f,
                 double yq) {
  const int n = static_cast<int>(y.size());
  double num = 0.0, den = 0.0;
  for (int i = 0; i < n; ++i) {
    const double d = yq - y(i);
    if (std::abs(d) < 1e-300) return f(i);
    const double c = wts(i) / d;
    num += c * f(i);
    den += c;
  }
  return num / den;
}

}  // namespace

CharacteristicFan solve_characteristics(const PreparedModel& pm, double lambda,
                                        const std::vector<double>& t_nodes,
                                        const EikonalOptions& opts) {
  if (pm.base_dim != 1)
    throw ContractViolation("solve_characteristics: only base dimension 1 is supported");
  if (t_nodes.size() < 2) throw ContractViolation("solve_characteristics: need t nodes");

  const double eps = pm.expo.epsilon;
  const double sy = std::pow(lambda, 3.0 * eps);   // x -> y scale
  const double se = std::pow(lambda, 4.0 * eps);   // dnu -> eta scale
  const double sw = std::pow(lambda, 7.0 * eps);   // omega -> w scale
  const double xi0 = pm.xi0(0);

  CharacteristicFan fan;
  fan.lambda = lambda;
  fan.expo = pm.expo;
  fan.domain_radius = opts.domain_c * std::pow(lambda, -3.0 * eps);
  fan.t_nodes = t_nodes;
  fan.y0 = lobatto_nodes(opts.fan_nodes, opts.domain_c);

  const int nf = opts.fan_nodes;
  const int nt = static_cast<int>(t_nodes.size());
  fan.y.assign(nt, Eigen::VectorXd::Zero(nf));
  fan.eta.assign(nt, Eigen::VectorXd::Zero(nf));
  fan.w.assign(nt, Eigen::VectorXd::Zero(nf));

  // split the output nodes around t = 0 (characteristic data lives there)
  std::vector<double> fwd, bwd;
  std::vector<int> fwd_idx, bwd_idx;
  for (int i = 0; i < nt; ++i) {
    if (t_nodes[i] >= 0.0) { fwd.push_back(t_nodes[i]); fwd_idx.push_back(i); }
    else { bwd.push_back(t_nodes[i]); bwd_idx.push_back(i); }
  }
  std::reverse(bwd.begin(), bwd.end());
  std::reverse(bwd_idx.begin(), bwd_idx.end());

  const double y_cut = opts.safety * opts.domain_c;
  std::vector<char> trunc(nf, 0);

#pragma omp parallel for schedule(static)
  for (int k = 0; k < nf; ++k) {
    OdeRhs rhs = [&](double t, const Eigen::VectorXd& z) {
      Eigen::VectorXd x(1), nu(1);
      x(0) = z(0) / sy;
      nu(0) = xi0 + z(1) / se;
      const double sv = pm.s(t, x, nu, lambda);
      const double sdn = pm.s_dnu(t, x, nu, lambda)(0);
      const double sdx = pm.s_dx(t, x, nu, lambda)(0);
      Eigen::VectorXd dz(3);
      dz(0) = -sy * sdn;
      dz(1) = se * sdx;
      // d omega/dt = s + xdot . dnu along the characteristic
      dz(2) = sw * (sv - (z(1) / se) * sdn);
      return dz;
    };
    OdeOptions oo;
    oo.atol = opts.atol;
    oo.rtol = opts.rtol;
    OdeIntegrator solver(rhs, oo);

    for (int dir = 0; dir < 2; ++dir) {
      const auto& targets = (dir == 0) ? fwd : bwd;
      const auto& idx = (dir == 0) ? fwd_idx : bwd_idx;
      Eigen::VectorXd z(3);
      z << fan.y0(k), 0.0, 0.0;
      double t = 0.0;
      for (size_t q = 0; q < targets.size(); ++q) {
        bool stopped = false;
        OdeHook hook = [&](double, Eigen::VectorXd& zz) {
          if (std::abs(zz(0)) > y_cut) { stopped = true; return StepAction::Stop; }
          return StepAction::Continue;
        };
        if (targets[q] != t) solver.integrate(t, z, targets[q], hook);
        t = targets[q];
        if (stopped) { trunc[k] = 1; break; }
        fan.y[idx[q]](k) = z(0);
        fan.eta[idx[q]](k) = z(1);
        fan.w[idx[q]](k) = z(2);
      }
    }
  }
  for (int k = 0; k < nf; ++k) fan.truncated |= (trunc[k] != 0);
  return fan;
}

EikonalSolution::EikonalSolution(const PreparedModel& pm, CharacteristicFan fan,
                                 EikonalOptions opts)
    : pm_(pm), fan_(std::move(fan)), opts_(opts) {
  const int nf = static_cast<int>(fan_.y0.size());
  bary_w_ = lobatto_weights(nf);
  diff_ = diff_matrix(fan_.y0, bary_w_);
  slices_.resize(fan_.t_nodes.size());
  for (size_t it = 0; it < fan_.t_nodes.size(); ++it) {
    slices_[it].y = fan_.y[it];
    slices_[it].eta = fan_.eta[it];
    slices_[it].w = fan_.w[it];
    slices_[it].dy = diff_ * fan_.y[it];
    for (int k = 0; k < nf; ++k) {
      if (slices_[it].dy(k) < opts_.caustic_floor)
        throw CausticError("eikonal: characteristic Jacobian fell below the caustic floor",
                           fan_.t_nodes[it], fan_.y0(k));
    }
  }
}

double EikonalSolution::invert(int it, double yq) const {
  const Slice& sl = slices_[it];
  double y0 = yq;  // near-identity map
  for (int iter = 0; iter < 50; ++iter) {
    const double f = bary_eval(fan_.y0, bary_w_, sl.y, y0) - yq;
    const double j = bary_eval(fan_.y0, bary_w_, sl.dy, y0);
    if (j < opts_.caustic_floor)
      throw CausticError("eikonal: Jacobian degenerate during inversion", fan_.t_nodes[it], y0);
    const double step = f / j;
    y0 -= step;
    if (std::abs(step) <= 1e-15 * std::max(1.0, std::abs(y0))) break;
  }
  return y0;
}

double EikonalSolution::omega_at(int it, double x) const {
  const double eps = fan_.expo.epsilon;
  const double yq = x * std::pow(fan_.lambda, 3.0 * eps);
  const double y0 = invert(it, yq);
  const double w = bary_eval(fan_.y0, bary_w_, slices_[it].w, y0);
  return w * std::pow(fan_.lambda, -7.0 * eps);
}

double EikonalSolution::grad_at(int it, double x) const {
  const double eps = fan_.expo.epsilon;
  const double yq = x * std::pow(fan_.lambda, 3.0 * eps);
  const double y0 = invert(it, yq);
  const double eta = bary_eval(fan_.y0, bary_w_, slices_[it].eta, y0);
  return eta * std::pow(fan_.lambda, -4.0 * eps);
}

double EikonalSolution::dt_omega_at(int it, double x) const {
  Eigen::VectorXd xv(1), nv(1);
  xv(0) = x;
  nv(0) = pm_.xi0(0) + grad_at(it, x);
  return pm_.s(fan_.t_nodes[it], xv, nv, fan_.lambda);
}

double EikonalSolution::sup_omega(int probe_points) const {
  double sup = 0.0;
  for (int it = 0; it < time_nodes(); ++it) {
    for (int q = 0; q < probe_points; ++q) {
      const double x = fan_.domain_radius * (2.0 * q / (probe_points - 1) - 1.0);
      sup = std::max(sup, std::abs(omega_at(it, x)));
    }
  }
  return sup;
}

EikonalSolution reconstruct_omega(const PreparedModel& pm, CharacteristicFan fan,
                                  const EikonalOptions& opts) {
  return EikonalSolution(pm, std::move(fan), opts);
}

EikonalField sample_eikonal(const EikonalSolution& sol, const Eigen::VectorXd& xs) {
  EikonalField f;
  f.ts = std::vector<double>(sol.fan().t_nodes);
  f.xs = xs;
  const int nt = sol.time_nodes();
  f.omega.resize(nt, xs.size());
  f.grad.resize(nt, xs.size());
#pragma omp parallel for schedule(static)
  for (int it = 0; it < nt; ++it) {
    for (Eigen::Index j = 0; j < xs.size(); ++j) {
      f.omega(it, j) = sol.omega_at(it, xs(j));
      f.grad(it, j) = sol.grad_at(it, xs(j));
    }
  }
  return f;
}

double eikonal_residual(const PreparedModel& pm, double lambda, const EikonalField& field) {
  const int nt = static_cast<int>(field.ts.size());
  if (nt < 5) throw ContractViolation("eikonal_residual: need at least 5 time samples");
  const double dt = field.ts[1] - field.ts[0];
  double worst = 0.0;
  for (int it = 2; it < nt - 2; ++it) {
    for (Eigen::Index j = 0; j < field.xs.size(); ++j) {
      const double dom = (field.omega(it - 2, j) - 8.0 * field.omega(it - 1, j) +
                          8.0 * field.omega(it + 1, j) - field.omega(it + 2, j)) /
                         (12.0 * dt);
      Eigen::VectorXd xv(1), nv(1);
      xv(0) = field.xs(j);
      nv(0) = pm.xi0(0) + field.grad(it, j);
      const double sv = pm.s(field.ts[it], xv, nv, lambda);
      worst = std::max(worst, std::abs(dom - sv));
    }
  }
  return worst;
}

}  // namespace mlq
