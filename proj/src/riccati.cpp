#include "mlq/riccati.hpp"

#include <algorithm>
#include <cmath>

#include "mlq/ode.hpp"

namespace mlq {

namespace {

Eigen::MatrixXd sym(const Eigen::MatrixXd& M) { return 0.5 * (M + M.transpose()); }

double op_norm(const Eigen::MatrixXd& M) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(M);
  return svd.singularValues()(0);
}

// Hessian [[Axx, Axxi], [Axxi^T, Axixi]] expressed in the chart coordinates:
// H' = R H R^T for the (orthogonal, symplectic) chart rotation R.
Eigen::MatrixXd chart_hessian(const QuadraticCoefficients& coeffs, double t,
                              const std::vector<int>& chart) {
  const int d = coeffs.dim;
  Eigen::MatrixXd H(2 * d, 2 * d);
  Eigen::MatrixXd M = coeffs.Axxi(t);
  H.topLeftCorner(d, d) = coeffs.Axx(t);
  H.topRightCorner(d, d) = M;
  H.bottomLeftCorner(d, d) = M.transpose();
  H.bottomRightCorner(d, d) = coeffs.Axixi(t);
  if (chart.empty()) return H;
  Eigen::MatrixXd R = chart_rotation(chart, d);
  return R * H * R.transpose();
}

Eigen::MatrixXd rhs_from_hessian(const Eigen::MatrixXd& H, const Eigen::MatrixXd& A) {
  const int d = static_cast<int>(A.rows());
  const Eigen::MatrixXd Axx = H.topLeftCorner(d, d);
  const Eigen::MatrixXd Axxi = H.topRightCorner(d, d);
  const Eigen::MatrixXd Axixi = H.bottomRightCorner(d, d);
  return Axx + 2.0 * sym(Axxi * A) + A * Axixi * A;
}

// Linearized Hamilton flow matrix for p = tau - r: (dx, dxi) evolve by
// F = [[-M^T, -C], [Axx, M]] with M = Axxi, C = Axixi.
Eigen::MatrixXd flow_matrix(const Eigen::MatrixXd& H) {
  const int d = static_cast<int>(H.rows()) / 2;
  Eigen::MatrixXd F(2 * d, 2 * d);
  const Eigen::MatrixXd Axx = H.topLeftCorner(d, d);
  const Eigen::MatrixXd M = H.topRightCorner(d, d);
  const Eigen::MatrixXd C = H.bottomRightCorner(d, d);
  F.topLeftCorner(d, d) = -M.transpose();
  F.topRightCorner(d, d) = -C;
  F.bottomLeftCorner(d, d) = Axx;
  F.bottomRightCorner(d, d) = M;
  return F;
}

}  // namespace

Eigen::MatrixXd chart_rotation(const std::vector<int>& chart, int dim) {
  Eigen::MatrixXd R = Eigen::MatrixXd::Zero(2 * dim, 2 * dim);
  std::vector<bool> in(dim, false);
  for (int i : chart) {
    if (i < 0 || i >= dim) throw ContractViolation("chart_rotation: bad index");
    in[i] = true;
  }
  for (int i = 0; i < dim; ++i) {
    if (in[i]) {
      R(i, dim + i) = 1.0;   // y' = eta
      R(dim + i, i) = -1.0;  // eta' = -y
    } else {
      R(i, i) = 1.0;
      R(dim + i, dim + i) = 1.0;
    }
  }
  return R;
}

Eigen::MatrixXd plane_basis(const RiccatiState& state) {
  const int d = state.dim();
  Eigen::MatrixXd P(2 * d, d);
  P.topRows(d) = Eigen::MatrixXd::Identity(d, d);
  P.bottomRows(d) = state.A;
  if (state.chart.empty()) return P;
  return chart_rotation(state.chart, d).transpose() * P;
}

double plane_angle(const Eigen::MatrixXd& B1, const Eigen::MatrixXd& B2) {
  auto orth = [](const Eigen::MatrixXd& B) {
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(B);
    return Eigen::MatrixXd(qr.householderQ() * Eigen::MatrixXd::Identity(B.rows(), B.cols()));
  };
  Eigen::MatrixXd Q1 = orth(B1), Q2 = orth(B2);
  return op_norm(Q1 * Q1.transpose() - Q2 * Q2.transpose());
}

Eigen::MatrixXd riccati_rhs(const QuadraticCoefficients& coeffs, const RiccatiState& state) {
  if (state.A.rows() != coeffs.dim || state.A.cols() != coeffs.dim)
    throw ContractViolation("riccati_rhs: dimension mismatch");
  return rhs_from_hessian(chart_hessian(coeffs, state.t, state.chart), state.A);
}

RiccatiState chart_switch(const RiccatiState& state) {
  const int d = state.dim();
  const double norm = op_norm(state.A);
  if (norm < 1.0) return state;  // comfortably graphed; switching is unnecessary

  Eigen::MatrixXd P = plane_basis(state);

  // toggle the coordinate carrying the top singular direction; repeat if the
  // new chart is still poorly conditioned
  RiccatiState out = state;
  std::vector<int> chart = state.chart;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(state.A, Eigen::ComputeFullV);
  Eigen::VectorXd u = svd.matrixV().col(0);
  std::vector<int> order(d);
  for (int i = 0; i < d; ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](int a, int b) { return std::abs(u(a)) > std::abs(u(b)); });

  for (int attempt = 0; attempt < d; ++attempt) {
    const int j = order[attempt];
    auto it = std::find(chart.begin(), chart.end(), j);
    if (it == chart.end()) chart.push_back(j); else chart.erase(it);
    std::sort(chart.begin(), chart.end());

    Eigen::MatrixXd Pc = chart_rotation(chart, d) * P;
    Eigen::MatrixXd Y = Pc.topRows(d);
    Eigen::FullPivLU<Eigen::MatrixXd> lu(Y);
    if (lu.isInvertible() && op_norm(Y.inverse()) * op_norm(Y) < 1e8) {
      out.chart = chart;
      out.A = sym(Pc.bottomRows(d) * Y.inverse());
      return out;
    }
  }
  throw std::logic_error("chart_switch: plane not graphable in any offered chart");
}

RiccatiTrajectory propagate_section(const QuadraticCoefficients& coeffs,
                                    const RiccatiState& initial,
                                    const std::vector<double>& t_grid,
                                    const RiccatiOptions& opts) {
  const int d = coeffs.dim;
  if (initial.A.rows() != d) throw ContractViolation("propagate_section: dimension mismatch");
  if ((initial.A - initial.A.transpose()).norm() > 1e-10)
    throw ContractViolation("propagate_section: initial slope must be symmetric");
  if (t_grid.empty()) throw ContractViolation("propagate_section: empty grid");

  RiccatiTrajectory traj;
  RiccatiState cur = initial;
  cur.t = t_grid.front();

  auto pack = [d](const Eigen::MatrixXd& A) {
    return Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(A.data(), d * d));
  };
  auto unpack = [d](const Eigen::VectorXd& v) {
    return Eigen::MatrixXd(Eigen::Map<const Eigen::MatrixXd>(v.data(), d, d));
  };

  traj.states.push_back(cur);
  for (size_t gi = 1; gi < t_grid.size(); ++gi) {
    double t_target = t_grid[gi];
    // integrate the current segment, restarting after chart switches
    for (int guard = 0; guard < 64; ++guard) {
      OdeOptions oo;
      oo.atol = opts.atol;
      oo.rtol = opts.rtol;
      const std::vector<int> chart = cur.chart;  // fixed within this attempt
      OdeRhs rhs = [&](double t, const Eigen::VectorXd& y) {
        return pack(rhs_from_hessian(chart_hessian(coeffs, t, chart), sym(unpack(y))));
      };
      bool switched = false;
      OdeHook hook = [&](double t, Eigen::VectorXd& y) {
        Eigen::MatrixXd A = sym(unpack(y));
        y = pack(A);
        if (op_norm(A) > opts.switch_threshold) {
          cur.A = A;
          cur.t = t;
          switched = true;
          return StepAction::Stop;
        }
        return StepAction::Continue;
      };
      Eigen::VectorXd y = pack(cur.A);
      OdeIntegrator solver(rhs, oo);
      const double reached = solver.integrate(cur.t, y, t_target, hook);
      cur.A = sym(unpack(y));
      cur.t = reached;
      if (!switched) break;
      cur = chart_switch(cur);
      traj.switch_count += 1;
      if (guard == 63)
        throw std::runtime_error("propagate_section: too many chart switches in one segment");
    }
    traj.states.push_back(cur);
  }
  return traj;
}

double grazing_residual(const QuadraticCoefficients& coeffs, const std::vector<double>& t_grid,
                        const RiccatiTrajectory& traj) {
  if (traj.size() != static_cast<int>(t_grid.size()))
    throw ContractViolation("grazing_residual: trajectory does not cover the grid");
  const int d = coeffs.dim;

  auto pack = [d](const Eigen::MatrixXd& M) {
    return Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(M.data(), 2 * d * d));
  };
  auto unpack = [d](const Eigen::VectorXd& v) {
    return Eigen::MatrixXd(Eigen::Map<const Eigen::MatrixXd>(v.data(), 2 * d, d));
  };

  OdeRhs rhs = [&](double t, const Eigen::VectorXd& y) {
    Eigen::MatrixXd M = unpack(y);
    return pack(flow_matrix(chart_hessian(coeffs, t, {})) * M);
  };
  OdeOptions oo;
  oo.atol = 1e-12;
  oo.rtol = 1e-12;
  OdeIntegrator solver(rhs, oo);

  Eigen::MatrixXd basis = plane_basis(traj.at(0));
  Eigen::VectorXd y = pack(basis);
  double worst = 0.0;
  for (int i = 1; i < traj.size(); ++i) {
    solver.integrate(t_grid[i - 1], y, t_grid[i]);
    // re-orthonormalize; the spanned plane is unchanged
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(unpack(y));
    Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(2 * d, d);
    y = pack(Q);
    worst = std::max(worst, plane_angle(Q, plane_basis(traj.at(i))));
  }
  return worst;
}

std::vector<NamedCoefficientSet> builtin_coefficient_sets() {
  auto constant = [](int d, double axx, double axxi, double axixi) {
    QuadraticCoefficients c;
    c.dim = d;
    c.Axx = [=](double) { return axx * Eigen::MatrixXd::Identity(d, d); };
    c.Axxi = [=](double) { return axxi * Eigen::MatrixXd::Identity(d, d); };
    c.Axixi = [=](double) { return axixi * Eigen::MatrixXd::Identity(d, d); };
    return c;
  };

  std::vector<NamedCoefficientSet> out;
  out.push_back({"tan-scalar", constant(1, 1.0, 0.0, 1.0), 1.2});
  out.push_back({"pure-shear", constant(1, 0.0, 0.7, 0.0), 1.0});
  out.push_back({"free", constant(1, 0.0, 0.0, 1.0), 1.0});
  {
    QuadraticCoefficients c;
    c.dim = 2;
    c.Axx = [](double t) {
      Eigen::MatrixXd M(2, 2);
      M << 1.0, 0.3 * std::sin(t), 0.3 * std::sin(t), 0.5;
      return M;
    };
    c.Axxi = [](double) {
      Eigen::MatrixXd M(2, 2);
      M << 0.0, 0.4, 0.0, 0.0;  // nilpotent cross coupling
      return M;
    };
    c.Axixi = [](double) { return 0.8 * Eigen::MatrixXd::Identity(2, 2); };
    out.push_back({"coupled-2d", c, 1.0});
  }
  return out;
}

}  // namespace mlq
