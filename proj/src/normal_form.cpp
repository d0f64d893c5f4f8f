#include "mlq/normal_form.hpp"

#include <cmath>

namespace mlq {

namespace {

struct GradedDerivs {
  GradedPolyR s;
  std::vector<GradedPolyR> dx, dnu;
  std::vector<std::vector<GradedPolyR>> dxx, dxnu, dnunu;
};

std::shared_ptr<GradedDerivs> build_derivs(const GradedPolyR& table, int d) {
  auto g = std::make_shared<GradedDerivs>();
  g->s = table;
  for (int i = 0; i < d; ++i) {
    g->dx.push_back(table.deriv_x(i));
    g->dnu.push_back(table.deriv_nu(i));
  }
  g->dxx.resize(d);
  g->dxnu.resize(d);
  g->dnunu.resize(d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      g->dxx[i].push_back(g->dx[i].deriv_x(j));
      g->dxnu[i].push_back(g->dx[i].deriv_nu(j));
      g->dnunu[i].push_back(g->dnu[i].deriv_nu(j));
    }
  return g;
}

}  // namespace

PreparedModel prepared_from_graded(int base_dim, const Eigen::VectorXd& xi0, double t_min,
                                   double t_max, const Exponents& expo, const GradedPolyR& s_table,
                                   const GradedPolyC& q0_table, bool exponent_waiver) {
  if (xi0.size() != base_dim) throw ContractViolation("prepared_from_graded: xi0 dimension");
  if (!(t_min < 0.0 && t_max > 0.0))
    throw ContractViolation("prepared_from_graded: the interval I must contain 0");
  expo.validate(exponent_waiver);
  if (s_table.d != base_dim || q0_table.d != base_dim)
    throw ContractViolation("prepared_from_graded: table dimension mismatch");
  for (const auto& tm : s_table.terms) {
    int deg = 0;
    for (int i = 0; i < base_dim; ++i) deg += tm.px[i] + tm.pnu[i];
    if (deg < 2)
      throw ContractViolation(
          "prepared_from_graded: r must vanish to second order on Gamma "
          "(found a term of degree < 2 in (x, nu - xi0))");
  }

  PreparedModel pm;
  pm.base_dim = base_dim;
  pm.xi0 = xi0;
  pm.t_min = t_min;
  pm.t_max = t_max;
  pm.expo = expo;

  auto g = build_derivs(s_table, base_dim);
  const Eigen::VectorXd xi0c = xi0;
  const int d = base_dim;

  pm.s = [g, xi0c](double t, const Eigen::VectorXd& x, const Eigen::VectorXd& nu, double lam) {
    return g->s.eval(t, x, nu - xi0c, lam);
  };
  pm.s_dx = [g, xi0c, d](double t, const Eigen::VectorXd& x, const Eigen::VectorXd& nu, double lam) {
    Eigen::VectorXd v(d);
    const Eigen::VectorXd dn = nu - xi0c;
    for (int i = 0; i < d; ++i) v(i) = g->dx[i].eval(t, x, dn, lam);
    return v;
  };
  pm.s_dnu = [g, xi0c, d](double t, const Eigen::VectorXd& x, const Eigen::VectorXd& nu, double lam) {
    Eigen::VectorXd v(d);
    const Eigen::VectorXd dn = nu - xi0c;
    for (int i = 0; i < d; ++i) v(i) = g->dnu[i].eval(t, x, dn, lam);
    return v;
  };
  auto matfn = [g, xi0c, d](std::vector<std::vector<GradedPolyR>> GradedDerivs::*member) {
    return [g, xi0c, d, member](double t, const Eigen::VectorXd& x, const Eigen::VectorXd& nu,
                                double lam) {
      Eigen::MatrixXd M(d, d);
      const Eigen::VectorXd dn = nu - xi0c;
      const auto& tbl = (*g).*member;
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) M(i, j) = tbl[i][j].eval(t, x, dn, lam);
      return M;
    };
  };
  pm.s_dxx = matfn(&GradedDerivs::dxx);
  pm.s_dxnu = matfn(&GradedDerivs::dxnu);
  pm.s_dnunu = matfn(&GradedDerivs::dnunu);

  auto q0t = std::make_shared<GradedPolyC>(q0_table);
  pm.q0 = [q0t, d](double t, double lam) {
    const Eigen::VectorXd z = Eigen::VectorXd::Zero(d);
    return q0t->eval(t, z, z, lam);
  };

  if (d == 1) {
    auto table = std::make_shared<GradedPolyR>(s_table);
    pm.slice_table = [table](double t, double lam) {
      std::vector<PreparedModel::SliceTerm> out;
      for (const auto& tm : table->terms) {
        double c = tm.coeff * GradedPolyR::lam_factor(tm.lam_exp, tm.log_pow, lam);
        for (int k = 0; k < tm.pt; ++k) c *= t;
        out.push_back({c, tm.px[0], tm.pnu[0]});
      }
      return out;
    };
  }

  // structurally straight iff no term is quadratic-in-x with nu-degree 0
  pm.straightened = true;
  for (const auto& tm : s_table.terms) {
    int px = 0, pnu = 0;
    for (int i = 0; i < d; ++i) { px += tm.px[i]; pnu += tm.pnu[i]; }
    if (px == 2 && pnu == 0) pm.straightened = false;
  }
  return pm;
}

double tau_root_solve(const SymbolModel& model, double t, const Eigen::VectorXd& x,
                      const Eigen::VectorXd& xi, double seed, const TauRootOptions& opts) {
  const int d = model.base_dim;
  double tau = seed;
  for (int it = 0; it < opts.max_iter; ++it) {
    PhasePoint w(t, x, tau, xi);
    const double f = model.p(w);
    const double df = gradient(model, w)(d + 1);
    if (std::abs(df) < opts.dtau_floor)
      throw PreparationFailure("tau_root_solve: branch degeneracy, |dp/dtau| = " +
                               std::to_string(std::abs(df)));
    const double step = f / df;
    tau -= step;
    if (std::abs(step) <= opts.tol * std::max(1.0, std::abs(tau)) && std::abs(f) <= 1e2 * opts.tol)
      return tau;
  }
  throw PreparationFailure("tau_root_solve: Newton did not converge in " +
                           std::to_string(opts.max_iter) + " iterations");
}

std::vector<double> tau_root_path(const SymbolModel& model,
                                  const std::vector<std::tuple<double, Eigen::VectorXd, Eigen::VectorXd>>& path,
                                  double seed0, const TauRootOptions& opts) {
  std::vector<double> roots;
  double seed = seed0;
  for (const auto& [t, x, xi] : path) {
    seed = tau_root_solve(model, t, x, xi, seed, opts);
    roots.push_back(seed);
  }
  return roots;
}

PreparedModel prepared_from_symbol(const SymbolModel& model, const Eigen::VectorXd& xi0,
                                   double t_min, double t_max, const Exponents& expo,
                                   double tau_seed) {
  const int d = model.base_dim;
  if (xi0.size() != d) throw ContractViolation("prepared_from_symbol: xi0 dimension");
  expo.validate(false);

  PreparedModel pm;
  pm.base_dim = d;
  pm.xi0 = xi0;
  pm.t_min = t_min;
  pm.t_max = t_max;
  pm.expo = expo;

  auto mp = std::make_shared<SymbolModel>(model);
  auto root = [mp, tau_seed](double t, const Eigen::VectorXd& x, const Eigen::VectorXd& nu) {
    return tau_root_solve(*mp, t, x, nu, tau_seed);
  };

  pm.s = [root](double t, const Eigen::VectorXd& x, const Eigen::VectorXd& nu, double) {
    return root(t, x, nu);
  };
  // implicit differentiation at the root: grad s = -grad_{x/nu} p / dp/dtau
  auto igrad = [mp, root, d](double t, const Eigen::VectorXd& x, const Eigen::VectorXd& nu) {
    const double tau = root(t, x, nu);
    Eigen::VectorXd g = gradient(*mp, PhasePoint(t, x, tau, nu));
    const double dtau = g(d + 1);
    Eigen::VectorXd out(2 * d);
    out.head(d) = -g.segment(1, d) / dtau;        // d s / d x
    out.tail(d) = -g.segment(d + 2, d) / dtau;    // d s / d nu
    return out;
  };
  pm.s_dx = [igrad, d](double t, const Eigen::VectorXd& x, const Eigen::VectorXd& nu, double) {
    return Eigen::VectorXd(igrad(t, x, nu).head(d));
  };
  pm.s_dnu = [igrad, d](double t, const Eigen::VectorXd& x, const Eigen::VectorXd& nu, double) {
    return Eigen::VectorXd(igrad(t, x, nu).tail(d));
  };

  // second derivatives by differencing the implicit first derivatives
  const double h = std::cbrt(std::numeric_limits<double>::epsilon());
  auto fd_mat = [igrad, d, h](bool by_x, bool take_x) {
    return [igrad, d, h, by_x, take_x](double t, const Eigen::VectorXd& x,
                                       const Eigen::VectorXd& nu, double) {
      Eigen::MatrixXd M(d, d);
      for (int j = 0; j < d; ++j) {
        Eigen::VectorXd xp = x, xm = x, np = nu, nm = nu;
        if (by_x) { xp(j) += h; xm(j) -= h; } else { np(j) += h; nm(j) -= h; }
        Eigen::VectorXd gp = igrad(t, xp, np), gm = igrad(t, xm, nm);
        Eigen::VectorXd col = (gp - gm) / (2.0 * h);
        M.col(j) = take_x ? col.head(d) : col.tail(d);
      }
      return M;
    };
  };
  pm.s_dxx = fd_mat(true, true);
  pm.s_dxnu = [fd_mat, d](double t, const Eigen::VectorXd& x, const Eigen::VectorXd& nu,
                          double lam) {
    // (i,j) = d_{x_i} d_{nu_j} s: differentiate ds/dx along nu_j
    Eigen::MatrixXd M = fd_mat(false, true)(t, x, nu, lam);
    return M;
  };
  pm.s_dnunu = fd_mat(false, false);

  // q0 on Gamma from the normal-form formula, with D_t by small differences
  auto hom = [mp, root, xi0](double t) {
    Eigen::VectorXd zero = Eigen::VectorXd::Zero(xi0.size());
    const double tau = root(t, zero, xi0);
    return homogeneous_gradient_norm(*mp, PhasePoint(t, zero, tau, xi0));
  };
  auto p0_on = [mp, root, xi0](double t) {
    Eigen::VectorXd zero = Eigen::VectorXd::Zero(xi0.size());
    const double tau = root(t, zero, xi0);
    return eval_subprincipal(*mp, PhasePoint(t, zero, tau, xi0));
  };
  pm.q0 = [hom, p0_on](double t, double) {
    const double ht = 1e-4;
    const double d1 = (hom(t - 2 * ht) - 8 * hom(t - ht) + 8 * hom(t + ht) - hom(t + 2 * ht)) /
                      (12.0 * ht);
    const double q = hom(t);
    const std::complex<double> I(0.0, 1.0);
    return d1 / (2.0 * I * q) + p0_on(t) / q;
  };
  pm.straightened = false;
  return pm;
}

Q0Samples q0_normalform(const SymbolModel& model, const Bicharacteristic& curve,
                        const HomGradOptions& hopts) {
  const int n = std::max(257, curve.size() | 1);
  const double s0 = curve.s.front(), s1 = curve.s.back();
  const double h = (s1 - s0) / (n - 1);

  std::vector<double> hom(n), tt(n), dtds(n);
  std::vector<std::complex<double>> p0(n);
  for (int i = 0; i < n; ++i) {
    PhasePoint w = curve_point(curve, s0 + i * h);
    hom[i] = homogeneous_gradient_norm(model, w, hopts);
    p0[i] = eval_subprincipal(model, w);
    tt[i] = w.t;
  }
  // dt/ds along the curve, for mapping d/ds to d/dt
  for (int i = 0; i < n; ++i) {
    const int im = std::max(0, i - 1), ip = std::min(n - 1, i + 1);
    dtds[i] = (tt[ip] - tt[im]) / ((ip - im) * h);
  }

  Q0Samples out;
  const std::complex<double> I(0.0, 1.0);
  for (int i = 2; i < n - 2; ++i) {
    const double dq_ds =
        (hom[i - 2] - 8 * hom[i - 1] + 8 * hom[i + 1] - hom[i + 2]) / (12.0 * h);
    if (std::abs(dtds[i]) < 1e-12)
      throw DegenerateHamiltonField("q0_normalform: curve is not transversal in t");
    const double dq_dt = dq_ds / dtds[i];
    out.t.push_back(tt[i]);
    out.values.push_back(dq_dt / (2.0 * I * hom[i]) + p0[i] / hom[i]);
  }
  return out;
}

double lambda_from_kappa(double kappa, double epsilon) {
  if (!(kappa > 0.0 && kappa < 1.0)) throw ContractViolation("lambda_from_kappa: need 0 < kappa < 1");
  if (!(epsilon > 0.0)) throw ContractViolation("lambda_from_kappa: need epsilon > 0");
  return std::pow(kappa, -1.0 / epsilon);
}

QuadraticCoefficients riccati_coefficients(const PreparedModel& pm, double lambda) {
  QuadraticCoefficients c;
  c.dim = pm.base_dim;
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(pm.base_dim);
  const Eigen::VectorXd xi0 = pm.xi0;
  const auto dxx = pm.s_dxx, dxnu = pm.s_dxnu, dnunu = pm.s_dnunu;
  c.Axx = [dxx, zero, xi0, lambda](double t) { return dxx(t, zero, xi0, lambda); };
  c.Axxi = [dxnu, zero, xi0, lambda](double t) { return dxnu(t, zero, xi0, lambda); };
  c.Axixi = [dnunu, zero, xi0, lambda](double t) { return dnunu(t, zero, xi0, lambda); };
  return c;
}

namespace {

struct SlopePath {
  std::vector<double> ts;
  std::vector<Eigen::MatrixXd> A, Adot;

  Eigen::MatrixXd eval(double t, bool derivative) const {
    const int n = static_cast<int>(ts.size());
    if (t <= ts.front()) return derivative ? Adot.front() : A.front();
    if (t >= ts.back()) return derivative ? Adot.back() : A.back();
    int lo = 0, hi = n - 2;
    while (lo < hi) {
      int mid = (lo + hi + 1) / 2;
      if (ts[mid] <= t) lo = mid; else hi = mid - 1;
    }
    const double h = ts[lo + 1] - ts[lo];
    const double u = (t - ts[lo]) / h;
    const double h00 = 2 * u * u * u - 3 * u * u + 1, h10 = u * u * u - 2 * u * u + u;
    const double h01 = -2 * u * u * u + 3 * u * u, h11 = u * u * u - u * u;
    if (!derivative)
      return h00 * A[lo] + h * h10 * Adot[lo] + h01 * A[lo + 1] + h * h11 * Adot[lo + 1];
    const double g00 = (6 * u * u - 6 * u) / h, g10 = 3 * u * u - 4 * u + 1;
    const double g01 = (-6 * u * u + 6 * u) / h, g11 = 3 * u * u - 2 * u;
    return g00 * A[lo] + g10 * Adot[lo] * 1.0 + g01 * A[lo + 1] + g11 * Adot[lo + 1];
  }
};

}  // namespace

PreparedModel straighten(const PreparedModel& pm, double lambda) {
  const int d = pm.base_dim;
  QuadraticCoefficients coeffs = riccati_coefficients(pm, lambda);

  // grazing slope with A(0) = 0, integrated to both ends of I
  auto path = std::make_shared<SlopePath>();
  {
    const int half = 257;
    std::vector<double> fwd(half), bwd(half);
    for (int i = 0; i < half; ++i) {
      fwd[i] = pm.t_max * i / (half - 1);
      bwd[i] = pm.t_min * i / (half - 1);
    }
    RiccatiState init;
    init.A = Eigen::MatrixXd::Zero(d, d);
    init.t = 0.0;
    RiccatiOptions ro;
    ro.switch_threshold = 1e6;
    RiccatiTrajectory tf, tb;
    try {
      tf = propagate_section(coeffs, init, fwd, ro);
      tb = propagate_section(coeffs, init, bwd, ro);
    } catch (const std::exception& e) {
      throw ConditioningError(std::string("straighten: Riccati solution not usable on I: ") +
                              e.what());
    }
    if (tf.switch_count + tb.switch_count > 0)
      throw ConditioningError("straighten: graph slope left the chart inside I");
    for (int i = half - 1; i >= 1; --i) {
      path->ts.push_back(bwd[i]);
      path->A.push_back(tb.at(i).A);
    }
    for (int i = 0; i < half; ++i) {
      path->ts.push_back(fwd[i]);
      path->A.push_back(tf.at(i).A);
    }
    for (size_t i = 0; i < path->ts.size(); ++i) {
      RiccatiState st;
      st.A = path->A[i];
      st.t = path->ts[i];
      path->Adot.push_back(riccati_rhs(coeffs, st));
    }
  }

  PreparedModel out = pm;
  const PreparedModel base = pm;  // capture by value: evaluators of the input

  auto shift_args = [path](double t, const Eigen::VectorXd& x, const Eigen::VectorXd& nu) {
    return Eigen::VectorXd(nu + path->eval(t, false) * x);
  };
  // A'(t) through the evolution equation at the interpolated slope, so the
  // x^2 block cancels exactly at Gamma
  auto adot_at = [base, path, lambda](double t) {
    const int d = base.base_dim;
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(d);
    const Eigen::MatrixXd A = path->eval(t, false);
    const Eigen::MatrixXd Axx = base.s_dxx(t, zero, base.xi0, lambda);
    const Eigen::MatrixXd Axn = base.s_dxnu(t, zero, base.xi0, lambda);
    const Eigen::MatrixXd Ann = base.s_dnunu(t, zero, base.xi0, lambda);
    return Eigen::MatrixXd(Axx + Axn * A + A * Axn.transpose() + A * Ann * A);
  };

  out.s = [base, adot_at, shift_args](double t, const Eigen::VectorXd& x,
                                      const Eigen::VectorXd& nu, double lam) {
    return base.s(t, x, shift_args(t, x, nu), lam) - 0.5 * x.dot(adot_at(t) * x);
  };
  out.s_dx = [base, path, adot_at, shift_args](double t, const Eigen::VectorXd& x,
                                               const Eigen::VectorXd& nu, double lam) {
    const Eigen::MatrixXd A = path->eval(t, false);
    const Eigen::VectorXd arg = shift_args(t, x, nu);
    return Eigen::VectorXd(base.s_dx(t, x, arg, lam) + A * base.s_dnu(t, x, arg, lam) -
                           adot_at(t) * x);
  };
  out.s_dnu = [base, shift_args](double t, const Eigen::VectorXd& x, const Eigen::VectorXd& nu,
                                 double lam) {
    return base.s_dnu(t, x, shift_args(t, x, nu), lam);
  };
  out.s_dxx = [base, path, adot_at, shift_args](double t, const Eigen::VectorXd& x,
                                                const Eigen::VectorXd& nu, double lam) {
    const Eigen::MatrixXd A = path->eval(t, false);
    const Eigen::VectorXd arg = shift_args(t, x, nu);
    const Eigen::MatrixXd Sxx = base.s_dxx(t, x, arg, lam);
    const Eigen::MatrixXd Sxn = base.s_dxnu(t, x, arg, lam);
    const Eigen::MatrixXd Snn = base.s_dnunu(t, x, arg, lam);
    return Eigen::MatrixXd(Sxx + A * Sxn.transpose() + Sxn * A + A * Snn * A - adot_at(t));
  };
  out.s_dxnu = [base, path, shift_args](double t, const Eigen::VectorXd& x,
                                        const Eigen::VectorXd& nu, double lam) {
    const Eigen::MatrixXd A = path->eval(t, false);
    const Eigen::VectorXd arg = shift_args(t, x, nu);
    return Eigen::MatrixXd(base.s_dxnu(t, x, arg, lam) + A * base.s_dnunu(t, x, arg, lam));
  };
  out.s_dnunu = [base, shift_args](double t, const Eigen::VectorXd& x, const Eigen::VectorXd& nu,
                                   double lam) {
    return base.s_dnunu(t, x, shift_args(t, x, nu), lam);
  };
  if (d == 1 && base.slice_table) {
    // substitute dnu -> dnu + A(t) x and subtract the quadratic phase term
    auto adot = adot_at;
    auto inner = base.slice_table;
    out.slice_table = [inner, path, adot](double t, double lam) {
      const double alpha = path->eval(t, false)(0, 0);
      std::vector<PreparedModel::SliceTerm> res;
      for (const auto& tm : inner(t, lam)) {
        double binom = 1.0;
        for (int j = 0; j <= tm.nupow; ++j) {
          if (j > 0) binom = binom * (tm.nupow - j + 1) / j;
          res.push_back({tm.coeff * binom * std::pow(alpha, j), tm.xpow + j, tm.nupow - j});
        }
      }
      res.push_back({-0.5 * adot(t)(0, 0), 2, 0});
      return res;
    };
  } else {
    out.slice_table = nullptr;
  }
  out.straightened = true;
  return out;
}

SymbolModel prepared_symbol_model(const PreparedModel& pm, double lambda, double kappa_mult) {
  SymbolModel m;
  m.base_dim = pm.base_dim;
  m.homogeneity_degree = 1.0;
  const PreparedModel base = pm;
  const double k = kappa_mult;
  m.p = [base, lambda, k](const PhasePoint& w) {
    return k * (w.tau - base.s(w.t, w.x, w.xi, lambda));
  };
  m.p0 = [base, lambda, k](const PhasePoint& w) {
    return k * base.q0(w.t, lambda);
  };
  const int d = pm.base_dim;
  m.grad = [base, lambda, k, d](const PhasePoint& w) {
    Eigen::VectorXd g(2 * (d + 1));
    // s has no explicit t-polynomial beyond the table; use a small difference
    const double h = 1e-6;
    const double st_p = base.s(w.t + h, w.x, w.xi, lambda);
    const double st_m = base.s(w.t - h, w.x, w.xi, lambda);
    g(0) = -k * (st_p - st_m) / (2.0 * h);
    g.segment(1, d) = -k * base.s_dx(w.t, w.x, w.xi, lambda);
    g(d + 1) = k;
    g.segment(d + 2, d) = -k * base.s_dnu(w.t, w.x, w.xi, lambda);
    return g;
  };
  return m;
}

}  // namespace mlq
