#include "mlq/symbol_model.hpp"

#include <cmath>
#include <limits>
#include <memory>

namespace mlq {

namespace {

PhasePoint shift(const PhasePoint& w, int var, double h) {
  PhasePoint v = w;
  const int d = w.base_dim();
  if (var == 0) v.t += h;
  else if (var <= d) v.x(var - 1) += h;
  else if (var == d + 1) v.tau += h;
  else v.xi(var - d - 2) += h;
  return v;
}

double fd_step(const PhasePoint& w) {
  static const double h0 = std::cbrt(std::numeric_limits<double>::epsilon());
  return h0 * std::max(1.0, w.flat().norm());
}

PolyR poly_mul(const PolyR& a, const PolyR& b) {
  PolyR out(a.nvars);
  for (const auto& ta : a.terms)
    for (const auto& tb : b.terms) {
      auto p = ta.powers;
      for (int i = 0; i < a.nvars; ++i) p[i] += tb.powers[i];
      out.terms.push_back({ta.coeff * tb.coeff, std::move(p)});
    }
  return out;
}

}  // namespace

double eval_principal(const SymbolModel& model, const PhasePoint& w) {
  if (w.base_dim() != model.base_dim)
    throw ContractViolation("eval_principal: dimension mismatch");
  return model.p(w);
}

std::complex<double> eval_subprincipal(const SymbolModel& model, const PhasePoint& w) {
  if (w.base_dim() != model.base_dim)
    throw ContractViolation("eval_subprincipal: dimension mismatch");
  if (!model.p0) return {0.0, 0.0};
  return model.p0(w);
}

Eigen::VectorXd fd_gradient(const std::function<double(const PhasePoint&)>& f, const PhasePoint& w) {
  const int n2 = 2 * w.dim();
  const double h = fd_step(w);
  Eigen::VectorXd g(n2);
  for (int i = 0; i < n2; ++i)
    g(i) = (f(shift(w, i, h)) - f(shift(w, i, -h))) / (2.0 * h);
  return g;
}

Eigen::MatrixXd fd_hessian(const std::function<double(const PhasePoint&)>& f, const PhasePoint& w) {
  const int n2 = 2 * w.dim();
  const double h = std::sqrt(fd_step(w));  // eps^{1/6}-ish, balances the nested difference
  Eigen::MatrixXd H(n2, n2);
  const double f0 = f(w);
  for (int i = 0; i < n2; ++i) {
    H(i, i) = (f(shift(w, i, h)) - 2.0 * f0 + f(shift(w, i, -h))) / (h * h);
    for (int j = i + 1; j < n2; ++j) {
      const double fpp = f(shift(shift(w, i, h), j, h));
      const double fpm = f(shift(shift(w, i, h), j, -h));
      const double fmp = f(shift(shift(w, i, -h), j, h));
      const double fmm = f(shift(shift(w, i, -h), j, -h));
      H(i, j) = H(j, i) = (fpp - fpm - fmp + fmm) / (4.0 * h * h);
    }
  }
  return H;
}

Eigen::VectorXd gradient(const SymbolModel& model, const PhasePoint& w) {
  if (model.grad) return model.grad(w);
  return fd_gradient(model.p, w);
}

Eigen::MatrixXd hessian(const SymbolModel& model, const PhasePoint& w) {
  if (model.hess) return model.hess(w);
  return fd_hessian(model.p, w);
}

Eigen::VectorXd hamilton_field_from_grad(const Eigen::VectorXd& g) {
  const int n = static_cast<int>(g.size()) / 2;
  const int d = n - 1;
  Eigen::VectorXd h(2 * n);
  h(0) = g(d + 1);                       // dp/dtau
  h.segment(1, d) = g.segment(d + 2, d); // dp/dxi
  h(d + 1) = -g(0);                      // -dp/dt
  h.segment(d + 2, d) = -g.segment(1, d);
  return h;
}

Eigen::VectorXd hamilton_field(const SymbolModel& model, const PhasePoint& w) {
  return hamilton_field_from_grad(gradient(model, w));
}

Eigen::VectorXd normalized_hamilton_field(const SymbolModel& model, const PhasePoint& w,
                                          double degeneracy_threshold) {
  Eigen::VectorXd h = hamilton_field(model, w);
  const double norm = h.norm();
  if (norm <= degeneracy_threshold)
    throw DegenerateHamiltonField("normalized_hamilton_field: |H_p| = " + std::to_string(norm));
  return h / norm;
}

double homogeneous_gradient_norm(const SymbolModel& model, const PhasePoint& w,
                                 const HomGradOptions& opts) {
  const double F = opts.full_fiber ? w.fiber_norm() : w.xi.norm();
  if (F <= 0.0)
    throw ContractViolation("homogeneous_gradient_norm: zero fiber");
  const Eigen::VectorXd g = gradient(model, w);
  const int d = w.base_dim();
  const double base2 = g.head(d + 1).squaredNorm();
  const double fiber2 = g.tail(d + 1).squaredNorm();
  return std::sqrt(base2 / (F * F) + fiber2);
}

SymbolModel symbol_from_polynomial(int base_dim, const PolyR& p, const PolyC& p0,
                                   double homogeneity_degree) {
  const int n2 = 2 * (base_dim + 1);
  if (p.nvars != n2) throw ContractViolation("symbol_from_polynomial: p has wrong variable count");

  SymbolModel m;
  m.base_dim = base_dim;
  m.homogeneity_degree = homogeneity_degree;
  m.p = [p](const PhasePoint& w) { return p.eval(w.flat()); };
  if (!p0.terms.empty()) {
    m.p0 = [p0](const PhasePoint& w) { return p0.eval(w.flat()); };
  }

  auto dp = std::make_shared<std::vector<PolyR>>();
  auto d2p = std::make_shared<std::vector<PolyR>>();  // row-major upper triangle fill
  auto d3p = std::make_shared<std::vector<PolyR>>();
  dp->reserve(n2);
  for (int i = 0; i < n2; ++i) dp->push_back(p.deriv(i));
  d2p->resize(n2 * n2);
  for (int i = 0; i < n2; ++i)
    for (int j = i; j < n2; ++j) {
      (*d2p)[i * n2 + j] = (*dp)[i].deriv(j);
      (*d2p)[j * n2 + i] = (*d2p)[i * n2 + j];
    }
  d3p->resize(n2 * n2 * n2);
  for (int k = 0; k < n2; ++k)
    for (int i = 0; i < n2; ++i)
      for (int j = 0; j < n2; ++j)
        (*d3p)[(k * n2 + i) * n2 + j] = (*d2p)[i * n2 + j].deriv(k);

  m.grad = [dp, n2](const PhasePoint& w) {
    const Eigen::VectorXd z = w.flat();
    Eigen::VectorXd g(n2);
    for (int i = 0; i < n2; ++i) g(i) = (*dp)[i].eval(z);
    return g;
  };
  m.hess = [d2p, n2](const PhasePoint& w) {
    const Eigen::VectorXd z = w.flat();
    Eigen::MatrixXd H(n2, n2);
    for (int i = 0; i < n2; ++i)
      for (int j = 0; j < n2; ++j) H(i, j) = (*d2p)[i * n2 + j].eval(z);
    return H;
  };
  m.third = [d3p, n2](const PhasePoint& w) {
    const Eigen::VectorXd z = w.flat();
    std::vector<Eigen::MatrixXd> T(n2, Eigen::MatrixXd(n2, n2));
    for (int k = 0; k < n2; ++k)
      for (int i = 0; i < n2; ++i)
        for (int j = 0; j < n2; ++j) T[k](i, j) = (*d3p)[(k * n2 + i) * n2 + j].eval(z);
    return T;
  };
  return m;
}

SymbolModel symbol_tau_minus_r(int base_dim, const PolyR& r, const PolyC& p0) {
  const int n2 = 2 * (base_dim + 1);
  PolyR p(n2);
  auto pw = vars::zero(base_dim);
  pw[vars::tau_var(base_dim)] = 1;
  p.add_term(1.0, pw);
  for (const auto& tm : r.terms) {
    if (tm.powers[vars::tau_var(base_dim)] != 0)
      throw ContractViolation("symbol_tau_minus_r: r must not depend on tau");
    p.terms.push_back({-tm.coeff, tm.powers});
  }
  return symbol_from_polynomial(base_dim, p, p0);
}

SymbolModel symbol_quadratic_hyperbolic(const std::vector<double>& mu, int line_modes,
                                        Q2Case q2, double mu0, const PolyC& p0) {
  for (double m : mu)
    if (m <= 0.0) throw ContractViolation("symbol_quadratic_hyperbolic: mu_j must be > 0");
  const int k = static_cast<int>(mu.size());
  const int q2_dims = (q2 == Q2Case::Eta1Eta2) ? 2 : 1;
  const int d = k + line_modes + q2_dims;
  const int n2 = 2 * (d + 1);

  PolyR p(n2);
  auto term = [&](double c, int var, int pow1, int var2 = -1, int pow2 = 0) {
    auto pw = vars::zero(d);
    pw[var] = pow1;
    if (var2 >= 0) pw[var2] += pow2;
    p.add_term(c, pw);
  };
  for (int j = 0; j < k; ++j) {
    term(mu[j], vars::x_var(d, j), 2);
    term(mu[j], vars::xi_var(d, j), 2);
  }
  for (int j = 0; j < line_modes; ++j) term(1.0, vars::xi_var(d, k + j), 2);

  const int y1 = k + line_modes;  // first Q2 slot
  switch (q2) {
    case Q2Case::MinusEta1Sq:
      term(-1.0, vars::xi_var(d, y1), 2);
      break;
    case Q2Case::Y1Eta1:
      term(mu0, vars::x_var(d, y1), 1, vars::xi_var(d, y1), 1);
      break;
    case Q2Case::Eta1Eta2:
      term(2.0, vars::xi_var(d, y1), 1, vars::xi_var(d, y1 + 1), 1);
      term(-1.0, vars::x_var(d, y1 + 1), 2);
      break;
  }
  return symbol_from_polynomial(d, p, p0, 2.0);
}

SymbolModel symbol_product(int base_dim, const std::vector<PolyR>& factors, const PolyC& p0) {
  if (factors.empty()) throw ContractViolation("symbol_product: no factors");
  PolyR p = factors[0];
  for (size_t i = 1; i < factors.size(); ++i) p = poly_mul(p, factors[i]);
  return symbol_from_polynomial(base_dim, p, p0, static_cast<double>(factors.size()));
}

SymbolModel symbol_root(int base_dim, int k, const PolyR& a, const PolyC& p0, int w1_var) {
  if (k < 2) throw ContractViolation("symbol_root: need k >= 2");
  const int n2 = 2 * (base_dim + 1);
  if (w1_var < 0) w1_var = vars::tau_var(base_dim);
  PolyR p(n2);
  auto pw = vars::zero(base_dim);
  pw[w1_var] = k;
  p.add_term(1.0, pw);
  for (const auto& tm : a.terms) {
    if (tm.powers[w1_var] != 0)
      throw ContractViolation("symbol_root: a(w') must not depend on w1");
    p.terms.push_back({-tm.coeff, tm.powers});
  }
  return symbol_from_polynomial(base_dim, p, p0, static_cast<double>(k));
}

}  // namespace mlq
