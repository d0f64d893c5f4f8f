#pragma once

#include <Eigen/Dense>
#include <complex>
#include <vector>

#include "mlq/errors.hpp"

namespace mlq {

// Sparse multivariate polynomials as coefficient tables.  This is the input
// format for user-supplied symbols: one row per monomial, powers over a fixed
// variable ordering.
template <typename T>
struct Polynomial {
  struct Term {
    T coeff;
    std::vector<int> powers;  // one entry per variable
  };

  int nvars = 0;
  std::vector<Term> terms;

  Polynomial() = default;
  explicit Polynomial(int nvars) : nvars(nvars) {}

  void add_term(T coeff, std::vector<int> powers) {
    if (static_cast<int>(powers.size()) != nvars)
      throw ContractViolation("Polynomial::add_term: wrong power count");
    terms.push_back({coeff, std::move(powers)});
  }

  T eval(const Eigen::VectorXd& z) const {
    if (static_cast<int>(z.size()) != nvars)
      throw ContractViolation("Polynomial::eval: wrong variable count");
    T acc{};
    for (const auto& tm : terms) {
      T v = tm.coeff;
      for (int i = 0; i < nvars; ++i)
        for (int k = 0; k < tm.powers[i]; ++k) v *= z(i);
      acc += v;
    }
    return acc;
  }

  Polynomial deriv(int var) const {
    Polynomial out(nvars);
    for (const auto& tm : terms) {
      if (tm.powers[var] == 0) continue;
      auto p = tm.powers;
      T c = tm.coeff * static_cast<double>(p[var]);
      p[var] -= 1;
      out.terms.push_back({c, std::move(p)});
    }
    return out;
  }
};

using PolyR = Polynomial<double>;
using PolyC = Polynomial<std::complex<double>>;

// One term of a large-parameter symbol table:
//   coeff * lambda^lam_exp * log(lambda)^log_pow * t^pt * prod x_i^px * prod (nu - xi0)_i^pnu
// Evaluated in cosphere-scaled fiber variables nu; the grading carries the
// symbol-class growth of derivatives in the large parameter.
template <typename T>
struct GradedPoly {
  struct Term {
    T coeff;
    double lam_exp = 0.0;
    int log_pow = 0;
    int pt = 0;
    std::vector<int> px;   // size d
    std::vector<int> pnu;  // size d
  };

  int d = 0;  // base dimension
  std::vector<Term> terms;

  GradedPoly() = default;
  explicit GradedPoly(int d) : d(d) {}

  static double lam_factor(double lam_exp, int log_pow, double lam) {
    double f = std::pow(lam, lam_exp);
    for (int k = 0; k < log_pow; ++k) f *= std::log(lam);
    return f;
  }

  T eval(double t, const Eigen::VectorXd& x, const Eigen::VectorXd& dnu, double lam) const {
    T acc{};
    for (const auto& tm : terms) {
      T v = tm.coeff * lam_factor(tm.lam_exp, tm.log_pow, lam);
      for (int k = 0; k < tm.pt; ++k) v *= t;
      for (int i = 0; i < d; ++i) {
        for (int k = 0; k < tm.px[i]; ++k) v *= x(i);
        for (int k = 0; k < tm.pnu[i]; ++k) v *= dnu(i);
      }
      acc += v;
    }
    return acc;
  }

  GradedPoly deriv_t() const {
    GradedPoly out(d);
    for (const auto& tm : terms) {
      if (tm.pt == 0) continue;
      Term t2 = tm;
      t2.coeff *= static_cast<double>(tm.pt);
      t2.pt -= 1;
      out.terms.push_back(std::move(t2));
    }
    return out;
  }
  GradedPoly deriv_x(int i) const {
    GradedPoly out(d);
    for (const auto& tm : terms) {
      if (tm.px[i] == 0) continue;
      Term t2 = tm;
      t2.coeff *= static_cast<double>(tm.px[i]);
      t2.px[i] -= 1;
      out.terms.push_back(std::move(t2));
    }
    return out;
  }
  GradedPoly deriv_nu(int i) const {
    GradedPoly out(d);
    for (const auto& tm : terms) {
      if (tm.pnu[i] == 0) continue;
      Term t2 = tm;
      t2.coeff *= static_cast<double>(tm.pnu[i]);
      t2.pnu[i] -= 1;
      out.terms.push_back(std::move(t2));
    }
    return out;
  }

  bool empty() const { return terms.empty(); }
};

using GradedPolyR = GradedPoly<double>;
using GradedPolyC = GradedPoly<std::complex<double>>;

}  // namespace mlq
