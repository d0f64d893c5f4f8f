#include "mlq/limit_diagnostics.hpp"

#include <cmath>

namespace mlq {

namespace {

// least-squares slope of y against x
double lsq_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const size_t n = x.size();
  double mx = 0, my = 0;
  for (size_t i = 0; i < n; ++i) { mx += x[i]; my += y[i]; }
  mx /= n; my /= n;
  double num = 0, den = 0;
  for (size_t i = 0; i < n; ++i) {
    num += (x[i] - mx) * (y[i] - my);
    den += (x[i] - mx) * (x[i] - mx);
  }
  return den > 0 ? num / den : 0.0;
}

// cumulative integral on a uniform grid: composite Simpson on pairs, with a
// cubic-interpolated half rule for the odd offsets
std::vector<double> cumulative_simpson(const std::vector<double>& f, double h) {
  const int n = static_cast<int>(f.size());
  std::vector<double> F(n, 0.0);
  for (int i = 2; i < n; i += 2)
    F[i] = F[i - 2] + h / 3.0 * (f[i - 2] + 4.0 * f[i - 1] + f[i]);
  for (int i = 1; i < n; i += 2) {
    if (i + 1 < n) {
      // integral over [i-1, i] from the Simpson parabola on [i-1, i+1]
      F[i] = F[i - 1] + h / 12.0 * (5.0 * f[i - 1] + 8.0 * f[i] - f[i + 1]);
    } else {
      F[i] = F[i - 1] + h / 12.0 * (-f[i - 2] + 8.0 * f[i - 1] + 5.0 * f[i]);
    }
  }
  return F;
}

}  // namespace

double kappa_min(const SymbolModel& model, const Bicharacteristic& curve) {
  (void)model;
  if (curve.size() < 1) throw ContractViolation("kappa_min: empty curve");
  int imin = 0;
  for (int i = 1; i < curve.size(); ++i)
    if (curve.hp_norms[i] < curve.hp_norms[imin]) imin = i;
  double best = curve.hp_norms[imin];
  if (imin > 0 && imin + 1 < curve.size()) {
    // vertex of the parabola through the three samples around the argmin
    const double s0 = curve.s[imin - 1], s1 = curve.s[imin], s2 = curve.s[imin + 1];
    const double f0 = curve.hp_norms[imin - 1], f1 = curve.hp_norms[imin],
                 f2 = curve.hp_norms[imin + 1];
    const double d0 = (f1 - f0) / (s1 - s0), d1 = (f2 - f1) / (s2 - s1);
    const double dd = (d1 - d0) / (s2 - s0);
    if (dd > 0) {
      const double sm = 0.5 * (s0 + s1) - d0 / (2.0 * dd);  // parabola vertex
      if (sm > s0 && sm < s2) {
        const double fv = f0 + d0 * (sm - s0) + dd * (sm - s0) * (sm - s1);
        best = std::min(best, fv);
      }
    }
  }
  return best;
}

Cond2Result cond2_integral(const SymbolModel& model, const Bicharacteristic& curve,
                           Cond2StartPolicy policy) {
  if (curve.size() < 5) throw ContractViolation("cond2_integral: curve too short");
  if (curve.closed())
    throw ContractViolation("cond2_integral: closed curve has no boundary; not supported");

  const double kappa = kappa_min(model, curve);
  const double logk = std::abs(std::log(std::max(kappa, 1e-300)));
  if (logk < 1e-6)
    throw NormalizationDegenerate("cond2_integral: |log kappa| < 1e-6");

  // resample onto a uniform arc grid and integrate Im p_s / |H_p|
  const int n = std::max(257, curve.size() | 1);
  const double s0 = curve.s.front(), s1 = curve.s.back();
  const double h = (s1 - s0) / (n - 1);
  std::vector<double> f(n);
  for (int i = 0; i < n; ++i) {
    PhasePoint w = curve_point(curve, s0 + i * h);
    const double hp = hamilton_field(model, w).norm();
    f[i] = eval_subprincipal(model, w).imag() / hp;
  }
  std::vector<double> J = cumulative_simpson(f, h);

  int iw = 0;
  if (policy == Cond2StartPolicy::ArgminRunningIntegral) {
    for (int i = 1; i < n; ++i)
      if (J[i] < J[iw]) iw = i;
  }
  const double plus = J[n - 1] - J[iw];
  const double minus = J[0] - J[iw];
  Cond2Result out;
  out.value = std::min(plus, minus) / logk;
  out.start_s = s0 + iw * h;
  return out;
}

std::optional<SignChange> sign_change_detect(const SymbolModel& model,
                                             const Bicharacteristic& curve,
                                             double noise_floor) {
  double prev = 0.0, prev_s = 0.0;
  bool have_prev = false;
  for (int i = 0; i < curve.size(); ++i) {
    const double v = eval_subprincipal(model, curve.pts[i]).imag();
    if (std::abs(v) <= noise_floor) continue;
    if (have_prev && prev * v < 0.0) {
      SignChange sc;
      // linear interpolation of the crossing
      sc.s = prev_s + (curve.s[i] - prev_s) * (-prev) / (v - prev);
      sc.direction = (prev < 0.0) ? SignDirection::MinusToPlus : SignDirection::PlusToMinus;
      return sc;
    }
    prev = v;
    prev_s = curve.s[i];
    have_prev = true;
  }
  return std::nullopt;
}

double curvature_bound(const SymbolModel& model, const Bicharacteristic& curve,
                       const SectionBasis& section) {
  if (!section) throw ContractViolation("curvature_bound: missing section");
  double worst = 0.0;
  for (int i = 0; i < curve.size(); ++i) {
    const PhasePoint& w = curve.pts[i];
    Eigen::VectorXd g = gradient(model, w);
    const double gn = g.norm();
    if (gn <= 0.0) throw DegenerateHamiltonField("curvature_bound: |grad p| = 0 on curve");
    Eigen::MatrixXd V = section(i);
    // orthonormalize the section basis
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(V);
    Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(V.rows(), V.cols());
    Eigen::MatrixXd H = hessian(model, w);
    Eigen::MatrixXd M = H * Q;
    M -= g / (gn * gn) * (g.transpose() * M);  // project rows along grad p
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(M);
    worst = std::max(worst, svd.singularValues()(0) / gn);
  }
  return worst;
}

FamilyReport family_report(const std::vector<SymbolModel>& models,
                           const std::vector<Bicharacteristic>& curves,
                           const std::vector<SectionBasis>& sections,
                           const DiagnosticsOptions& opts) {
  if (curves.empty()) throw ContractViolation("family_report: empty family");
  if (models.size() != 1 && models.size() != curves.size())
    throw ContractViolation("family_report: need one model or one per curve");

  FamilyReport rep;
  const int J = static_cast<int>(curves.size());
  for (int j = 0; j < J; ++j) {
    const SymbolModel& m = models[models.size() == 1 ? 0 : j];
    const Bicharacteristic& c = curves[j];
    FamilyDiagnostics d;
    d.family_index = c.family_index;
    d.kappa = kappa_min(m, c);
    d.lambda = std::pow(d.kappa, -1.0 / opts.epsilon);
    auto grad_field = [&m](const PhasePoint& w) { return normalized_gradient(m, w); };
    for (int k = 1; k <= opts.k_max; ++k) {
      auto der = derivative_along_flow(m, c, grad_field, k);
      d.ck_bounds.push_back(der.magnitudes().maxCoeff());
    }
    if (j < static_cast<int>(sections.size()) && sections[j])
      d.curvature_bound = curvature_bound(m, c, sections[j]);
    auto c2 = cond2_integral(m, c);
    d.cond2_value = c2.value;
    d.cond2_start_s = c2.start_s;
    d.sign_change = sign_change_detect(m, c);
    rep.diagnostics.push_back(std::move(d));
  }

  // verdict
  bool ok = true;
  const auto& first = rep.diagnostics.front();
  const auto& last = rep.diagnostics.back();

  bool kappa_down = last.kappa <= 0.5 * first.kappa;
  for (int j = 1; j < J; ++j)
    if (rep.diagnostics[j].kappa > rep.diagnostics[j - 1].kappa * (1.0 + 1e-9)) kappa_down = false;
  if (!kappa_down) {
    ok = false;
    rep.reasons.push_back("kappa_j does not decrease toward 0 along the family");
  }

  for (int k = 0; k < opts.k_max; ++k) {
    const double C = opts.ck_C > 0 ? opts.ck_C : 10.0 * first.ck_bounds[k] + 1.0;
    for (int j = 0; j < J; ++j) {
      if (rep.diagnostics[j].ck_bounds[k] > C) {
        ok = false;
        rep.reasons.push_back("hpcond violated: |H^" + std::to_string(k + 1) +
                              " grad| grows beyond C on curve " + std::to_string(j));
        break;
      }
    }
  }

  {
    const double C = opts.curvature_C > 0 ? opts.curvature_C : 10.0 * first.curvature_bound + 1.0;
    for (int j = 0; j < J; ++j) {
      if (rep.diagnostics[j].curvature_bound > C) {
        ok = false;
        rep.reasons.push_back("curvature bound (cond00) violated on curve " + std::to_string(j));
        break;
      }
    }
  }

  {
    // cond2 must diverge: fitted slope over the last half of the family
    std::vector<double> xs, ys;
    for (int j = J / 2; j < J; ++j) {
      xs.push_back(static_cast<double>(j));
      ys.push_back(rep.diagnostics[j].cond2_value);
    }
    const double slope = (xs.size() >= 2) ? lsq_slope(xs, ys) : 0.0;
    if (slope < opts.min_slope) {
      ok = false;
      rep.reasons.push_back("cond2 functional does not diverge (fitted slope " +
                            std::to_string(slope) + " < " + std::to_string(opts.min_slope) + ")");
    }
  }

  {
    const auto& sc = last.sign_change;
    if (!sc || sc->direction != SignDirection::MinusToPlus) {
      ok = false;
      rep.reasons.push_back("no minus-to-plus sign change of Im p_s on the tail curves");
    }
  }

  rep.verdict = ok ? FamilyVerdict::NonSolvabilityWitness : FamilyVerdict::NoWitness;
  if (ok) rep.reasons.push_back("kappa decreasing, derivative bounds stay bounded, cond2 diverges");
  return rep;
}

}  // namespace mlq
