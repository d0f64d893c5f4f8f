#include "mlq/quasimode.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>

namespace mlq {

namespace {

int next_pow2(double v) {
  int n = 16;
  while (n < v) n *= 2;
  return n;
}

QuasimodeGrid make_grid(const PreparedModel& pm, double lambda, const QuasimodeOptions& opts) {
  QuasimodeGrid g;
  g.lambda = lambda;
  const double rsup = opts.support_c * std::pow(lambda, -pm.expo.delta);
  const double half = opts.box_factor * rsup;
  // spacing for >= points_per_wavelength points per 2 pi / lambda
  const double dx_max = 2.0 * M_PI / (opts.points_per_wavelength * lambda);
  g.x.n = next_pow2(2.0 * half / dx_max);
  g.x.step = 2.0 * half / g.x.n;
  g.x.start = -half;

  const double t_amp = std::max(std::abs(pm.t_min), std::abs(pm.t_max));
  const double t_half = (1.0 + opts.t_pad) * t_amp;
  g.t.n = opts.time_points;
  g.t.step = 2.0 * t_half / g.t.n;
  g.t.start = -t_half;
  return g;
}

// stripped expansion residual G of the partial amplitude (no cutoff):
//   G = (lam dt_omega - r) Phi + D_t Phi - s_dnu . D_x Phi + q0 Phi
//       + (1/2lam) s_dnunu (D_x^2 Phi + i lam Phi dx^2 omega)
// Phi and D_t Phi are supplied on the full x row (zero outside the window).
Eigen::MatrixXcd expansion_residual(const PreparedModel& pm, const Quasimode& qm,
                                    const Eigen::MatrixXcd& Phi, const Eigen::MatrixXcd& dtPhi) {
  const auto& g = qm.grid;
  const double lam = qm.lambda;
  const int nt = g.t.n, nx = g.x.n;
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(nt, nx);

#pragma omp parallel for schedule(static)
  for (int it = 0; it < nt; ++it) {
    const double t = g.t.point(it);
    const cplx q0t = pm.q0(t, lam);
    // spectral x derivatives of the amplitude row
    VectorXcd row = Phi.row(it).transpose();
    VectorXcd d1 = spectral_dx(g.x, row);
    VectorXcd d2 = spectral_dx(g.x, d1);
    Eigen::VectorXd xv(1), nv(1);
    for (int j = qm.col_lo; j <= qm.col_hi; ++j) {
      const int wj = j - qm.col_lo + qm.pad;
      xv(0) = g.x.point(j);
      nv(0) = qm.xi0 + qm.domega(it, wj);
      const double sv = pm.s(t, xv, nv, lam);
      const double sdn = pm.s_dnu(t, xv, nv, lam)(0);
      const double snn = pm.s_dnunu(t, xv, nv, lam)(0, 0);
      // dt omega through the solved eikonal equation: the first expansion
      // term vanishes by construction; its defect is reported separately by
      // eikonal_residual
      const double dtom = sv;
      cplx acc = lam * (dtom - sv) * Phi(it, j);
      acc += dtPhi(it, j);
      acc += -sdn * d1(j);
      acc += q0t * Phi(it, j);
      acc += 0.5 * (snn / lam) * (d2(j) + cplx(0, 1) * lam * Phi(it, j) * qm.d2omega(it, wj));
      out(it, j) = acc;
    }
  }
  return out;
}

}  // namespace

Quasimode assemble(const PreparedModel& pm, double lambda, const QuasimodeOptions& opts) {
  if (pm.base_dim != 1)
    throw ContractViolation("assemble: only base dimension 1 is supported");
  pm.expo.validate(true);  // relation was checked at construction

  Quasimode qm;
  qm.grid = make_grid(pm, lambda, opts);
  qm.lambda = lambda;
  qm.expo = pm.expo;
  qm.M = opts.corrections;
  qm.xi0 = pm.xi0(0);
  qm.prefactor = std::pow(lambda, 0.5 * pm.expo.delta);  // n = 2

  const auto& g = qm.grid;
  if (g.x.nyquist() < 4.0 * lambda)
    throw GridTooCoarse("assemble: x grid Nyquist below 4 lambda");
  if (g.x.n > (1 << 20) || g.t.n > (1 << 18))
    throw GridTooCoarse("assemble: grid would be unreasonably large");

  // amplitude support window
  qm.support_radius = opts.support_c * std::pow(lambda, -pm.expo.delta);
  qm.col_lo = g.x.n, qm.col_hi = -1;
  for (int j = 0; j < g.x.n; ++j) {
    if (std::abs(g.x.point(j)) <= qm.support_radius) {
      qm.col_lo = std::min(qm.col_lo, j);
      qm.col_hi = std::max(qm.col_hi, j);
    }
  }
  if (qm.col_hi < qm.col_lo) throw GridTooCoarse("assemble: empty support window");

  // eikonal phase on the grid
  EikonalOptions eo;
  eo.fan_nodes = opts.fan_nodes;
  eo.atol = opts.eikonal_atol;
  eo.rtol = opts.eikonal_atol;
  auto fan = solve_characteristics(pm, lambda, g.t_nodes(), eo);
  qm.eik = std::make_shared<EikonalSolution>(pm, std::move(fan), eo);

  const int wn = qm.wcols() + 2 * qm.pad;
  qm.omega.resize(g.t.n, wn);
  qm.domega.resize(g.t.n, wn);
  qm.d2omega.resize(g.t.n, wn);
#pragma omp parallel for schedule(static)
  for (int it = 0; it < g.t.n; ++it) {
    for (int w = 0; w < wn; ++w) {
      const double x = g.x.point(qm.col_lo - qm.pad + w);
      qm.omega(it, w) = qm.eik->omega_at(it, x);
      qm.domega(it, w) = qm.eik->grad_at(it, x);
    }
    // second x derivative by 4th-order differences of the gradient
    for (int w = 0; w < wn; ++w) {
      const int wl = std::clamp(w, 2, wn - 3);
      qm.d2omega(it, w) = (qm.domega(it, wl - 2) - 8 * qm.domega(it, wl - 1) +
                           8 * qm.domega(it, wl + 1) - qm.domega(it, wl + 2)) /
                          (12.0 * g.x.step);
    }
  }

  // transport pieces
  const auto t_nodes = g.t_nodes();
  qm.q0v.resize(g.t.n);
  for (int it = 0; it < g.t.n; ++it) qm.q0v(it) = pm.q0(t_nodes[it], lambda);
  qm.B = compute_B(qm.q0v, t_nodes);
  qm.Yt = straighten_Dp(pm, lambda, t_nodes);
  if (!qm.Yt.identity && opts.corrections > 0)
    throw ContractViolation(
        "assemble: transport corrections with a nontrivial straightening are not supported; "
        "straighten the prepared model first");
  if (opts.use_cutoff) {
    qm.chi = cutoff_chi(pm.t_min, pm.t_max, std::pow(lambda, -pm.expo.epsilon), lambda);
  } else {
    qm.chi.active = false;
  }

  // x grid restricted to the window
  Eigen::VectorXd xs_win(qm.wcols());
  for (int j = 0; j < qm.wcols(); ++j) xs_win(j) = g.x.point(qm.col_lo + j);

  const double lam_delta = std::pow(lambda, pm.expo.delta);
  std::vector<Eigen::MatrixXcd> phis_full;  // full rows for derivative work
  {
    Eigen::MatrixXcd phi0 = solve_phi0(qm.B, qm.Yt, t_nodes, xs_win, lam_delta / opts.support_c);
    // full-row embed
    Eigen::MatrixXcd full = Eigen::MatrixXcd::Zero(g.t.n, g.x.n);
    full.middleCols(qm.col_lo, qm.wcols()) = phi0;
    phis_full.push_back(std::move(full));
  }

  // exact D_t of phi_0: -q0 phi0 (identity straightening)
  std::vector<Eigen::MatrixXcd> dt_full;
  {
    Eigen::MatrixXcd d = phis_full[0];
    for (int it = 0; it < g.t.n; ++it) d.row(it) *= -qm.q0v(it);
    dt_full.push_back(std::move(d));
  }

  const double rho = pm.expo.rho;
  for (int k = 1; k <= qm.M; ++k) {
    // partial amplitude and its exact time derivative
    Eigen::MatrixXcd Phi = phis_full[0];
    Eigen::MatrixXcd dtPhi = dt_full[0];
    for (int j = 1; j < k; ++j) {
      const double sc = std::pow(lambda, -j * rho);
      Phi += sc * phis_full[j];
      dtPhi += sc * dt_full[j];
    }
    Eigen::MatrixXcd G = expansion_residual(pm, qm, Phi, dtPhi);
    // source for the k-th correction: R_k = -exp(+iB) G  (window columns)
    Eigen::MatrixXcd Rk(g.t.n, qm.wcols());
    for (int it = 0; it < g.t.n; ++it) {
      const cplx eB = std::exp(cplx(0, 1) * qm.B(it));
      for (int j = 0; j < qm.wcols(); ++j) Rk(it, j) = -eB * G(it, qm.col_lo + j);
    }
    Eigen::MatrixXcd phik = solve_phik(qm.B, Rk, t_nodes, k, lambda, rho);
    Eigen::MatrixXcd full = Eigen::MatrixXcd::Zero(g.t.n, g.x.n);
    full.middleCols(qm.col_lo, qm.wcols()) = phik;
    // exact D_t: (D_t + q0) phi_k = lam^{k rho} S_k with S_k = -G
    Eigen::MatrixXcd d = Eigen::MatrixXcd::Zero(g.t.n, g.x.n);
    const double sc = std::pow(lambda, k * rho);
    for (int it = 0; it < g.t.n; ++it)
      for (int j = qm.col_lo; j <= qm.col_hi; ++j)
        d(it, j) = -sc * G(it, j) - qm.q0v(it) * full(it, j);
    phis_full.push_back(std::move(full));
    dt_full.push_back(std::move(d));
  }

  // store window views
  for (int k = 0; k <= qm.M; ++k) {
    qm.phis.push_back(phis_full[k].middleCols(qm.col_lo, qm.wcols()));
    qm.dt_phis.push_back(dt_full[k].middleCols(qm.col_lo, qm.wcols()));
  }

  // assemble u
  qm.values = Eigen::MatrixXcd::Zero(g.t.n, g.x.n);
#pragma omp parallel for schedule(static)
  for (int it = 0; it < g.t.n; ++it) {
    const double t = g.t.point(it);
    const double chi = qm.chi(t);
    if (chi == 0.0) continue;
    for (int j = qm.col_lo; j <= qm.col_hi; ++j) {
      cplx amp(0, 0);
      for (int k = 0; k <= qm.M; ++k)
        amp += std::pow(lambda, -k * rho) * qm.phis[k](it, j - qm.col_lo);
      if (amp == cplx(0, 0)) continue;
      const double x = g.x.point(j);
      const double phase = lambda * (x * qm.xi0 + qm.omega_at(it, j));
      qm.values(it, j) = qm.prefactor * std::exp(cplx(0, phase)) * chi * amp;
    }
  }
  return qm;
}

namespace {

// D_t of the cutoff amplitude: chi * (exact dt of the sum) + chi'/i * sum
Eigen::MatrixXcd cutoff_amplitude(const Quasimode& qm, Eigen::MatrixXcd* dt_out) {
  const auto& g = qm.grid;
  const double rho = qm.expo.rho;
  Eigen::MatrixXcd Phi = Eigen::MatrixXcd::Zero(g.t.n, g.x.n);
  Eigen::MatrixXcd dtPhi = Eigen::MatrixXcd::Zero(g.t.n, g.x.n);
  for (int k = 0; k <= qm.M; ++k) {
    const double sc = std::pow(qm.lambda, -k * rho);
    Phi.middleCols(qm.col_lo, qm.wcols()) += sc * qm.phis[k];
    dtPhi.middleCols(qm.col_lo, qm.wcols()) += sc * qm.dt_phis[k];
  }
  const double h = 1e-6;
  for (int it = 0; it < g.t.n; ++it) {
    const double t = g.t.point(it);
    const double chi = qm.chi(t);
    const double dchi = (qm.chi(t + h) - qm.chi(t - h)) / (2.0 * h);
    const cplx dchi_i = cplx(0, -1) * dchi;  // (1/i) chi'
    dtPhi.row(it) = chi * dtPhi.row(it) + dchi_i * Phi.row(it);
    Phi.row(it) *= chi;
  }
  if (dt_out) *dt_out = std::move(dtPhi);
  return Phi;
}

Eigen::MatrixXcd carrier(const Quasimode& qm, const Eigen::MatrixXcd& stripped) {
  const auto& g = qm.grid;
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(g.t.n, g.x.n);
  for (int it = 0; it < g.t.n; ++it)
    for (int j = qm.col_lo; j <= qm.col_hi; ++j) {
      if (stripped(it, j) == cplx(0, 0)) continue;
      const double x = g.x.point(j);
      const double phase = qm.lambda * (x * qm.xi0 + qm.omega_at(it, j));
      out(it, j) = qm.prefactor * std::exp(cplx(0, phase)) * stripped(it, j);
    }
  return out;
}

Eigen::MatrixXcd apply_direct(const PreparedModel& pm, const Quasimode& qm) {
  const auto& g = qm.grid;
  const double lam = qm.lambda;
  const int nt = g.t.n, nx = g.x.n;
  Eigen::MatrixXcd out(nt, nx);

  // D_t term: spectral derivative along t per x column
  {
    std::vector<double> tf(nt);
    for (int k = 0; k < nt; ++k) tf[k] = g.t.freq(k);
#pragma omp parallel for schedule(static)
    for (int j = 0; j < nx; ++j) {
      VectorXcd col = qm.values.col(j);
      fft_forward(col.data(), nt);
      for (int k = 0; k < nt; ++k) col(k) *= tf[k];
      fft_inverse(col.data(), nt);
      out.col(j) = col / static_cast<double>(nt);
    }
  }

  // - r(t, x, D) u + q0 u per slice
  if (!pm.slice_table)
    throw ContractViolation("apply_operator(Direct): prepared model has no slice table");
  if (nx > 1 << 15)
    throw GridTooCoarse("apply_operator(Direct): grid too large for the oscillatory sum");

  std::vector<double> dnu(nx);
  for (int m = 0; m < nx; ++m) dnu[m] = g.x.freq(m) / lam - qm.xi0;

  for (int it = 0; it < nt; ++it) {
    // skip empty rows
    if (qm.values.row(it).isZero(0)) {
      for (int j = 0; j < nx; ++j) out(it, j) += pm.q0(g.t.point(it), lam) * qm.values(it, j);
      continue;
    }
    const auto terms = pm.slice_table(g.t.point(it), lam);
    // group by the nu power
    int bmax = 0;
    for (const auto& tm : terms) bmax = std::max(bmax, tm.nupow);
    VectorXcd uhat = dft_slice(g.x, qm.values.row(it).transpose());
    const cplx q0t = pm.q0(g.t.point(it), lam);

    Eigen::VectorXcd acc = Eigen::VectorXcd::Zero(nx);
    for (int b = 0; b <= bmax; ++b) {
      bool used = false;
      for (const auto& tm : terms) used |= (tm.nupow == b);
      if (!used) continue;
      VectorXcd w;
      if (b == 0) {
        w = qm.values.row(it).transpose();  // identity multiplier
      } else {
        VectorXcd v(nx);
        for (int m = 0; m < nx; ++m) {
          double f = 1.0;
          for (int q = 0; q < b; ++q) f *= dnu[m];
          v(m) = f * uhat(m);
        }
        w = osc_sum_parallel(g.x, v);
      }
      for (int j = 0; j < nx; ++j) {
        const double x = g.x.point(j);
        double xc = 0.0;
        for (const auto& tm : terms) {
          if (tm.nupow != b) continue;
          double xp = tm.coeff;
          for (int q = 0; q < tm.xpow; ++q) xp *= x;
          xc += xp;
        }
        acc(j) += xc * w(j);
      }
    }
    for (int j = 0; j < nx; ++j)
      out(it, j) += -lam * acc(j) + q0t * qm.values(it, j);
  }

  // The slice symbol is polynomial in xi, so the continuum operator is local:
  // P* u is supported in supp u.  Mask the spectral ringing outside the
  // amplitude window (which the growing x-parts of the symbol would amplify).
  for (int j = 0; j < nx; ++j) {
    if (j < qm.col_lo - qm.pad || j > qm.col_hi + qm.pad) out.col(j).setZero();
  }
  return out;
}

}  // namespace

Eigen::MatrixXcd apply_operator(const PreparedModel& pm, const Quasimode& qm, Backend backend) {
  if (backend == Backend::Direct) return apply_direct(pm, qm);
  Eigen::MatrixXcd dtPhi;
  Eigen::MatrixXcd Phi = cutoff_amplitude(qm, &dtPhi);
  Eigen::MatrixXcd G = expansion_residual(pm, qm, Phi, dtPhi);
  return carrier(qm, G);
}

double sobolev_norm(const QuasimodeGrid& grid, const Eigen::MatrixXcd& field, double s,
                    double boundary_tol) {
  const int nt = grid.t.n, nx = grid.x.n;
  if (field.rows() != nt || field.cols() != nx)
    throw ContractViolation("sobolev_norm: field does not match the grid");

  // x-periodization guard: the field must vanish at the sides of the box
  double boundary = 0.0, peak = 0.0;
  for (int it = 0; it < nt; ++it)
    boundary = std::max({boundary, std::abs(field(it, 0)), std::abs(field(it, nx - 1))});
  peak = field.cwiseAbs().maxCoeff();
  if (peak > 0.0 && boundary > boundary_tol * peak)
    throw PeriodizationError("sobolev_norm: field touches the box boundary");

  std::vector<double> slice_sums(nt, 0.0);
#pragma omp parallel for schedule(static)
  for (int it = 0; it < nt; ++it) {
    VectorXcd uh = dft_slice(grid.x, field.row(it).transpose());
    double acc = 0.0;
    for (int m = 0; m < nx; ++m) {
      const double xi = grid.x.freq(m);
      acc += std::pow(1.0 + xi * xi, s) * std::norm(uh(m));
    }
    slice_sums[it] = acc * grid.x.dfreq() / (2.0 * M_PI);
  }
  double total = 0.0;
  for (int it = 0; it < nt; ++it) total += slice_sums[it];
  return std::sqrt(total * grid.t.step);
}

double frequency_localization(const QuasimodeGrid& grid, const Eigen::MatrixXcd& field,
                              double xi0) {
  const int nt = grid.t.n, nx = grid.x.n;
  const double lam = grid.lambda;
  std::vector<double> in_sums(nt, 0.0), tot_sums(nt, 0.0);
#pragma omp parallel for schedule(static)
  for (int it = 0; it < nt; ++it) {
    VectorXcd uh = dft_slice(grid.x, field.row(it).transpose());
    double in = 0.0, tot = 0.0;
    for (int m = 0; m < nx; ++m) {
      const double mass = std::norm(uh(m));
      tot += mass;
      if (std::abs(grid.x.freq(m) - lam * xi0) <= 0.5 * lam) in += mass;
    }
    in_sums[it] = in;
    tot_sums[it] = tot;
  }
  double in = 0.0, tot = 0.0;
  for (int it = 0; it < nt; ++it) { in += in_sums[it]; tot += tot_sums[it]; }
  return tot > 0.0 ? in / tot : 0.0;
}

namespace {

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

}  // namespace

DecayReport decay_fit(const PreparedModel& pm, const std::vector<double>& sweep,
                      const DecayOptions& opts) {
  if (sweep.size() < 5 || sweep.back() / sweep.front() < 100.0)
    throw ContractViolation("decay_fit: sweep must have >= 5 values spanning >= 2 decades");
  for (size_t i = 1; i < sweep.size(); ++i)
    if (sweep[i] <= sweep[i - 1]) throw ContractViolation("decay_fit: sweep must be ascending");

  DecayReport rep;
  rep.N = opts.N;
  rep.nu = opts.nu;
  rep.M = opts.quasimode.corrections;
  rep.ratio_growth_min = opts.ratio_growth_min;

  for (double lam : sweep) {
    LambdaRun run;
    run.lambda = lam;
    try {
      Quasimode qm = assemble(pm, lam, opts.quasimode);
      run.grid_nx = qm.grid.x.n;
      run.grid_nt = qm.grid.t.n;

      // the direct quantization is authoritative up to the oscillatory-sum
      // grid limit; above it the expansion backend takes over
      const bool direct_ok = qm.grid.x.n <= opts.quasimode.osc_grid_limit;
      Eigen::MatrixXcd expans = apply_operator(pm, qm, Backend::Expansion);
      Eigen::MatrixXcd direct;
      if (direct_ok) direct = apply_operator(pm, qm, Backend::Direct);
      const Eigen::MatrixXcd& authoritative = direct_ok ? direct : expans;

      run.u_l2 = sobolev_norm(qm.grid, qm.values, 0.0);
      run.u_low = sobolev_norm(qm.grid, qm.values, -static_cast<double>(opts.N));
      run.residual_nu = sobolev_norm(qm.grid, authoritative, opts.nu, 1e-3);
      run.ratio = run.u_low / run.residual_nu;
      if (direct_ok) {
        const double dnorm = sobolev_norm(qm.grid, direct, 0.0, 1e-3);
        Eigen::MatrixXcd diff = direct - expans;
        run.backend_rel_diff = dnorm > 0 ? sobolev_norm(qm.grid, diff, 0.0, 1e-2) / dnorm : 0.0;
      }
      run.freq_mass = frequency_localization(qm.grid, qm.values, qm.xi0);
      {
        Eigen::VectorXd xs(9);
        for (int i = 0; i < 9; ++i)
          xs(i) = qm.eik->fan().domain_radius * (2.0 * i / 8.0 - 1.0);
        run.eikonal_res = eikonal_residual(pm, lam, sample_eikonal(*qm.eik, xs));
        run.sup_omega = qm.eik->sup_omega();
      }
      run.ok = true;
    } catch (const std::exception& e) {
      run.ok = false;
      run.error = e.what();
    }
    rep.runs.push_back(std::move(run));
  }

  std::vector<double> ll, lu, lr, lq;
  for (const auto& r : rep.runs) {
    if (!r.ok) continue;
    ll.push_back(std::log(r.lambda));
    lu.push_back(std::log(r.u_low));
    lr.push_back(std::log(r.residual_nu));
    lq.push_back(std::log(r.ratio));
  }
  if (ll.size() < 4) throw ScenarioError("decay_fit: fewer than 4 successful runs");
  rep.slope_u_low = lsq_slope(ll, lu);
  rep.slope_residual = lsq_slope(ll, lr);
  rep.slope_ratio = lsq_slope(ll, lq);

  // monotone ratio over the last 4 successful runs
  rep.monotone_tail = true;
  for (size_t i = lq.size() - 3; i < lq.size(); ++i)
    if (lq[i] < lq[i - 1]) rep.monotone_tail = false;

  rep.degenerate = true;
  for (const auto& r : rep.runs)
    if (r.ok && r.residual_nu > opts.degenerate_floor * std::max(r.u_l2, 1e-300))
      rep.degenerate = false;

  rep.witness = !rep.degenerate && rep.monotone_tail && rep.slope_ratio >= opts.ratio_growth_min;
  return rep;
}

}  // namespace mlq
