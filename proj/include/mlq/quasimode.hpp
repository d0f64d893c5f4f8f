#pragma once

#include <memory>

#include "mlq/eikonal.hpp"
#include "mlq/fourier.hpp"
#include "mlq/transport.hpp"

namespace mlq {

struct QuasimodeOptions {
  int points_per_wavelength = 8;  // x-grid resolution: Nyquist >= 4 lambda
  double box_factor = 4.0;        // half box = box_factor * support radius
  int time_points = 512;          // power of two
  double t_pad = 0.1;             // t box stretches this fraction beyond I
  double support_c = 1.0;         // amplitude support radius = c lam^{-delta}
  int corrections = 3;            // M
  int fan_nodes = 33;
  int osc_grid_limit = 4096;      // direct backend allowed up to this many x points
  double eikonal_atol = 1e-13;
  bool use_cutoff = true;         // false: chi == 1 (degenerate controls)
};

struct QuasimodeGrid {
  SpectralDim t, x;
  double lambda = 0.0;

  std::vector<double> t_nodes() const {
    std::vector<double> v(t.n);
    for (int i = 0; i < t.n; ++i) v[i] = t.point(i);
    return v;
  }
};

// WKB quasimode on a tensor grid, together with the construction pieces the
// expansion backend re-uses.
struct Quasimode {
  QuasimodeGrid grid;
  double lambda = 0.0;
  Exponents expo;
  int M = 0;
  double xi0 = 1.0;
  double prefactor = 1.0;  // lambda^{(n-1) delta / 2}

  Eigen::MatrixXcd values;  // u on the grid (row = t index, column = x index)

  // construction data (amplitude window columns [col_lo, col_hi])
  int col_lo = 0, col_hi = 0;             // inclusive window of support columns
  int pad = 4;                            // extra omega columns on each side
  Eigen::MatrixXd omega, domega, d2omega; // on [col_lo - pad, col_hi + pad]
  Eigen::VectorXcd B, q0v;
  std::vector<Eigen::MatrixXcd> phis;     // window matrices, k = 0..M
  std::vector<Eigen::MatrixXcd> dt_phis;  // exact D_t of each phi_k
  Straightening Yt;
  Cutoff chi;
  std::shared_ptr<EikonalSolution> eik;
  double support_radius = 0.0;
  double max_phik_support_leak = 0.0;     // post-hoc support check

  int wcols() const { return col_hi - col_lo + 1; }
  double omega_at(int it, int col) const { return omega(it, col - col_lo + pad); }
};

Quasimode assemble(const PreparedModel& pm, double lambda, const QuasimodeOptions& opts = {});

enum class Backend { Expansion, Direct };

// P* u for the prepared operator D_t - r(t,x,D) + q0(t): either through the
// phase-amplitude expansion or through the discrete slice quantization.
Eigen::MatrixXcd apply_operator(const PreparedModel& pm, const Quasimode& mode, Backend backend);

// L2 Sobolev norm of order s: DFT in x per t slice, weight <xi>^{2s},
// trapezoid in t.  Throws PeriodizationError when the field carries more
// than boundary_tol (relative) on the outermost x columns; residual fields
// tolerate spectral ringing there and pass a looser tolerance.
double sobolev_norm(const QuasimodeGrid& grid, const Eigen::MatrixXcd& field, double s,
                    double boundary_tol = 1e-10);

// fraction of the spectral mass within the cone |xi - lambda xi0| <= lambda/2
double frequency_localization(const QuasimodeGrid& grid, const Eigen::MatrixXcd& field,
                              double xi0);

struct LambdaRun {
  double lambda = 0.0;
  bool ok = false;
  std::string error;

  double u_l2 = 0.0;
  double u_low = 0.0;        // ||u||_(-N)
  double residual_nu = 0.0;  // ||P* u||_(nu), authoritative backend
  double ratio = 0.0;
  double backend_rel_diff = 0.0;  // L2 relative difference of the two backends
  double freq_mass = 0.0;
  double eikonal_res = 0.0;
  double sup_omega = 0.0;
  double mtrans_res = 0.0;
  int grid_nx = 0, grid_nt = 0;
};

struct DecayReport {
  std::vector<LambdaRun> runs;
  int N = 1;
  double nu = 0.0;
  int M = 3;

  double slope_u_low = 0.0;
  double slope_residual = 0.0;
  double slope_ratio = 0.0;
  bool monotone_tail = false;  // ratio nondecreasing over the last 4 runs
  bool degenerate = false;     // residuals at the quadrature floor
  bool witness = false;
  double ratio_growth_min = 0.3;
};

struct DecayOptions {
  QuasimodeOptions quasimode;
  int N = 1;
  double nu = 0.0;
  double ratio_growth_min = 0.3;
  double degenerate_floor = 1e-11;  // residual/u_l2 below this means vacuous
};

DecayReport decay_fit(const PreparedModel& pm, const std::vector<double>& sweep,
                      const DecayOptions& opts = {});

}  // namespace mlq
