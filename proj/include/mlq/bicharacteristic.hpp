#pragma once

#include <vector>

#include "mlq/symbol_model.hpp"

namespace mlq {

// Arc-length parametrized integral curve of the normalized Hamilton field on
// the unit cosphere, with per-sample diagnostics.
struct Bicharacteristic {
  int family_index = 0;
  int orientation = +1;
  bool truncated = false;  // |H_p| fell below threshold before full length
  bool cosphere = true;    // curve represented on the unit cosphere

  std::vector<double> s;                    // arc-length parameter, increasing
  std::vector<PhasePoint> pts;
  std::vector<Eigen::VectorXd> tangents;    // unit H_ptilde at each sample
  std::vector<double> p_vals;
  std::vector<double> hp_norms;             // |H_p|

  int size() const { return static_cast<int>(s.size()); }
  double total_length() const { return s.empty() ? 0.0 : s.back() - s.front(); }
  bool closed(double tol = 1e-6) const {
    if (size() < 2) return false;
    return (pts.front().flat() - pts.back().flat()).norm() < tol;
  }
};

struct FlowOptions {
  double atol = 1e-10;
  double rtol = 1e-10;
  double degeneracy_threshold = 1e-12;
  double tol_p_start = 1e-8;        // |p(start)| must be below this
  int min_samples = 257;            // caps the step size at length/(min_samples-1)
  int orientation = +1;             // -1 integrates along -H_ptilde
  int family_index = 0;
  // Represent the curve on the unit cosphere: remove the radial fiber
  // component of H_p and project each step back to |(tau,xi)| = 1.  Turn off
  // for symbols that are not fiber-homogeneous (conic test models).
  bool cosphere = true;
};

// Integrates d gamma / ds = H_ptilde(gamma) with projection back to
// {p = 0, |(tau,xi)| = 1} (one Newton correction per accepted step).
Bicharacteristic integrate_bicharacteristic(const SymbolModel& model, const PhasePoint& start,
                                            double length, const FlowOptions& opts = {});

// Cubic Hermite resampling onto the given arc-length grid (within [s0, s_end]).
Bicharacteristic reparametrize(const SymbolModel& model, const Bicharacteristic& curve,
                               const std::vector<double>& grid);

// Evaluates a phase-space point at arc parameter s by Hermite interpolation.
PhasePoint curve_point(const Bicharacteristic& curve, double s);

// Iterated flow derivatives H_ptilde^k applied to a (vector-valued) quantity,
// computed by finite differences in s on a uniform resampling of the curve.
struct FlowDerivatives {
  std::vector<double> s;          // interior grid where the derivative is valid
  Eigen::MatrixXd values;         // row per s, column per quantity component
  Eigen::VectorXd magnitudes() const {
    Eigen::VectorXd m(values.rows());
    for (Eigen::Index i = 0; i < values.rows(); ++i) m(i) = values.row(i).norm();
    return m;
  }
};

FlowDerivatives derivative_along_flow(const SymbolModel& model, const Bicharacteristic& curve,
                                      const std::function<Eigen::VectorXd(const PhasePoint&)>& quantity,
                                      int order, int resample_points = 0);

// Unit gradient field grad p / |grad p|, the quantity of the C^infty
// boundedness checks.
Eigen::VectorXd normalized_gradient(const SymbolModel& model, const PhasePoint& w);

}  // namespace mlq
