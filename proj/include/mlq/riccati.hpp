#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

#include "mlq/errors.hpp"

namespace mlq {

// Graph slope of a Lagrangean plane L = {(s, y; 0, A y)} over the base
// directions y, together with the fiber rotation (chart) it is graphed in.
struct RiccatiState {
  Eigen::MatrixXd A;       // real symmetric, in the current chart
  std::vector<int> chart;  // indices i with (y_i, eta_i) -> (eta_i, -y_i) applied
  double t = 0.0;

  int dim() const { return static_cast<int>(A.rows()); }
};

// t-dependent second derivatives of r at the curve: d_x^2 r, d_x d_xi r,
// d_xi^2 r evaluated at (t, 0, xi0).
struct QuadraticCoefficients {
  int dim = 1;
  std::function<Eigen::MatrixXd(double)> Axx;    // symmetric
  std::function<Eigen::MatrixXd(double)> Axxi;   // (i,j) = d_{x_i} d_{xi_j} r
  std::function<Eigen::MatrixXd(double)> Axixi;  // symmetric
};

// 2d x 2d rotation matrix of a chart (orthogonal and symplectic).
Eigen::MatrixXd chart_rotation(const std::vector<int>& chart, int dim);

// Column basis of the represented plane in the original (y, eta) coordinates.
Eigen::MatrixXd plane_basis(const RiccatiState& state);

// sin of the maximal principal angle between the column spans.
double plane_angle(const Eigen::MatrixXd& B1, const Eigen::MatrixXd& B2);

// Right-hand side of the evolution equation for the graph slope, expressed in
// the chart of `state`: Axx + 2 sym(Axxi A) + A Axixi A.
Eigen::MatrixXd riccati_rhs(const QuadraticCoefficients& coeffs, const RiccatiState& state);

// Rotates the chart so that the plane becomes comfortably graphable again;
// returns the input unchanged when no switch is needed (small |A|).
RiccatiState chart_switch(const RiccatiState& state);

struct RiccatiOptions {
  double atol = 1e-12;
  double rtol = 1e-12;
  double switch_threshold = 1e3;  // ||A||_2 triggering a chart switch
};

struct RiccatiTrajectory {
  std::vector<RiccatiState> states;  // at the requested times, in order
  int switch_count = 0;

  const RiccatiState& at(int i) const { return states[i]; }
  int size() const { return static_cast<int>(states.size()); }
};

// Adaptive integration of the matrix Riccati equation with re-symmetrization
// each step and automatic chart switches.
RiccatiTrajectory propagate_section(const QuadraticCoefficients& coeffs,
                                    const RiccatiState& initial,
                                    const std::vector<double>& t_grid,
                                    const RiccatiOptions& opts = {});

// Transports a basis of the initial plane with the linearized Hamilton flow
// (short RK steps between the trajectory samples) and returns the maximal
// principal-angle deviation from the trajectory planes.
double grazing_residual(const QuadraticCoefficients& coeffs, const std::vector<double>& t_grid,
                        const RiccatiTrajectory& traj);

struct NamedCoefficientSet {
  std::string name;
  QuadraticCoefficients coeffs;
  double t_end = 1.0;
};

// Shipped coefficient sets exercised by the `riccati` subcommand and the
// regression suites.
std::vector<NamedCoefficientSet> builtin_coefficient_sets();

}  // namespace mlq
