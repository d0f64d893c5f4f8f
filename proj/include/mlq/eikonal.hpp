#pragma once

#include "mlq/normal_form.hpp"

namespace mlq {

struct EikonalOptions {
  int fan_nodes = 33;         // Chebyshev-Lobatto nodes for the initial points
  double domain_c = 1.0;      // validity domain |x| <= c lambda^{-3 eps}
  double safety = 2.0;        // characteristics are truncated at safety * domain
  double atol = 1e-13;
  double rtol = 1e-13;
  double caustic_floor = 0.1;  // minimum Jacobian of x0 -> x(t; x0)
};

// Characteristic fan of the eikonal equation, integrated in the scaled
// variables y = x lam^{3eps}, eta = (nu - xi0) lam^{4eps}, w = omega lam^{7eps}
// where the system is uniformly well posed.  Base dimension 1.
struct CharacteristicFan {
  double lambda = 0.0;
  Exponents expo;
  double domain_radius = 0.0;  // c lam^{-3 eps}, unscaled
  bool truncated = false;

  std::vector<double> t_nodes;
  Eigen::VectorXd y0;                   // Lobatto nodes in [-c, c]
  std::vector<Eigen::VectorXd> y, eta, w;  // per t node, over the fan
};

CharacteristicFan solve_characteristics(const PreparedModel& pm, double lambda,
                                        const std::vector<double>& t_nodes,
                                        const EikonalOptions& opts = {});

// Reconstruction of omega by inverting the characteristic map per time slice
// (barycentric interpolation on the Lobatto fan, Newton seeded at identity).
class EikonalSolution {
 public:
  EikonalSolution(const PreparedModel& pm, CharacteristicFan fan, EikonalOptions opts);

  const CharacteristicFan& fan() const { return fan_; }
  double domain_radius() const { return fan_.domain_radius; }
  int time_nodes() const { return static_cast<int>(fan_.t_nodes.size()); }
  double time_at(int it) const { return fan_.t_nodes[it]; }

  double omega_at(int it, double x) const;
  double grad_at(int it, double x) const;
  // dt omega through the solved equation s(t, x, xi0 + grad)
  double dt_omega_at(int it, double x) const;

  double sup_omega(int probe_points = 129) const;

 private:
  struct Slice {
    Eigen::VectorXd y, eta, w;   // values at the fan nodes
    Eigen::VectorXd dy;          // d y / d y0 at the nodes
    Eigen::VectorXd sol;         // cached Newton solutions keyed by query index? (unused)
  };
  double invert(int it, double yq) const;  // y0 with y(t; y0) = yq

  PreparedModel pm_;
  CharacteristicFan fan_;
  EikonalOptions opts_;
  Eigen::VectorXd bary_w_;            // barycentric weights
  Eigen::MatrixXd diff_;              // Chebyshev differentiation matrix
  std::vector<Slice> slices_;
};

EikonalSolution reconstruct_omega(const PreparedModel& pm, CharacteristicFan fan,
                                  const EikonalOptions& opts = {});

// Sampled field for residual checks and CSV export.
struct EikonalField {
  std::vector<double> ts;
  Eigen::VectorXd xs;
  Eigen::MatrixXd omega;  // row per t, column per x
  Eigen::MatrixXd grad;
};

EikonalField sample_eikonal(const EikonalSolution& sol, const Eigen::VectorXd& xs);

// max over the sampled grid of |dt omega - s(t, x, xi0 + dx omega)| with the
// time derivative taken by central differences of the sampled omega.
double eikonal_residual(const PreparedModel& pm, double lambda, const EikonalField& field);

}  // namespace mlq
