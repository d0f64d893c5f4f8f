#pragma once

#include <optional>
#include <string>

#include "mlq/bicharacteristic.hpp"

namespace mlq {

enum class SignDirection { MinusToPlus, PlusToMinus };

struct SignChange {
  double s = 0.0;  // arc-length location of the crossing
  SignDirection direction = SignDirection::MinusToPlus;
};

enum class Cond2StartPolicy { ArgminRunningIntegral, CurveStart };

struct Cond2Result {
  double value = 0.0;   // min over the two endpoint integrals / |log kappa|
  double start_s = 0.0; // arc parameter of the chosen start point w_j
};

// kappa_j = min over the curve of |H_p|, refined by a local quadratic fit
// around the discrete argmin.
double kappa_min(const SymbolModel& model, const Bicharacteristic& curve);

Cond2Result cond2_integral(const SymbolModel& model, const Bicharacteristic& curve,
                           Cond2StartPolicy policy = Cond2StartPolicy::ArgminRunningIntegral);

std::optional<SignChange> sign_change_detect(const SymbolModel& model,
                                             const Bicharacteristic& curve,
                                             double noise_floor = 1e-12);

// Basis of the Lagrangean section at sample index i: 2n x q matrix of
// tangent vectors in flat (t, x, tau, xi) coordinates.
using SectionBasis = std::function<Eigen::MatrixXd(int sample_index)>;

// max over samples of |Pi d(grad p)|_L| / |grad p| with Pi the orthogonal
// projection along grad p.
double curvature_bound(const SymbolModel& model, const Bicharacteristic& curve,
                       const SectionBasis& section);

struct FamilyDiagnostics {
  int family_index = 0;
  double kappa = 0.0;
  double lambda = 0.0;                 // kappa^{-1/eps}
  std::vector<double> ck_bounds;       // k = 1..k_max
  double curvature_bound = 0.0;        // 0 when no section was supplied
  double cond2_value = 0.0;
  double cond2_start_s = 0.0;
  std::optional<SignChange> sign_change;
};

enum class FamilyVerdict { NonSolvabilityWitness, NoWitness };

struct DiagnosticsOptions {
  double epsilon = 0.1;
  int k_max = 4;
  double min_slope = 0.2;       // minimum fitted slope of cond2_value vs j
  double ck_C = -1.0;           // <= 0: use 10x the first curve's value + 1
  double curvature_C = -1.0;
  double degeneracy_threshold = 1e-12;
};

struct FamilyReport {
  std::vector<FamilyDiagnostics> diagnostics;
  FamilyVerdict verdict = FamilyVerdict::NoWitness;
  std::vector<std::string> reasons;  // why the verdict is what it is
};

// Per-curve diagnostics plus the witness verdict.  `sections[j]` may be an
// empty function when no grazing section is available for curve j.
FamilyReport family_report(const std::vector<SymbolModel>& models,
                           const std::vector<Bicharacteristic>& curves,
                           const std::vector<SectionBasis>& sections,
                           const DiagnosticsOptions& opts = {});

inline FamilyReport family_report(const SymbolModel& model,
                                  const std::vector<Bicharacteristic>& curves,
                                  const DiagnosticsOptions& opts = {}) {
  return family_report(std::vector<SymbolModel>{model}, curves,
                       std::vector<SectionBasis>(curves.size()), opts);
}

}  // namespace mlq
