#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "lorentzflow/boundary_profile.hpp"
#include "lorentzflow/flow_engine.hpp"
#include "lorentzflow/graph_discretization.hpp"

namespace lorentzflow {

/// |Vol(T) - Vol(0) - int_0^T int H^2 dV dt| / max(1, |Vol(T) - Vol(0)|).
double volume_identity(const Trajectory& traj);

struct EvolutionResiduals {
  double res_H = 0.0;
  double res_v = 0.0;
  int samples = 0;  // snapshot triples used
};

/// Residuals of (d/dt - Delta)H = -H|A|^2 and of the v evolution with the
/// ambient V terms, at interior nodes of the middle state of every
/// consecutive snapshot triple (store with stride 1 over the probe window).
EvolutionResiduals evolution_residuals(const Trajectory& traj, const Boundary& boundary);

struct BoundarySample {
  double t = 0.0;
  double grad_mu_H = 0.0;
  double H_A_nu_nu = 0.0;     // H A(nu, nu)
  double grad_mu_v = 0.0;
  double v_rhs = 0.0;         // -v [A(nu, nu) - A(V, V)]
  double A_nu_nu = 0.0;
  double A_VV = 0.0;
  double H = 0.0;
};

struct BoundaryIdentities {
  double res_Hmu = 0.0;
  double res_vmu = 0.0;
  double max_grad_mu_v = -1e300;
  double max_grad_mu_H2_term = -1e300;  // grad_mu H^2 + H^2 A(V, V)
  std::vector<BoundarySample> samples;
};

/// Boundary samples of one state (both ends for Curve1D). Radial2D and
/// Curve1D only.
std::vector<BoundarySample> boundary_samples(const FlowState& s, const Boundary& boundary);

BoundaryIdentities boundary_identities(const Trajectory& traj, const Boundary& boundary);

struct WitnessFit {
  double C1 = 0.0;
  double C2 = 0.0;
  double p = 0.0;
};

struct EstimateReport {
  bool h_sup_monotone = true;
  bool monotone_regime = false;  // A(nu, nu) >= 0 along the boundary at every snapshot
  WitnessFit grad_bound_fit;     // sup v <= C1 exp(C2 osc u)
  WitnessFit h_vs_v_fit;         // sup|H| <= C1 + C2 (sup v)^p, p fixed
  WitnessFit h_vs_v_best;        // same with the best-fitting p in (0, 1)
};

EstimateReport estimate_monitors(const Trajectory& traj, const Boundary& boundary, double p = 0.5);

class HypothesisError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

struct StabilityCertificate {
  std::vector<double> phi;        // per storage index
  double R = 0.0;
  double epsilon = 0.0;
  double interior_margin = 0.0;   // min of -(Delta phi - phi |A|^2)
  double boundary_margin = 0.0;   // min of grad_mu phi + phi A(nu, nu)
  double min_phi = 0.0;
  double interior_identity = 0.0; // max |Delta |x-a|^2 - 2n| (zero on maximal surfaces)
  bool hypothesis_holds = false;  // A(nu, nu) > 0 on the boundary
  bool ok = false;
};

/// phi = R - |x - a|^2 (Minkowski square). R <= 0 selects the smallest
/// admissible radius plus a small margin. `a` defaults to the axis point at
/// the mean height. Throws HypothesisError when A(nu, nu) < 0 somewhere on
/// the boundary; returns ok = false when A(nu, nu) vanishes.
StabilityCertificate stability_certificate(const FlowState& state, const Boundary& boundary,
                                           std::optional<SpacetimeVector> a = std::nullopt,
                                           double R = 0.0, double epsilon = 1e-3);

/// log2(coarse / fine); +inf when the fine error is at round-off level.
double empirical_order(double coarse, double fine, double ratio = 2.0);

/// Per-record series plus residual summary.
struct MonitorReport {
  std::vector<ScalarRecord> records;
  std::vector<BoundarySample> boundary;  // at snapshot times
  std::map<std::string, double> summary;
  std::map<std::string, std::string> notes;

  void write_csv(std::ostream& os) const;
  void write_summary(std::ostream& os) const;
};

std::string format_number(double x);

}  // namespace lorentzflow
