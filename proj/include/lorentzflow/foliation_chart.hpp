#pragma once

#include <array>
#include <memory>
#include <stdexcept>
#include <string>

#include "lorentzflow/boundary_profile.hpp"
#include "lorentzflow/lorentz.hpp"

namespace lorentzflow {

class ChartError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Chart coordinates on Omega; only the first n entries are used.
using ChartPoint = std::array<double, 2>;

/// A compatible spacelike foliation F(x, lambda) of the inside of the boundary.
class FoliationChart {
 public:
  virtual ~FoliationChart() = default;

  virtual std::string id() const = 0;
  /// Dimension of the leaves.
  virtual int n() const = 0;
  /// Radius of Omega (a ball centred at the origin).
  virtual double domain_radius() const = 0;

  virtual SpacetimeVector map(const ChartPoint& x, double lambda) const = 0;
  virtual SpacetimeVector d_lambda(const ChartPoint& x, double lambda) const = 0;
  virtual SpacetimeVector d_x(const ChartPoint& x, double lambda, int i) const = 0;
  /// Leaf parameter of the leaf through y. Throws ChartError outside the image.
  virtual double time_function(const SpacetimeVector& y) const = 0;

  /// psi = sqrt(-|dF/dlambda|^2).
  double lapse(const ChartPoint& x, double lambda) const;
  /// hat g_ij = <dF/dx^i, dF/dx^j>; row-major n x n in a 2x2 array.
  std::array<double, 4> leaf_metric(const ChartPoint& x, double lambda) const;
};

/// F(x, lambda) = (x, lambda) over a ball of the given radius.
class FlatChart final : public FoliationChart {
 public:
  FlatChart(int n, double radius);

  std::string id() const override { return "flat"; }
  int n() const override { return n_; }
  double domain_radius() const override { return radius_; }
  SpacetimeVector map(const ChartPoint& x, double lambda) const override;
  SpacetimeVector d_lambda(const ChartPoint& x, double lambda) const override;
  SpacetimeVector d_x(const ChartPoint& x, double lambda, int i) const override;
  double time_function(const SpacetimeVector& y) const override;

 private:
  int n_;
  double radius_;
};

/// Rotational chart whose leaves are the constant mean curvature planes and
/// hyperbolic planes meeting a rotational tube perpendicularly. The leaf
/// through anchor height lambda meets the tube at height lambda; the chart
/// coordinate x in the unit disk labels the orthogonal trajectory that starts
/// at radius |x| f(lambda_ref) on the reference leaf.
class RotationalLeafChart final : public FoliationChart {
 public:
  explicit RotationalLeafChart(RotationalProfile profile, double lambda_ref = 0.0);

  std::string id() const override { return "hyperbolic"; }
  int n() const override { return 2; }
  double domain_radius() const override { return 1.0; }
  SpacetimeVector map(const ChartPoint& x, double lambda) const override;
  SpacetimeVector d_lambda(const ChartPoint& x, double lambda) const override;
  SpacetimeVector d_x(const ChartPoint& x, double lambda, int i) const override;
  double time_function(const SpacetimeVector& y) const override;

  const RotationalProfile& profile() const { return profile_; }

  /// Height of leaf lambda above spatial radius rho and its partial derivatives.
  double leaf_height(double rho, double lambda) const;
  double leaf_slope(double rho, double lambda) const;   // d/drho
  double leaf_speed(double rho, double lambda) const;   // d/dlambda
  /// Spatial radius at leaf parameter lambda on the trajectory through radius
  /// rho_ref of the reference leaf, with d rho / d rho_ref.
  std::array<double, 2> trajectory(double rho_ref, double lambda) const;

 private:
  RotationalProfile profile_;
  double lambda_ref_;
};

std::shared_ptr<FoliationChart> make_flat_chart(int n, double radius);
std::shared_ptr<FoliationChart> make_rotational_leaf_chart(const RotationalProfile& p,
                                                           double lambda_ref = 0.0);

inline constexpr double kLapseFloor = 1e-8;

/// hat V = psi^{-1} dF/dlambda, future oriented.
SpacetimeVector hat_v_field(const FoliationChart& chart, const ChartPoint& x, double lambda);

struct ChartCompatibilityReport {
  double orthogonality_max = 0.0;
  double lapse_min = 0.0;
  double boundary_alignment_max = 0.0;
  double v_hat_pairing_min = 0.0;
  double v_hat_pairing_max = 0.0;
  double max_leaf_volume = 0.0;
};

struct SampleRange {
  double lambda_lo = -1.0;
  double lambda_hi = 1.0;
  unsigned seed = 12345;
};

ChartCompatibilityReport check_compatibility(const FoliationChart& chart, const Boundary& boundary,
                                             int samples, const SampleRange& range = {});

}  // namespace lorentzflow
