#pragma once

#include <functional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "lorentzflow/lorentz.hpp"

namespace lorentzflow {

class ProfileError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

using ScalarFn = std::function<double(double)>;

/// Rotationally symmetric tube in R^3_1: spatial radius f(z) at time height z.
/// The tube is timelike where f > 0 and |f'| < 1.
struct RotationalProfile {
  std::string name;
  ScalarFn f, df, d2f;
  double z_lo = -1e300;
  double z_hi = 1e300;

  bool contains(double z) const { return z >= z_lo && z <= z_hi; }
  /// Throws ProfileError when the tube is not timelike at z.
  void require_admissible(double z) const;

  static RotationalProfile cylinder(double radius = 1.0);
  /// f = sqrt(A^2 + (z+B)^2), the equality case of the curvature condition.
  static RotationalProfile pseudosphere(double A = 1.0, double B = 0.0);
  /// f = a + b sin(omega z).
  static RotationalProfile sine_tube(double a = 2.0, double b = 0.5, double omega = 1.0);
  /// f = amp exp(-(z/width)^2) + floor; fails the curvature condition near z = 0.
  static RotationalProfile gaussian(double amp = 1.0, double floor = 0.2, double width = 1.0);
};

/// Symmetric pair of boundary curves y = s(|x|) in R^2_1, timelike where |s'| > 1.
struct PlanarBoundary {
  std::string name;
  ScalarFn s, ds, d2s;
  double x_lo = 0.0;
  double x_hi = 1e300;

  bool contains(double x) const { return x > x_lo && x <= x_hi; }
  void require_admissible(double x) const;
  /// Solves s(x) = height for x > 0 by Newton with a bisection fallback.
  double solve_height(double height, double x_guess) const;

  /// s = log sinh x, the boundary of the translating solution log cosh x + t.
  static PlanarBoundary trumpet();
  /// s = slope * x.
  static PlanarBoundary linear(double slope = 2.0);
};

using Boundary = std::variant<RotationalProfile, PlanarBoundary>;

const std::string& boundary_name(const Boundary& b);

/// Parses `cylinder`, `cylinder(r)`, `pseudosphere(A,B)`, `sine_tube(a,b,w)`,
/// `gaussian(amp,floor,width)`, `trumpet`, `linear(k)`.
Boundary parse_boundary(const std::string& spec);

/// Second fundamental form data of the boundary at one point.
struct BoundaryCurvature {
  SpacetimeVector mu;                 // outward spacelike unit normal
  SpacetimeVector V;                  // timelike unit eigenvector
  std::vector<SpacetimeVector> W;     // spacelike eigenvectors
  double A_VV = 0.0;
  std::vector<double> A_WW;
};

/// A^Sigma(X, Y) for X, Y tangent to the boundary, expanded in the eigenbasis.
double second_fundamental_form(const BoundaryCurvature& c, const SpacetimeVector& X,
                               const SpacetimeVector& Y);

/// Curvature of a rotational tube at height z and azimuth theta.
BoundaryCurvature profile_curvature(const RotationalProfile& p, double z, double theta = 0.0);

/// f''/(1 - f'^2) - 1/f; the tube satisfies the curvature condition where this is <= 0.
double rotational_condition_value(const RotationalProfile& p, double z);

struct ConditionReport {
  bool ok = false;
  double worst_z = 0.0;
  double worst_value = 0.0;
  /// sign(A_VV + A_WW) matched sign(-condition value) at every sample.
  bool signs_agree = true;
  int samples = 0;
};

inline constexpr double kConditionTolerance = 1e-12;

ConditionReport check_condition_curvature(const RotationalProfile& p, double z_lo, double z_hi,
                                          int samples);

struct CmcLeaf {
  enum class Kind { HyperbolicPlane, Plane };
  Kind kind = Kind::Plane;
  double R = 0.0;         // pseudo-radius (HyperbolicPlane only)
  double J = 0.0;         // vertex offset along e_3
  double z_anchor = 0.0;  // height where the leaf meets the tube
  int sheet = 1;          // +1: leaf opens to the future, -1: to the past

  /// Time height of the leaf above spatial radius rho.
  double height(double rho) const;
  /// Point at hyperbolic distance l from the vertex, azimuth theta.
  SpacetimeVector point(double l, double theta) const;
};

inline constexpr double kFlatSlopeTolerance = 1e-10;

CmcLeaf cmc_leaf_through(const RotationalProfile& p, double z);

/// Derivative in z of the vertex height of the leaf through z; positive means
/// neighbouring leaves do not cross.
double foliation_monotonicity(const RotationalProfile& p, double z);

struct PlanarBoundaryData {
  SpacetimeVector mu;
  SpacetimeVector V;
};

/// Normal and timelike tangent of the right branch at x > 0.
PlanarBoundaryData planar_boundary_data(const PlanarBoundary& b, double x);

/// Same data plus A^Sigma(V, V); the mirror branch is obtained with side = -1.
BoundaryCurvature planar_boundary_curvature(const PlanarBoundary& b, double x, int side = 1);

}  // namespace lorentzflow
