#include "lorentzflow/boundary_profile.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "lorentzflow/call_syntax.hpp"

namespace lorentzflow {

namespace {

std::string fmt_name(const std::string& base, std::initializer_list<double> args) {
  std::ostringstream os;
  os.precision(17);
  os << base << '(';
  bool first = true;
  for (double a : args) {
    os << (first ? "" : ",") << a;
    first = false;
  }
  os << ')';
  return os.str();
}

int sign_with_band(double x, double band) {
  if (x > band) return 1;
  if (x < -band) return -1;
  return 0;
}

}  // namespace

void RotationalProfile::require_admissible(double z) const {
  if (!contains(z)) {
    std::ostringstream os;
    os << name << ": z = " << z << " outside [" << z_lo << ", " << z_hi << "]";
    throw ProfileError(os.str());
  }
  const double fz = f(z), dfz = df(z), d2fz = d2f(z);
  if (!std::isfinite(fz) || !std::isfinite(dfz) || !std::isfinite(d2fz)) {
    throw ProfileError(name + ": non-finite profile data");
  }
  if (fz <= 0.0) {
    std::ostringstream os;
    os << name << ": radius f(" << z << ") = " << fz << " is not positive";
    throw ProfileError(os.str());
  }
  if (std::abs(dfz) >= 1.0) {
    std::ostringstream os;
    os << name << ": |f'(" << z << ")| = " << std::abs(dfz) << " >= 1, tube not timelike";
    throw ProfileError(os.str());
  }
}

RotationalProfile RotationalProfile::cylinder(double radius) {
  if (!(radius > 0.0)) throw ProfileError("cylinder radius must be positive");
  return {fmt_name("cylinder", {radius}), [radius](double) { return radius; },
          [](double) { return 0.0; }, [](double) { return 0.0; }};
}

RotationalProfile RotationalProfile::pseudosphere(double A, double B) {
  if (!(A > 0.0)) throw ProfileError("pseudosphere needs A > 0");
  const double A2 = A * A;
  return {fmt_name("pseudosphere", {A, B}),
          [A2, B](double z) { return std::sqrt(A2 + (z + B) * (z + B)); },
          [A2, B](double z) { return (z + B) / std::sqrt(A2 + (z + B) * (z + B)); },
          [A2, B](double z) {
            const double r = std::sqrt(A2 + (z + B) * (z + B));
            return A2 / (r * r * r);
          }};
}

RotationalProfile RotationalProfile::sine_tube(double a, double b, double omega) {
  if (!(a > std::abs(b))) throw ProfileError("sine_tube needs a > |b|");
  if (!(std::abs(b * omega) < 1.0)) throw ProfileError("sine_tube needs |b omega| < 1");
  return {fmt_name("sine_tube", {a, b, omega}),
          [a, b, omega](double z) { return a + b * std::sin(omega * z); },
          [b, omega](double z) { return b * omega * std::cos(omega * z); },
          [b, omega](double z) { return -b * omega * omega * std::sin(omega * z); }};
}

RotationalProfile RotationalProfile::gaussian(double amp, double floor, double width) {
  if (!(floor > 0.0) || !(amp >= 0.0) || !(width > 0.0))
    throw ProfileError("gaussian needs amp >= 0, floor > 0, width > 0");
  // max |f'| = amp sqrt(2) e^{-1/2} / width
  if (!(amp * std::sqrt(2.0) * std::exp(-0.5) / width < 1.0))
    throw ProfileError("gaussian profile is not timelike everywhere");
  return {fmt_name("gaussian", {amp, floor, width}),
          [=](double z) { return amp * std::exp(-(z / width) * (z / width)) + floor; },
          [=](double z) {
            const double w2 = width * width;
            return -2.0 * z / w2 * amp * std::exp(-z * z / w2);
          },
          [=](double z) {
            const double w2 = width * width;
            return amp * std::exp(-z * z / w2) * (4.0 * z * z / (w2 * w2) - 2.0 / w2);
          }};
}

void PlanarBoundary::require_admissible(double x) const {
  if (!contains(x)) {
    std::ostringstream os;
    os << name << ": x = " << x << " outside (" << x_lo << ", " << x_hi << "]";
    throw ProfileError(os.str());
  }
  const double d = ds(x);
  if (!std::isfinite(d) || std::abs(d) <= 1.0) {
    std::ostringstream os;
    os << name << ": |s'(" << x << ")| = " << std::abs(d) << " <= 1, boundary not timelike";
    throw ProfileError(os.str());
  }
}

double PlanarBoundary::solve_height(double height, double x_guess) const {
  auto g = [&](double x) { return s(x) - height; };
  double x = std::clamp(x_guess, std::nextafter(x_lo, x_hi), x_hi);
  for (int it = 0; it < 60; ++it) {
    const double gx = g(x);
    const double d = ds(x);
    if (!std::isfinite(gx) || !std::isfinite(d) || d == 0.0) break;
    const double step = gx / d;
    const double xn = x - step;
    if (!(xn > x_lo) || xn > x_hi) break;
    x = xn;
    if (std::abs(step) <= 1e-14 * std::max(1.0, std::abs(x))) return x;
  }
  // Bisection fallback on an expanding bracket around the guess.
  double lo = std::max(std::nextafter(x_lo, x_hi), x_guess * 0.5);
  double hi = std::min(x_hi, std::max(x_guess, 1e-8) * 2.0);
  for (int k = 0; k < 200 && g(lo) * g(hi) > 0.0; ++k) {
    lo = x_lo + (lo - x_lo) * 0.5;
    hi = std::min(x_hi, hi * 2.0);
  }
  double glo = g(lo);
  if (!(glo * g(hi) <= 0.0)) {
    std::ostringstream os;
    os << name << ": no boundary point at height " << height;
    throw ProfileError(os.str());
  }
  for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, hi); ++it) {
    const double mid = 0.5 * (lo + hi);
    const double gm = g(mid);
    if ((gm < 0.0) == (glo < 0.0)) {
      lo = mid;
      glo = gm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

PlanarBoundary PlanarBoundary::trumpet() {
  return {"trumpet", [](double x) { return std::log(std::sinh(x)); },
          [](double x) { return 1.0 / std::tanh(x); },
          [](double x) {
            const double sh = std::sinh(x);
            return -1.0 / (sh * sh);
          }};
}

PlanarBoundary PlanarBoundary::linear(double slope) {
  if (!(std::abs(slope) > 1.0)) throw ProfileError("linear boundary needs |slope| > 1");
  return {fmt_name("linear", {slope}), [slope](double x) { return slope * x; },
          [slope](double) { return slope; }, [](double) { return 0.0; }};
}

const std::string& boundary_name(const Boundary& b) {
  return std::visit([](const auto& p) -> const std::string& { return p.name; }, b);
}

Boundary parse_boundary(const std::string& spec) {
  const CallSyntax c = parse_call(spec);
  if (c.name == "cylinder") return RotationalProfile::cylinder(c.number_or(0, 1.0));
  if (c.name == "pseudosphere")
    return RotationalProfile::pseudosphere(c.number_or(0, 1.0), c.number_or(1, 0.0));
  if (c.name == "sine_tube")
    return RotationalProfile::sine_tube(c.number_or(0, 2.0), c.number_or(1, 0.5),
                                        c.number_or(2, 1.0));
  if (c.name == "gaussian")
    return RotationalProfile::gaussian(c.number_or(0, 1.0), c.number_or(1, 0.2),
                                       c.number_or(2, 1.0));
  if (c.name == "trumpet") return PlanarBoundary::trumpet();
  if (c.name == "linear") return PlanarBoundary::linear(c.number_or(0, 2.0));
  throw std::invalid_argument("unknown boundary profile '" + c.name + "'");
}

double second_fundamental_form(const BoundaryCurvature& c, const SpacetimeVector& X,
                               const SpacetimeVector& Y) {
  // V has square -1, so the V-coefficient of X is -<X,V>; the product of two
  // such coefficients keeps the sign of <X,V><Y,V>.
  double a = c.A_VV * minkowski_inner(X, c.V) * minkowski_inner(Y, c.V);
  for (std::size_t i = 0; i < c.W.size(); ++i)
    a += c.A_WW[i] * minkowski_inner(X, c.W[i]) * minkowski_inner(Y, c.W[i]);
  return a;
}

BoundaryCurvature profile_curvature(const RotationalProfile& p, double z, double theta) {
  p.require_admissible(z);
  const double fz = p.f(z), d1 = p.df(z), d2 = p.d2f(z);
  const double root = std::sqrt(1.0 - d1 * d1);
  const double cth = std::cos(theta), sth = std::sin(theta);
  BoundaryCurvature c;
  c.mu = SpacetimeVector(cth, sth, d1) / root;
  c.V = SpacetimeVector(d1 * cth, d1 * sth, 1.0) / root;
  c.W = {SpacetimeVector(-sth, cth, 0.0)};
  c.A_VV = -d2 / (root * root * root);
  c.A_WW = {1.0 / (fz * root)};
  return c;
}

double rotational_condition_value(const RotationalProfile& p, double z) {
  p.require_admissible(z);
  const double d1 = p.df(z);
  return p.d2f(z) / (1.0 - d1 * d1) - 1.0 / p.f(z);
}

ConditionReport check_condition_curvature(const RotationalProfile& p, double z_lo, double z_hi,
                                          int samples) {
  if (samples < 2) throw std::invalid_argument("check_condition_curvature: samples must be >= 2");
  if (!(z_hi >= z_lo)) throw std::invalid_argument("check_condition_curvature: empty interval");
  ConditionReport r;
  r.samples = samples;
  r.worst_value = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < samples; ++k) {
    const double z = z_lo + (z_hi - z_lo) * k / (samples - 1);
    const double q = rotational_condition_value(p, z);
    const BoundaryCurvature c = profile_curvature(p, z);
    const double sum = c.A_VV + c.A_WW.front();
    const double band = kConditionTolerance * (1.0 + std::abs(c.A_WW.front()));
    if (sign_with_band(sum, band) != sign_with_band(-q, band)) r.signs_agree = false;
    if (q > r.worst_value) {
      r.worst_value = q;
      r.worst_z = z;
    }
  }
  r.ok = r.worst_value <= kConditionTolerance;
  return r;
}

double CmcLeaf::height(double rho) const {
  if (kind == Kind::Plane) return z_anchor;
  return J + sheet * std::sqrt(R * R + rho * rho);
}

SpacetimeVector CmcLeaf::point(double l, double theta) const {
  if (kind == Kind::Plane) return {l * std::cos(theta), l * std::sin(theta), z_anchor};
  const double sh = R * std::sinh(l);
  return {sh * std::cos(theta), sh * std::sin(theta), J + sheet * R * std::cosh(l)};
}

CmcLeaf cmc_leaf_through(const RotationalProfile& p, double z) {
  p.require_admissible(z);
  const double fz = p.f(z), d1 = p.df(z);
  CmcLeaf leaf;
  leaf.z_anchor = z;
  if (std::abs(d1) < kFlatSlopeTolerance) {
    leaf.kind = CmcLeaf::Kind::Plane;
    leaf.J = z;
    return leaf;
  }
  const double ratio = fz / d1;
  const double r_signed = ratio * std::sqrt(1.0 - d1 * d1);
  leaf.kind = CmcLeaf::Kind::HyperbolicPlane;
  leaf.sheet = r_signed > 0.0 ? 1 : -1;
  leaf.R = std::abs(r_signed);
  leaf.J = z - ratio;
  return leaf;
}

double foliation_monotonicity(const RotationalProfile& p, double z) {
  p.require_admissible(z);
  const double fz = p.f(z), d1 = p.df(z), d2 = p.d2f(z);
  const double w = 1.0 - d1 * d1;
  const double root = std::sqrt(w);
  return root * (1.0 - d2 * fz / ((1.0 + root) * w));
}

PlanarBoundaryData planar_boundary_data(const PlanarBoundary& b, double x) {
  b.require_admissible(x);
  const double d = b.ds(x);
  const double norm = std::sqrt(d * d - 1.0);
  const double sg = d > 0.0 ? 1.0 : -1.0;
  return {SpacetimeVector(sg * d, sg) / norm, SpacetimeVector(sg, sg * d) / norm};
}

BoundaryCurvature planar_boundary_curvature(const PlanarBoundary& b, double x, int side) {
  const PlanarBoundaryData data = planar_boundary_data(b, x);
  const double d = b.ds(x), dd = b.d2s(x);
  const double w = d * d - 1.0;
  BoundaryCurvature c;
  c.mu = data.mu;
  c.V = data.V;
  if (side < 0) {
    c.mu[0] = -c.mu[0];
    c.V[0] = -c.V[0];
  }
  c.A_VV = (d > 0.0 ? 1.0 : -1.0) * dd / (w * std::sqrt(w));
  return c;
}

}  // namespace lorentzflow
