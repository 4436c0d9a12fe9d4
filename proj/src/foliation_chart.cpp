#include "lorentzflow/foliation_chart.hpp"

#include <algorithm>
#include <boost/numeric/odeint.hpp>
#include <cmath>
#include <random>
#include <sstream>

namespace lorentzflow {

namespace {

double norm2(const ChartPoint& x, int n) { return n == 1 ? std::abs(x[0]) : std::hypot(x[0], x[1]); }

double leaf_volume(const FoliationChart& chart, double lambda) {
  if (const auto* rot = dynamic_cast<const RotationalLeafChart*>(&chart)) {
    // 2 pi int_0^f rho sqrt(1 - T_rho^2) d rho, composite Simpson
    const double fz = rot->profile().f(lambda);
    const int m = 400;
    const double h = fz / m;
    double acc = 0.0;
    for (int k = 0; k <= m; ++k) {
      const double rho = k * h;
      const double s = rot->leaf_slope(rho, lambda);
      const double w = (k == 0 || k == m) ? 1.0 : (k % 2 ? 4.0 : 2.0);
      acc += w * rho * std::sqrt(std::max(0.0, 1.0 - s * s));
    }
    return 2.0 * M_PI * acc * h / 3.0;
  }
  const double R = chart.domain_radius();
  if (chart.n() == 1) {
    const int m = 200;
    double acc = 0.0;
    for (int k = 0; k < m; ++k) {
      const ChartPoint x{-R + (k + 0.5) * 2.0 * R / m, 0.0};
      acc += std::sqrt(std::max(0.0, chart.leaf_metric(x, lambda)[0]));
    }
    return acc * 2.0 * R / m;
  }
  const int nr = 48, nt = 48;
  double acc = 0.0;
  for (int i = 0; i < nr; ++i)
    for (int j = 0; j < nt; ++j) {
      const double r = (i + 0.5) * R / nr, th = (j + 0.5) * 2.0 * M_PI / nt;
      const auto g = chart.leaf_metric({r * std::cos(th), r * std::sin(th)}, lambda);
      acc += std::sqrt(std::max(0.0, g[0] * g[3] - g[1] * g[2])) * r;
    }
  return acc * (R / nr) * (2.0 * M_PI / nt);
}

}  // namespace

double FoliationChart::lapse(const ChartPoint& x, double lambda) const {
  const double q = minkowski_square(d_lambda(x, lambda));
  return std::sqrt(std::max(0.0, -q));
}

std::array<double, 4> FoliationChart::leaf_metric(const ChartPoint& x, double lambda) const {
  std::array<double, 4> g{0.0, 0.0, 0.0, 0.0};
  const int dim = n();
  std::array<SpacetimeVector, 2> e;
  for (int i = 0; i < dim; ++i) e[i] = d_x(x, lambda, i);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) g[2 * i + j] = minkowski_inner(e[i], e[j]);
  return g;
}

FlatChart::FlatChart(int n, double radius) : n_(n), radius_(radius) {
  if (n != 1 && n != 2) throw ChartError("flat chart dimension must be 1 or 2");
  if (!(radius > 0.0)) throw ChartError("flat chart radius must be positive");
}

SpacetimeVector FlatChart::map(const ChartPoint& x, double lambda) const {
  return n_ == 1 ? SpacetimeVector(x[0], lambda) : SpacetimeVector(x[0], x[1], lambda);
}

SpacetimeVector FlatChart::d_lambda(const ChartPoint&, double) const {
  return SpacetimeVector::time_axis(n_ + 1);
}

SpacetimeVector FlatChart::d_x(const ChartPoint&, double, int i) const {
  auto e = SpacetimeVector::zero(n_ + 1);
  e[i] = 1.0;
  return e;
}

double FlatChart::time_function(const SpacetimeVector& y) const {
  if (static_cast<int>(y.dim()) != n_ + 1) throw DimensionMismatch("flat chart: wrong dimension");
  const double r = n_ == 1 ? std::abs(y[0]) : std::hypot(y[0], y[1]);
  if (r > radius_ * (1.0 + 1e-12)) throw ChartError("flat chart: point outside the chart image");
  return y.temporal();
}

RotationalLeafChart::RotationalLeafChart(RotationalProfile profile, double lambda_ref)
    : profile_(std::move(profile)), lambda_ref_(lambda_ref) {
  profile_.require_admissible(lambda_ref_);
}

double RotationalLeafChart::leaf_height(double rho, double z) const {
  const double f = profile_.f(z), f1 = profile_.df(z);
  const double a = rho * rho / (f * f) - 1.0;
  const double S = std::sqrt(1.0 + f1 * f1 * a);
  return z + f1 * (rho * rho / f - f) / (1.0 + S);
}

double RotationalLeafChart::leaf_slope(double rho, double z) const {
  const double f = profile_.f(z), f1 = profile_.df(z);
  const double a = rho * rho / (f * f) - 1.0;
  const double S = std::sqrt(1.0 + f1 * f1 * a);
  return rho * f1 / (f * S);
}

double RotationalLeafChart::leaf_speed(double rho, double z) const {
  const double f = profile_.f(z), f1 = profile_.df(z), f2 = profile_.d2f(z);
  const double r2 = rho * rho;
  const double q = r2 / f - f;
  const double a = r2 / (f * f) - 1.0;
  const double S = std::sqrt(1.0 + f1 * f1 * a);
  const double D = 1.0 + S;
  const double N = f1 * q;
  const double q_z = -r2 * f1 / (f * f) - f1;
  const double a_z = -2.0 * r2 * f1 / (f * f * f);
  const double S_z = (2.0 * f1 * f2 * a + f1 * f1 * a_z) / (2.0 * S);
  const double N_z = f2 * q + f1 * q_z;
  return 1.0 + (N_z * D - N * S_z) / (D * D);
}

std::array<double, 2> RotationalLeafChart::trajectory(double rho_ref, double lambda) const {
  using State = std::array<double, 2>;
  auto rhs = [this](double rho, double z) {
    const double s = leaf_slope(rho, z);
    return leaf_speed(rho, z) * s / (1.0 - s * s);
  };
  auto system = [&](const State& y, State& dy, double z) {
    const double rho = y[0];
    const double h = 1e-6 * std::max(1.0, std::abs(rho));
    dy[0] = rhs(rho, z);
    dy[1] = (rhs(rho + h, z) - rhs(rho - h, z)) / (2.0 * h) * y[1];
  };
  State y{rho_ref, 1.0};
  if (lambda == lambda_ref_) return y;
  namespace ode = boost::numeric::odeint;
  auto stepper = ode::make_controlled(1e-13, 1e-13, ode::runge_kutta_dopri5<State>());
  const double dz0 = (lambda > lambda_ref_ ? 1.0 : -1.0) * 1e-3;
  ode::integrate_adaptive(stepper, system, y, lambda_ref_, lambda, dz0);
  return y;
}

SpacetimeVector RotationalLeafChart::map(const ChartPoint& x, double lambda) const {
  const double r = norm2(x, 2);
  const double rho = trajectory(r * profile_.f(lambda_ref_), lambda)[0];
  const double t = leaf_height(rho, lambda);
  if (r == 0.0) return {0.0, 0.0, t};
  return {rho * x[0] / r, rho * x[1] / r, t};
}

SpacetimeVector RotationalLeafChart::d_lambda(const ChartPoint& x, double lambda) const {
  const double r = norm2(x, 2);
  const double rho = trajectory(r * profile_.f(lambda_ref_), lambda)[0];
  const double s = leaf_slope(rho, lambda);
  const double k = leaf_speed(rho, lambda) / (1.0 - s * s);
  if (r == 0.0) return {0.0, 0.0, k};
  return {k * s * x[0] / r, k * s * x[1] / r, k};
}

SpacetimeVector RotationalLeafChart::d_x(const ChartPoint& x, double lambda, int i) const {
  const double r = norm2(x, 2);
  const double fref = profile_.f(lambda_ref_);
  const auto traj = trajectory(r * fref, lambda);
  const double rho = traj[0];
  const double drho_dr = traj[1] * fref;
  if (r < 1e-14) {
    SpacetimeVector e(0.0, 0.0, 0.0);
    e[i] = drho_dr;
    return e;
  }
  const double rh[2] = {x[0] / r, x[1] / r};
  const double s = leaf_slope(rho, lambda);
  SpacetimeVector e(0.0, 0.0, 0.0);
  for (int a = 0; a < 2; ++a) {
    const double dr_hat = ((a == i ? 1.0 : 0.0) - rh[a] * rh[i]) / r;
    e[a] = drho_dr * rh[i] * rh[a] + rho * dr_hat;
  }
  e[2] = s * drho_dr * rh[i];
  return e;
}

double RotationalLeafChart::time_function(const SpacetimeVector& y) const {
  if (y.dim() != 3) throw DimensionMismatch("rotational chart: expected a 2+1 vector");
  const double rho = std::hypot(y[0], y[1]);
  const double t = y.temporal();
  auto G = [&](double z) { return leaf_height(rho, z) - t; };
  auto inside = [&](double z) { return profile_.contains(z); };

  double lo = t, hi = t;
  if (!inside(t)) throw ChartError("rotational chart: height outside the profile domain");
  double glo = G(lo), ghi = glo;
  double step = 0.25;
  for (int it = 0; it < 80 && glo > 0.0; ++it) {
    hi = lo;
    ghi = glo;
    lo -= step;
    step *= 2.0;
    if (!inside(lo)) throw ChartError("rotational chart: root not bracketed");
    glo = G(lo);
  }
  step = 0.25;
  for (int it = 0; it < 80 && ghi < 0.0; ++it) {
    lo = hi;
    glo = ghi;
    hi += step;
    step *= 2.0;
    if (!inside(hi)) throw ChartError("rotational chart: root not bracketed");
    ghi = G(hi);
  }
  if (!(glo <= 0.0 && ghi >= 0.0) || !std::isfinite(glo) || !std::isfinite(ghi))
    throw ChartError("rotational chart: root not bracketed");
  // bisection, then secant polish
  for (int it = 0; it < 200 && hi - lo > 1e-9 * std::max(1.0, std::abs(hi)); ++it) {
    const double mid = 0.5 * (lo + hi);
    const double gm = G(mid);
    if (gm <= 0.0) {
      lo = mid;
      glo = gm;
    } else {
      hi = mid;
      ghi = gm;
    }
  }
  double z0 = lo, z1 = hi, g0 = glo, g1 = ghi;
  for (int it = 0; it < 20 && g1 != g0; ++it) {
    const double z2 = z1 - g1 * (z1 - z0) / (g1 - g0);
    z0 = z1;
    g0 = g1;
    z1 = z2;
    g1 = G(z1);
    if (std::abs(z1 - z0) <= 1e-15 * std::max(1.0, std::abs(z1))) break;
  }
  const double z = std::abs(g1) <= std::abs(glo) && std::abs(g1) <= std::abs(ghi) ? z1
                   : (std::abs(glo) < std::abs(ghi) ? lo : hi);
  if (rho > profile_.f(z) * (1.0 + 1e-12))
    throw ChartError("rotational chart: point outside the tube");
  return z;
}

std::shared_ptr<FoliationChart> make_flat_chart(int n, double radius) {
  return std::make_shared<FlatChart>(n, radius);
}

std::shared_ptr<FoliationChart> make_rotational_leaf_chart(const RotationalProfile& p,
                                                           double lambda_ref) {
  return std::make_shared<RotationalLeafChart>(p, lambda_ref);
}

SpacetimeVector hat_v_field(const FoliationChart& chart, const ChartPoint& x, double lambda) {
  const auto d = chart.d_lambda(x, lambda);
  const double psi = std::sqrt(std::max(0.0, -minkowski_square(d)));
  if (!(psi > kLapseFloor)) {
    std::ostringstream os;
    os << "hat_v_field: lapse " << psi << " below threshold";
    throw ChartError(os.str());
  }
  auto v = d / psi;
  if (v.temporal() < 0.0) v *= -1.0;
  return v;
}

ChartCompatibilityReport check_compatibility(const FoliationChart& chart, const Boundary& boundary,
                                             int samples, const SampleRange& range) {
  if (samples < 1) throw std::invalid_argument("check_compatibility: samples must be positive");
  std::mt19937_64 rng(range.seed);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  const int n = chart.n();
  const double R = chart.domain_radius();
  ChartCompatibilityReport rep;
  rep.lapse_min = 1e300;
  rep.v_hat_pairing_min = 1e300;
  rep.v_hat_pairing_max = -1e300;

  for (int k = 0; k < samples; ++k) {
    const double lambda =
        samples == 1 ? range.lambda_lo
                     : range.lambda_lo + (range.lambda_hi - range.lambda_lo) * k / (samples - 1);

    // interior sample
    ChartPoint x{0.0, 0.0};
    if (n == 1) {
      x[0] = R * (2.0 * U(rng) - 1.0);
    } else {
      const double r = R * std::sqrt(U(rng)), th = 2.0 * M_PI * U(rng);
      x = {r * std::cos(th), r * std::sin(th)};
    }
    const auto dl = chart.d_lambda(x, lambda);
    for (int i = 0; i < n; ++i)
      rep.orthogonality_max =
          std::max(rep.orthogonality_max, std::abs(minkowski_inner(dl, chart.d_x(x, lambda, i))));
    rep.lapse_min = std::min(rep.lapse_min, chart.lapse(x, lambda));
    const auto g = chart.leaf_metric(x, lambda);
    const bool pos = n == 1 ? g[0] > 0.0 : (g[0] > 0.0 && g[0] * g[3] - g[1] * g[2] > 0.0);
    if (!pos) {
      std::ostringstream os;
      os << "check_compatibility: leaf " << lambda << " is not spacelike";
      throw ChartError(os.str());
    }

    // boundary sample
    const double th = 2.0 * M_PI * U(rng);
    ChartPoint xb = n == 1 ? ChartPoint{(k % 2 ? -R : R), 0.0}
                           : ChartPoint{R * std::cos(th), R * std::sin(th)};
    const double gamma[2] = {xb[0] / R, xb[1] / R};
    auto e = SpacetimeVector::zero(n + 1);
    for (int i = 0; i < n; ++i) e += gamma[i] * chart.d_x(xb, lambda, i);
    const auto e_hat = unit_spacelike(e);
    const auto vhat = hat_v_field(chart, xb, lambda);
    const auto P = chart.map(xb, lambda);

    BoundaryCurvature c;
    if (const auto* rot = std::get_if<RotationalProfile>(&boundary)) {
      if (n != 2) throw ChartError("check_compatibility: rotational boundary needs a 2D chart");
      c = profile_curvature(*rot, P.temporal(), std::atan2(P[1], P[0]));
    } else {
      const auto& pl = std::get<PlanarBoundary>(boundary);
      if (n != 1) throw ChartError("check_compatibility: planar boundary needs a 1D chart");
      const double xs = pl.solve_height(P.temporal(), std::max(1e-3, std::abs(P[0])));
      c = planar_boundary_curvature(pl, xs, xb[0] < 0.0 ? -1 : 1);
    }
    double defect = 0.0;
    for (std::size_t a = 0; a < e_hat.dim(); ++a) defect = std::max(defect, std::abs(e_hat[a] - c.mu[a]));
    rep.boundary_alignment_max = std::max(rep.boundary_alignment_max, defect);
    const double pairing = -minkowski_inner(c.V, vhat);
    rep.v_hat_pairing_min = std::min(rep.v_hat_pairing_min, pairing);
    rep.v_hat_pairing_max = std::max(rep.v_hat_pairing_max, pairing);
    rep.max_leaf_volume = std::max(rep.max_leaf_volume, leaf_volume(chart, lambda));
  }
  return rep;
}

}  // namespace lorentzflow
