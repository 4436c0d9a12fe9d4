#include "lorentzflow/monitor_suite.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

namespace lorentzflow {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Central derivative along the 1D grid in physical units; zero on the axis.
double d_phys(const GeometryFields& g, const std::vector<double>& f, int i) {
  if (g.kind == GridKind::Radial2D && i == 0) return 0.0;
  return (f[i + 1] - f[i - 1]) / (2.0 * g.h);
}

// One-sided three-point derivative at an end node, along the outward direction.
double outward_derivative(const std::vector<double>& f, int end, int inward, double h) {
  return (3.0 * f[end] - 4.0 * f[end + inward] + f[end + 2 * inward]) / (2.0 * h);
}

struct VCoefficients {
  double a, b, da, db, dda, ddb;
};

// V(z) = (a(z) r_hat, b(z)) with a = f'/sqrt(1-f'^2), b = 1/sqrt(1-f'^2).
VCoefficients v_coefficients(const RotationalProfile& p, double z) {
  auto first = [&](double zz, double& a, double& b, double& da, double& db) {
    double fp = p.df(zz), fpp = p.d2f(zz), w = 1.0 - fp * fp;
    a = fp / std::sqrt(w);
    b = 1.0 / std::sqrt(w);
    da = fpp / std::pow(w, 1.5);
    db = fp * fpp / std::pow(w, 1.5);
  };
  VCoefficients c{};
  first(z, c.a, c.b, c.da, c.db);
  const double d = 1e-5;
  double a1, b1, da1, db1, a2, b2, da2, db2;
  first(z + d, a1, b1, da1, db1);
  first(z - d, a2, b2, da2, db2);
  c.dda = (da1 - da2) / (2 * d);
  c.ddb = (db1 - db2) / (2 * d);
  return c;
}

// g^ij <D^2_ij V, nu> + 2 g^ij <D_i V, D_j nu> for the rotational V field on a
// radial graph (meridian theta = 0).
double radial_v_terms(const RotationalProfile& p, double rho, double u, double ur, double urr,
                      double vh) {
  if (rho <= 0.0) return 0.0;
  VCoefficients c = v_coefficients(p, u);
  double v3 = vh * vh * vh, v5 = v3 * vh * vh;
  return v3 * ur * ur * (c.dda * ur - c.ddb) + 2.0 * v5 * ur * urr * (c.da - c.db * ur) +
         c.a * vh * ur / (rho * rho);
}

// Foot height of the mu-line of a rotational tube through (rho, t).
double rotational_foot(const RotationalProfile& p, double rho, double t) {
  double z = t;
  for (int it = 0; it < 60; ++it) {
    double f = p.f(z), fp = p.df(z), fpp = p.d2f(z);
    double F = (rho - f) * fp - (t - z);
    double dF = -fp * fp + (rho - f) * fpp + 1.0;
    double step = F / dF;
    z -= step;
    if (std::abs(step) < 1e-15 * std::max(1.0, std::abs(z))) break;
  }
  return z;
}

// Foot abscissa of the mu-line of a planar boundary through (X, T), X > 0.
double planar_foot(const PlanarBoundary& b, double X, double T, double guess) {
  double x = guess;
  for (int it = 0; it < 60; ++it) {
    double s = b.s(x), sp = b.ds(x), spp = b.d2s(x);
    double G = (X - x) - (T - s) * sp;
    double dG = -1.0 + sp * sp - (T - s) * spp;
    double step = G / dG;
    x -= step;
    if (x <= b.x_lo) x = 0.5 * (x + step + b.x_lo);
    if (std::abs(step) < 1e-15 * std::max(1.0, std::abs(x))) break;
  }
  return x;
}

}  // namespace

std::string format_number(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

double empirical_order(double coarse, double fine, double ratio) {
  if (!(fine > 0.0)) return std::numeric_limits<double>::infinity();
  return std::log(coarse / fine) / std::log(ratio);
}

double volume_identity(const Trajectory& traj) {
  if (traj.series.size() < 2) throw std::invalid_argument("volume_identity needs at least two records");
  const auto& a = traj.series.front();
  const auto& b = traj.series.back();
  double dvol = b.volume - a.volume;
  double integral = b.cum_int_H2 - a.cum_int_H2;
  return std::abs(dvol - integral) / std::max(1.0, std::abs(dvol));
}

EvolutionResiduals evolution_residuals(const Trajectory& traj, const Boundary& boundary) {
  if (traj.states.size() < 3)
    throw std::invalid_argument("evolution_residuals needs at least three stored states");
  EvolutionResiduals out;
  const RotationalProfile* rot = std::get_if<RotationalProfile>(&boundary);
  for (std::size_t k = 1; k + 1 < traj.states.size(); ++k) {
    const FlowState& sm = traj.states[k - 1];
    const FlowState& s0 = traj.states[k];
    const FlowState& sp = traj.states[k + 1];
    GeometryFields gm = geometry(sm, boundary), g0 = geometry(s0, boundary), gp = geometry(sp, boundary);
    const double dt2 = sp.t - sm.t;
    const double pos_dot = (sp.boundary_pos - sm.boundary_pos) / dt2;
    auto LH = laplace_beltrami(g0, g0.H);
    auto Lv = laplace_beltrami(g0, g0.v);
    const int m = s0.grid.kind == GridKind::Disk2D ? disk_lattice(s0.grid.nodes, s0.boundary_pos).m : 0;
    for (int i : g0.nodes) {
      if (!g0.interior[i]) continue;
      double H = g0.H[i], v = g0.v[i], vh = g0.v_hat[i], A2 = g0.normA2[i];
      double dH, dv;  // normal time derivatives
      double extra = 0.0;
      if (s0.grid.kind == GridKind::Disk2D) {
        auto grad = [&](const std::vector<double>& f, double& fx, double& fy) {
          fx = (f[i + 1] - f[i - 1]) / (2 * g0.h);
          fy = (f[i + m] - f[i - m]) / (2 * g0.h);
        };
        double hx, hy, vx, vy;
        grad(g0.H, hx, hy);
        grad(g0.v, vx, vy);
        double adv = H * vh;
        dH = (gp.H[i] - gm.H[i]) / dt2 + adv * (g0.du_x[i] * hx + g0.du_y[i] * hy);
        dv = (gp.v[i] - gm.v[i]) / dt2 + adv * (g0.du_x[i] * vx + g0.du_y[i] * vy);
      } else {
        double hx = d_phys(g0, g0.H, i), vx = d_phys(g0, g0.v, i);
        double adv = H * vh * g0.du_x[i] - g0.s[i] * pos_dot;
        dH = (gp.H[i] - gm.H[i]) / dt2 + adv * hx;
        dv = (gp.v[i] - gm.v[i]) / dt2 + adv * vx;
        if (rot && s0.grid.kind == GridKind::Radial2D) {
          if (i == 0 && std::abs(rot->df(g0.u[0])) > 0.0) continue;  // V is singular on the axis
          extra = radial_v_terms(*rot, g0.x[i], g0.u[i], g0.du_x[i], g0.hess_xx[i], vh);
        }
      }
      out.res_H = std::max(out.res_H, std::abs(dH - LH[i] + H * A2));
      out.res_v = std::max(out.res_v, std::abs(dv - Lv[i] + v * A2 - extra));
    }
    ++out.samples;
  }
  return out;
}

std::vector<BoundarySample> boundary_samples(const FlowState& s, const Boundary& boundary) {
  GeometryFields g = geometry(s, boundary);
  std::vector<BoundarySample> out;
  const int n = s.grid.nodes;
  if (s.grid.kind == GridKind::Radial2D) {
    const auto& p = std::get<RotationalProfile>(boundary);
    const int N = n - 1;
    BoundaryCurvature c = profile_curvature(p, g.u[N], 0.0);
    std::vector<double> vf(n, 0.0);
    for (int i = N - 2; i <= N; ++i) {
      double z = rotational_foot(p, g.x[i], g.u[i]);
      vf[i] = -minkowski_inner(profile_curvature(p, z, 0.0).V, g.nu[i]);
    }
    BoundarySample b;
    b.t = s.t;
    b.H = g.H[N];
    b.A_VV = c.A_VV;
    b.A_nu_nu = second_fundamental_form(c, g.nu[N], g.nu[N]);
    b.grad_mu_H = g.v_hat[N] * outward_derivative(g.H, N, -1, g.h);
    b.H_A_nu_nu = b.H * b.A_nu_nu;
    b.grad_mu_v = g.v_hat[N] * outward_derivative(vf, N, -1, g.h);
    b.v_rhs = -vf[N] * (b.A_nu_nu - b.A_VV);
    out.push_back(b);
  } else if (s.grid.kind == GridKind::Curve1D) {
    const auto& pb = std::get<PlanarBoundary>(boundary);
    for (int side : {1, -1}) {
      const int end = side > 0 ? n - 1 : 0;
      const int inward = side > 0 ? -1 : 1;
      BoundaryCurvature c = planar_boundary_curvature(pb, s.boundary_pos, side);
      std::vector<double> vf(n, 0.0);
      for (int q = 0; q < 3; ++q) {
        int i = end + q * inward;
        double X = side * g.x[i];
        double xf = planar_foot(pb, X, g.u[i], s.boundary_pos);
        vf[i] = -minkowski_inner(planar_boundary_curvature(pb, xf, side).V, g.nu[i]);
      }
      BoundarySample b;
      b.t = s.t;
      b.H = g.H[end];
      b.A_VV = c.A_VV;
      b.A_nu_nu = second_fundamental_form(c, g.nu[end], g.nu[end]);
      b.grad_mu_H = g.v_hat[end] * outward_derivative(g.H, end, inward, g.h);
      b.H_A_nu_nu = b.H * b.A_nu_nu;
      b.grad_mu_v = g.v_hat[end] * outward_derivative(vf, end, inward, g.h);
      b.v_rhs = -vf[end] * (b.A_nu_nu - b.A_VV);
      out.push_back(b);
    }
  } else {
    throw std::invalid_argument(
        "boundary samples need a boundary node on the tube; use the Radial2D reduction for Disk2D");
  }
  return out;
}

BoundaryIdentities boundary_identities(const Trajectory& traj, const Boundary& boundary) {
  BoundaryIdentities out;
  for (const auto& s : traj.states) {
    for (const auto& b : boundary_samples(s, boundary)) {
      out.res_Hmu = std::max(out.res_Hmu, std::abs(b.grad_mu_H + b.H_A_nu_nu));
      out.res_vmu = std::max(out.res_vmu, std::abs(b.grad_mu_v - b.v_rhs));
      out.max_grad_mu_v = std::max(out.max_grad_mu_v, b.grad_mu_v);
      out.max_grad_mu_H2_term =
          std::max(out.max_grad_mu_H2_term, 2.0 * b.H * b.grad_mu_H + b.H * b.H * b.A_VV);
      out.samples.push_back(b);
    }
  }
  return out;
}

namespace {

// Least-squares slope of y against x, clamped at zero.
double ls_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    mx += x[k];
    my += y[k];
  }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    sxy += (x[k] - mx) * (y[k] - my);
    sxx += (x[k] - mx) * (x[k] - mx);
  }
  if (sxx <= 0.0) return 0.0;
  return std::max(0.0, sxy / sxx);
}

WitnessFit fit_h_vs_v(const std::vector<ScalarRecord>& rec, double p, double* sq_residual) {
  std::vector<double> x, y;
  for (const auto& r : rec) {
    x.push_back(std::pow(r.sup_v, p));
    y.push_back(r.sup_H);
  }
  WitnessFit f;
  f.p = p;
  f.C2 = ls_slope(x, y);
  f.C1 = -1e300;
  double sq = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) f.C1 = std::max(f.C1, y[k] - f.C2 * x[k]);
  for (std::size_t k = 0; k < x.size(); ++k) {
    double r = f.C1 + f.C2 * x[k] - y[k];
    sq += r * r;
  }
  if (sq_residual) *sq_residual = sq;
  return f;
}

}  // namespace

EstimateReport estimate_monitors(const Trajectory& traj, const Boundary& boundary, double p) {
  EstimateReport out;
  const auto& rec = traj.series;
  if (rec.empty()) throw std::invalid_argument("estimate_monitors needs a scalar series");
  for (std::size_t k = 1; k < rec.size(); ++k)
    if (rec[k].sup_H > rec[k - 1].sup_H + 1e-8) out.h_sup_monotone = false;

  out.monotone_regime = true;
  if (traj.final_state.grid.kind == GridKind::Disk2D) {
    out.monotone_regime = true;  // cylinder: A(nu, nu) = 0
  } else {
    for (const auto& s : traj.states)
      for (const auto& b : boundary_samples(s, boundary))
        if (b.A_nu_nu < -1e-12) out.monotone_regime = false;
  }

  std::vector<double> osc, logv;
  for (const auto& r : rec) {
    osc.push_back(r.osc_u);
    logv.push_back(std::log(r.sup_v));
  }
  out.grad_bound_fit.C2 = ls_slope(osc, logv);
  out.grad_bound_fit.C1 = 0.0;
  for (const auto& r : rec)
    out.grad_bound_fit.C1 = std::max(out.grad_bound_fit.C1, r.sup_v / std::exp(out.grad_bound_fit.C2 * r.osc_u));

  out.h_vs_v_fit = fit_h_vs_v(rec, p, nullptr);
  double best = std::numeric_limits<double>::infinity();
  for (int q = 1; q < 100; ++q) {
    double sq;
    WitnessFit f = fit_h_vs_v(rec, q / 100.0, &sq);
    if (sq < best) {
      best = sq;
      out.h_vs_v_best = f;
    }
  }
  return out;
}

StabilityCertificate stability_certificate(const FlowState& state, const Boundary& boundary,
                                           std::optional<SpacetimeVector> a_opt, double R,
                                           double epsilon) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");
  GeometryFields g = geometry(state, boundary);
  const std::size_t dim = state.grid.kind == GridKind::Curve1D ? 2 : 3;
  const int n_dim = state.grid.spatial_dim();

  auto point = [&](int k) {
    if (dim == 2) return SpacetimeVector(g.x[k], g.u[k]);
    return SpacetimeVector(g.x[k], g.y[k], g.u[k]);
  };
  SpacetimeVector a;
  if (a_opt) {
    a = *a_opt;
    if (a.dim() != dim) throw DimensionMismatch("certificate centre has the wrong dimension");
  } else {
    double mean = 0.0;
    for (int k : g.nodes) mean += g.u[k];
    mean /= static_cast<double>(g.nodes.size());
    a = SpacetimeVector::zero(dim);
    a.temporal() = mean;
  }

  struct BNode {
    int node, inward;
    double A;
    SpacetimeVector mu;
  };
  std::vector<BNode> bnodes;
  const int n = state.grid.nodes;
  switch (state.grid.kind) {
    case GridKind::Curve1D: {
      const auto& pb = std::get<PlanarBoundary>(boundary);
      for (int side : {1, -1}) {
        int end = side > 0 ? n - 1 : 0;
        auto c = planar_boundary_curvature(pb, state.boundary_pos, side);
        bnodes.push_back({end, side > 0 ? -1 : 1, second_fundamental_form(c, g.nu[end], g.nu[end]), c.mu});
      }
      break;
    }
    case GridKind::Radial2D: {
      auto c = profile_curvature(std::get<RotationalProfile>(boundary), g.u[n - 1], 0.0);
      bnodes.push_back({n - 1, -1, second_fundamental_form(c, g.nu[n - 1], g.nu[n - 1]), c.mu});
      break;
    }
    case GridKind::Disk2D: {
      const auto& p = std::get<RotationalProfile>(boundary);
      for (int k : g.nodes) {
        if (!g.boundary[k]) continue;
        auto c = profile_curvature(p, g.u[k], std::atan2(g.y[k], g.x[k]));
        bnodes.push_back({k, 0, second_fundamental_form(c, g.nu[k], g.nu[k]), c.mu});
      }
      break;
    }
  }

  StabilityCertificate cert;
  cert.epsilon = epsilon;
  cert.hypothesis_holds = true;
  for (const auto& b : bnodes) {
    if (b.A < -1e-12)
      throw HypothesisError("A(nu, nu) = " + format_number(b.A) +
                            " < 0 on the boundary: the certificate cannot be constructed");
    if (b.A <= 1e-12) cert.hypothesis_holds = false;
  }

  double sup_sq = -1e300;
  for (int k : g.nodes) sup_sq = std::max(sup_sq, minkowski_square(point(k) - a));
  if (R <= 0.0) {
    double r0 = -1e300;
    if (cert.hypothesis_holds)
      for (const auto& b : bnodes) {
        SpacetimeVector d = point(b.node) - a;
        r0 = std::max(r0, 2.0 * minkowski_inner(d, b.mu) / b.A + minkowski_square(d));
      }
    R = std::max(r0, sup_sq) + epsilon + 0.01;
  }
  cert.R = R;
  cert.phi.assign(g.v_hat.size(), 0.0);
  cert.min_phi = 1e300;
  for (int k : g.nodes) {
    cert.phi[k] = R - minkowski_square(point(k) - a);
    cert.min_phi = std::min(cert.min_phi, cert.phi[k]);
  }
  std::vector<double> full_phi = cert.phi;
  auto lap = laplace_beltrami(g, full_phi);
  cert.interior_margin = 1e300;
  cert.interior_identity = 0.0;
  for (int k : g.nodes) {
    if (!g.interior[k]) continue;
    cert.interior_margin = std::min(cert.interior_margin, -(lap[k] - cert.phi[k] * g.normA2[k]));
    cert.interior_identity = std::max(cert.interior_identity, std::abs(-lap[k] - 2.0 * n_dim));
  }
  cert.boundary_margin = 1e300;
  for (const auto& b : bnodes) {
    double grad_mu;
    if (b.inward != 0)
      grad_mu = g.v_hat[b.node] * outward_derivative(cert.phi, b.node, b.inward, g.h);
    else
      grad_mu = -2.0 * minkowski_inner(point(b.node) - a, b.mu);
    cert.boundary_margin = std::min(cert.boundary_margin, grad_mu + cert.phi[b.node] * b.A);
  }
  cert.ok = cert.interior_margin >= epsilon && cert.boundary_margin >= 0.0 && cert.min_phi >= epsilon;
  return cert;
}

void MonitorReport::write_csv(std::ostream& os) const {
  os << "t,dt,sup_v,sup_v_hat,sup_H,volume,int_H2,cum_int_H2,osc_u,boundary_pos,max_gradient_sq,"
        "grad_mu_H,H_A_nu_nu,grad_mu_v,v_rhs\n";
  std::size_t b = 0;
  for (const auto& r : records) {
    os << format_number(r.t) << ',' << format_number(r.dt) << ',' << format_number(r.sup_v) << ','
       << format_number(r.sup_v_hat) << ',' << format_number(r.sup_H) << ','
       << format_number(r.volume) << ',' << format_number(r.int_H2) << ','
       << format_number(r.cum_int_H2) << ',' << format_number(r.osc_u) << ','
       << format_number(r.boundary_pos) << ',' << format_number(r.max_gradient_sq);
    while (b < boundary.size() && boundary[b].t < r.t) ++b;
    if (b < boundary.size() && boundary[b].t == r.t) {
      const auto& s = boundary[b];
      os << ',' << format_number(s.grad_mu_H) << ',' << format_number(s.H_A_nu_nu) << ','
         << format_number(s.grad_mu_v) << ',' << format_number(s.v_rhs);
    } else {
      os << ",,,,";
    }
    os << '\n';
  }
}

void MonitorReport::write_summary(std::ostream& os) const {
  for (const auto& [k, v] : summary) os << k << " = " << format_number(v) << '\n';
  for (const auto& [k, v] : notes) os << k << " = " << v << '\n';
}

}  // namespace lorentzflow
