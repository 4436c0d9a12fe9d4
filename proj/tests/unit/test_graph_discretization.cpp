#include <cmath>
#include <random>
#include <sstream>

#include "doctest.h"
#include "lorentzflow/graph_discretization.hpp"

using namespace lorentzflow;

namespace {

FlowState curve_state(int n, double xb, double t) {
  FlowState s;
  s.grid = {GridKind::Curve1D, n};
  s.boundary_pos = xb;
  s.u.resize(n);
  for (int i = 0; i < n; ++i) {
    double x = (-1.0 + 2.0 * i / (n - 1)) * xb;
    s.u[i] = std::log(std::cosh(x)) + t;
  }
  return s;
}

FlowState radial_state(int n, double rb, double (*fn)(double)) {
  FlowState s;
  s.grid = {GridKind::Radial2D, n};
  s.boundary_pos = rb;
  s.u.resize(n);
  for (int i = 0; i < n; ++i) s.u[i] = fn(rb * i / (n - 1));
  return s;
}

FlowState disk_state(int n, double (*fn)(double, double)) {
  FlowState s;
  s.grid = {GridKind::Disk2D, n};
  s.boundary_pos = 1.0;
  const auto& lat = disk_lattice(n, 1.0);
  s.u.assign(storage_size(s.grid), 0.0);
  for (int k : lat.inside) s.u[k] = fn(lat.coord(k % lat.m), lat.coord(k / lat.m));
  fill_ghosts(lat, s.u);
  return s;
}

double hyperboloid(double rho) { return -1.0 + std::sqrt(2.0 + rho * rho); }
double bump(double rho) { return 0.1 * std::pow(1 - rho * rho, 2); }

}  // namespace

TEST_CASE("grid validation") {
  CHECK_THROWS_AS(GridSpec({GridKind::Radial2D, 4}).validate(), GridError);
  CHECK_NOTHROW(GridSpec({GridKind::Radial2D, 5}).validate());
  CHECK(parse_grid_kind("Disk2D") == GridKind::Disk2D);
  CHECK_THROWS_AS(parse_grid_kind("sphere"), GridError);
}

TEST_CASE("flat disk") {
  auto s = disk_state(41, [](double, double) { return 0.25; });
  auto geo = geometry(s, RotationalProfile::cylinder(1.0));
  for (int k : geo.nodes) {
    CHECK(geo.H[k] == 0.0);
    CHECK(geo.v_hat[k] == 1.0);
  }
  CHECK(geo.volume == doctest::Approx(M_PI).epsilon(1e-12));
  CHECK(geo.osc_u == 0.0);
  CHECK(oscillation(s) == 0.0);
  CHECK(height_gradient_identity(s, RotationalProfile::cylinder(1.0)) == 0.0);
}

TEST_CASE("disk lattice weights and ghosts") {
  const auto& lat = disk_lattice(61, 1.0);
  double total = 0.0;
  for (double a : lat.area) total += a;
  CHECK(total == doctest::Approx(M_PI).epsilon(1e-12));
  CHECK_FALSE(lat.ghosts.empty());
  for (auto& w : lat.ghost_w) {
    double sum = 0.0;
    for (double x : w) {
      CHECK(x >= 0.0);
      sum += x;
    }
    CHECK(sum == doctest::Approx(1.0));
  }
  // Disk2D needs a cylinder matching the disk.
  auto s = disk_state(21, [](double, double) { return 0.0; });
  CHECK_THROWS_AS(geometry(s, RotationalProfile::cylinder(2.0)), GridError);
  CHECK_THROWS_AS(geometry(s, RotationalProfile::sine_tube()), GridError);
}

TEST_CASE("translator geometry on the trumpet") {
  auto b = PlanarBoundary::trumpet();
  double err_prev = 0.0;
  for (int n : {101, 201}) {
    // boundary of u = log cosh x + t on the trumpet: tanh x_b = e^t
    double t = -1.0, xb = std::atanh(std::exp(t));
    auto s = curve_state(n, xb, t);
    auto geo = geometry(s, b);
    CHECK(geo.boundary_slope == doctest::Approx(std::tanh(xb)).epsilon(1e-14));
    double err = 0.0;
    for (int i = 0; i < n; ++i) {
      double x = geo.x[i];
      CHECK(geo.v_hat[i] == doctest::Approx(std::cosh(x)).epsilon(1e-3));
      // the update rate uses the monotone ghost stencil at the ends, first order there
      if (i > 0 && i < n - 1) err = std::max(err, std::abs(geo.speed[i] - 1.0));
      err = std::max(err, std::abs(geo.H[i] / geo.v_hat[i] - 1.0));
      CHECK(std::abs(minkowski_square(geo.nu[i]) + 1.0) <= 1e-12);
      CHECK(geo.nu[i].temporal() > 0.0);
    }
    CHECK(err <= 1e-3);
    if (err_prev > 0) CHECK(err_prev / err == doctest::Approx(4.0).epsilon(0.1));
    err_prev = err;
    CHECK(oscillation(s) == doctest::Approx(std::log(std::cosh(xb))).epsilon(1e-12));
  }
}

TEST_CASE("oscillation examples") {
  auto s = curve_state(51, 1.0, 0.0);
  CHECK(oscillation(s) == doctest::Approx(std::log(std::cosh(1.0))));
  auto r = radial_state(51, 1.0, bump);
  CHECK(oscillation(r) == doctest::Approx(0.1));
}

TEST_CASE("hyperboloid has H = 2/R to second order") {
  auto p = RotationalProfile::pseudosphere(1.0, 0.0);
  double err_prev = 0.0;
  for (int n : {51, 101, 201}) {
    auto s = radial_state(n, std::sqrt(2.0), hyperboloid);
    auto geo = geometry(s, p);
    double err = 0.0;
    for (int i = 0; i < n; ++i) err = std::max(err, std::abs(geo.H[i] * std::sqrt(2.0) - 2.0));
    CHECK(err <= 5e-3);
    if (err_prev > 0) CHECK(err_prev / err == doctest::Approx(4.0).epsilon(0.15));
    err_prev = err;
    // |A|^2 = H^2 / 2 on an umbilic surface
    CHECK(geo.normA2[n / 2] == doctest::Approx(geo.H[n / 2] * geo.H[n / 2] / 2).epsilon(1e-3));
  }
}

TEST_CASE("algebraic identities at every node") {
  auto p = RotationalProfile::sine_tube(2.0, 0.5, 1.0);
  FlowState s;
  s.grid = {GridKind::Radial2D, 31};
  s.boundary_pos = p.f(0.0);
  s.u.resize(31);
  for (int i = 0; i < 31; ++i) {
    double rho = s.boundary_pos * i / 30.0;
    s.u[i] = 0.05 * std::cos(M_PI * rho / s.boundary_pos);
  }
  auto geo = geometry(s, p);
  for (int i = 0; i < 31; ++i) {
    auto& g = geo.g[i];
    double det = g[0] * g[3] - g[1] * g[2];
    CHECK(std::abs(det - geo.det_g_hat[i] / (geo.v_hat[i] * geo.v_hat[i])) <= 1e-12);
    CHECK(geo.v_hat[i] >= 1.0);
    CHECK(geo.v[i] >= 1.0);
    CHECK(geo.dV[i] >= 0.0);
    // nu is orthogonal to dF/drho = (1, 0, u_rho)
    SpacetimeVector tangent(1.0, 0.0, geo.du_x[i]);
    CHECK(std::abs(minkowski_inner(geo.nu[i], tangent)) <= 1e-14);
  }
  auto d = disk_state(31, [](double x, double y) { return 0.1 * x * std::pow(1 - x * x - y * y, 2); });
  auto dg = geometry(d, RotationalProfile::cylinder(1.0));
  for (int k : dg.nodes) {
    auto& g = dg.g[k];
    double det = g[0] * g[3] - g[1] * g[2];
    CHECK(std::abs(det - 1.0 / (dg.v_hat[k] * dg.v_hat[k])) <= 1e-12);
    // g g^-1 = I
    auto& q = dg.g_inv[k];
    CHECK(std::abs(g[0] * q[0] + g[1] * q[2] - 1.0) <= 1e-12);
    CHECK(std::abs(g[0] * q[1] + g[1] * q[3]) <= 1e-12);
  }
}

TEST_CASE("spacelike guard in geometry") {
  FlowState s;
  s.grid = {GridKind::Radial2D, 11};
  s.boundary_pos = 1.0;
  s.u.resize(11);
  for (int i = 0; i < 11; ++i) s.u[i] = 1.2 * i / 10.0;
  CHECK_THROWS_AS(geometry(s, RotationalProfile::cylinder(1.0)), SpacelikeViolation);
  s.u[3] = std::nan("");
  CHECK_THROWS_AS(geometry(s, RotationalProfile::cylinder(1.0)), SpacelikeViolation);
}

TEST_CASE("height gradient identity") {
  auto cyl = RotationalProfile::cylinder(1.0);
  SUBCASE("translator residual is O(h^2)") {
    auto b = PlanarBoundary::trumpet();
    double t = -1.0, xb = std::atanh(std::exp(t));
    double r1 = height_gradient_identity(curve_state(101, xb, t), b);
    double r2 = height_gradient_identity(curve_state(201, xb, t), b);
    CHECK(r1 <= 1e-3);
    CHECK(r1 / r2 == doctest::Approx(4.0).epsilon(0.1));
  }
  SUBCASE("random smooth radial data refine at ratio 4") {
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> c(-0.05, 0.05);
    for (int trial = 0; trial < 5; ++trial) {
      double a1 = c(rng), a2 = c(rng), a3 = c(rng);
      auto make = [&](int n) {
        FlowState s;
        s.grid = {GridKind::Radial2D, n};
        s.boundary_pos = 1.0;
        s.u.resize(n);
        for (int i = 0; i < n; ++i) {
          double r = static_cast<double>(i) / (n - 1);
          s.u[i] = a1 * std::cos(M_PI * r) + a2 * std::cos(2 * M_PI * r) + a3 * std::cos(3 * M_PI * r);
        }
        return s;
      };
      double r1 = height_gradient_identity(make(81), cyl);
      double r2 = height_gradient_identity(make(161), cyl);
      CHECK(r1 / r2 == doctest::Approx(4.0).epsilon(0.2));
    }
  }
  SUBCASE("disk data are consistent") {
    auto d = disk_state(81, [](double x, double y) { return 0.1 * std::pow(1 - x * x - y * y, 2); });
    CHECK(height_gradient_identity(d, cyl) <= 5e-3);
  }
}

TEST_CASE("laplace-beltrami of a constant vanishes") {
  auto s = radial_state(41, std::sqrt(2.0), hyperboloid);
  auto geo = geometry(s, RotationalProfile::pseudosphere(1.0, 0.0));
  auto lap = laplace_beltrami(geo, std::vector<double>(41, 3.0));
  for (int i = 0; i < 40; ++i) CHECK(lap[i] == 0.0);
  CHECK(std::isnan(lap[40]));
}

TEST_CASE("profile csv") {
  auto s = radial_state(6, 1.0, bump);
  auto geo = geometry(s, RotationalProfile::cylinder(1.0));
  std::ostringstream os;
  write_profile_csv(os, geo);
  std::string text = os.str();
  CHECK(text.rfind("s,physical_coord,u,H,v,v_hat,normA2,dV\n", 0) == 0);
  int lines = 0;
  for (char ch : text) lines += ch == '\n';
  CHECK(lines == 7);
}

TEST_CASE("end-node stencils keep constants exact") {
  // f'(fl(pi/2)) = 3e-17 is the only nonzero input; H must stay at its size over h
  const auto p = RotationalProfile::sine_tube(2.0, 0.5, 1.0);
  for (int n : {26, 101, 401}) {
    FlowState s;
    s.grid = {GridKind::Radial2D, n};
    s.boundary_pos = p.f(M_PI / 2);
    s.u.assign(n, M_PI / 2);
    const auto g = geometry(s, p);
    for (int i = 0; i < n; ++i) CHECK(std::abs(g.H[i]) <= 1e-13);
  }
  const auto tr = PlanarBoundary::linear(2.0);
  FlowState c;
  c.grid = {GridKind::Curve1D, 101};
  c.u.assign(101, 1.0 / 3.0);
  c.boundary_pos = tr.solve_height(1.0 / 3.0, 1.0);
  const auto g = geometry(c, tr);
  // the extrapolated ghost of a constant is that constant, so every slope vanishes exactly
  for (int i = 0; i < 101; ++i) CHECK(g.du_x[i] == 0.0);
}
