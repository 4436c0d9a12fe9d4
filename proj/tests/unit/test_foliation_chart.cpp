#include <cmath>
#include <random>

#include "doctest.h"
#include "lorentzflow/foliation_chart.hpp"
#include "lorentzflow/graph_discretization.hpp"

using namespace lorentzflow;

TEST_CASE("flat chart basics") {
  FlatChart c(2, 1.0);
  auto V = hat_v_field(c, {0.3, -0.2}, 0.7);
  CHECK(V[0] == doctest::Approx(0.0));
  CHECK(V[1] == doctest::Approx(0.0));
  CHECK(V.temporal() == doctest::Approx(1.0));
  CHECK(c.time_function(SpacetimeVector(0.1, 0.2, -0.4)) == doctest::Approx(-0.4));
  CHECK(c.lapse({0.1, 0.1}, 3.0) == doctest::Approx(1.0));
}

TEST_CASE("flat chart against the unit cylinder has closed-form zeros") {
  FlatChart c(2, 1.0);
  auto rep = check_compatibility(c, RotationalProfile::cylinder(1.0), 200);
  CHECK(rep.orthogonality_max == 0.0);
  CHECK(rep.lapse_min == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(rep.boundary_alignment_max <= 1e-15);
  CHECK(rep.v_hat_pairing_min == doctest::Approx(1.0));
  CHECK(rep.v_hat_pairing_max == doctest::Approx(1.0));
  CHECK(rep.max_leaf_volume == doctest::Approx(M_PI).epsilon(1e-6));
}

TEST_CASE("flat chart against the trumpet: pairing grows with the sampled range") {
  FlatChart c(1, 10.0);
  auto b = PlanarBoundary::trumpet();
  auto near = check_compatibility(c, b, 200, {0.0, 1.0});
  auto far = check_compatibility(c, b, 200, {3.0, 4.0});
  // -<V, e_t> = cosh x on the branch, with sinh x = e^height.
  CHECK(far.v_hat_pairing_max <= std::sqrt(1.0 + std::exp(8.0)) * (1 + 1e-9));
  CHECK(near.v_hat_pairing_max > 1.0);
  CHECK(far.v_hat_pairing_max > 5.0 * near.v_hat_pairing_max);
}

TEST_CASE("hyperbolic leaf chart for the pseudosphere") {
  auto p = RotationalProfile::pseudosphere(1.0, 0.0);
  RotationalLeafChart c(p, 0.0);

  SUBCASE("axis normal is e3") {
    for (double lam : {-0.8, 0.0, 0.5}) {
      auto V = hat_v_field(c, {0.0, 0.0}, lam);
      CHECK(std::abs(V[0]) <= 1e-12);
      CHECK(std::abs(V[1]) <= 1e-12);
      CHECK(V.temporal() == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
  SUBCASE("orthogonality, normalization and inversion") {
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> r(0.0, 0.95), th(0.0, 2 * M_PI), lam(-1.0, 1.0);
    double ortho = 0.0, norm = 0.0, inv = 0.0;
    for (int k = 0; k < 200; ++k) {
      double rr = r(rng), tt = th(rng), ll = lam(rng);
      ChartPoint x{rr * std::cos(tt), rr * std::sin(tt)};
      auto dl = c.d_lambda(x, ll);
      for (int i = 0; i < 2; ++i) ortho = std::max(ortho, std::abs(minkowski_inner(dl, c.d_x(x, ll, i))));
      auto V = hat_v_field(c, x, ll);
      norm = std::max(norm, std::abs(minkowski_square(V) + 1.0));
      inv = std::max(inv, std::abs(c.time_function(c.map(x, ll)) - ll));
    }
    CHECK(ortho <= 1e-10);
    CHECK(norm <= 1e-12);
    CHECK(inv <= 1e-10);
  }
  SUBCASE("leaf anchored at z0 has time function z0") {
    for (double z0 : {-0.5, 0.3, 1.0}) {
      auto leaf = cmc_leaf_through(p, z0);
      double rho = 0.4 * p.f(z0);
      SpacetimeVector y(rho, 0.0, leaf.height(rho));
      CHECK(c.time_function(y) == doctest::Approx(z0).epsilon(1e-10));
    }
  }
  SUBCASE("compatibility report") {
    auto rep = check_compatibility(c, p, 100);
    CHECK(rep.boundary_alignment_max <= 1e-10);
    CHECK(rep.orthogonality_max <= 1e-10);
    CHECK(rep.lapse_min > 0.0);
    CHECK(rep.v_hat_pairing_min >= 1.0 - 1e-12);
  }
  SUBCASE("points outside the tube are rejected") {
    CHECK_THROWS_AS(c.time_function(SpacetimeVector(5.0, 0.0, 0.0)), ChartError);
  }
}

TEST_CASE("flat chart v-hat agrees with the graph formula") {
  FlowState s;
  s.grid = {GridKind::Radial2D, 41};
  s.boundary_pos = 1.0;
  s.u.resize(41);
  for (int i = 0; i < 41; ++i) {
    double rho = i / 40.0;
    s.u[i] = 0.3 * rho * rho * (1 - 0.5 * rho * rho);  // u_rho(1) = 0
  }
  auto geo = geometry(s, RotationalProfile::cylinder(1.0));
  for (int i = 0; i < 41; ++i) {
    double ur = geo.du_x[i];
    CHECK(geo.v_hat[i] == doctest::Approx(1.0 / std::sqrt(1 - ur * ur)).epsilon(1e-15));
    // The flat chart has hat V = e3, so hat v = nu^t.
    CHECK(geo.nu[i].temporal() == doctest::Approx(geo.v_hat[i]).epsilon(1e-15));
  }
}
