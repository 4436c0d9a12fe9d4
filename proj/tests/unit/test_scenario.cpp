#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "fixtures.hpp"
#include "lorentzflow/scenario.hpp"

using namespace lorentzflow;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("lorentzflow_test_scenario") / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string with_output(const std::string& text, const fs::path& dir) {
  return text + "output_dir = " + dir.string() + "\n";
}

}  // namespace

TEST_CASE("minimal config gets documented defaults") {
  auto c = parse_config("scenario = grim_reaper\nnodes = 401  # comment\n");
  CHECK(c.nodes == 401);
  CHECK(c.profile == "trumpet");
  CHECK(c.grid == GridKind::Curve1D);
  CHECK(c.initial == "exact");
  CHECK(c.t0 == -1.0);
  CHECK(c.t_end == -0.3);
  CHECK(c.cfl == 0.2);
  CHECK(c.eps_guard == 1e-3);
  CHECK(c.output_dir == "runs/grim_reaper");
  CHECK(parse_config("scenario = grim_reaper\nnodes = 9\n", "fig1").output_dir == "runs/fig1");

  auto d = parse_config("scenario = cylinder_disk\nnodes = 21\n");
  CHECK(d.grid == GridKind::Disk2D);
  CHECK(d.profile == "cylinder(1)");
  auto p = parse_config("scenario = pseudosphere_profile\nnodes = 21\nprofile = pseudosphere(1, 0.5)\n");
  CHECK(p.height == -0.5);
}

TEST_CASE("config errors") {
  const std::string base = "scenario = cylinder_disk\nnodes = 21\n";
  CHECK_THROWS_AS(parse_config(base + "cfl = 0.9\n"), ConfigError);
  CHECK_THROWS_AS(parse_config(base + "cfl = 0\n"), ConfigError);
  CHECK_THROWS_AS(parse_config(base + "colour = red\n"), ConfigError);
  CHECK_THROWS_AS(parse_config(base + "cfl = 0.1\ncfl = 0.2\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("scenario = cylinder_disk\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("nodes = 21\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("scenario = cylinder_disk\nnodes = 4\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("scenario = wave\nnodes = 21\n"), ConfigError);
  CHECK_THROWS_AS(parse_config(base + "nodes\n"), ConfigError);
  CHECK_THROWS_AS(parse_config(base + "profile = sine_tube(2, 0.5, 1)\n"), ConfigError);
  CHECK_THROWS_AS(parse_config(base + "profile = trumpet\n"), ConfigError);
  CHECK_THROWS_AS(parse_config(base + "initial = exact\n"), ConfigError);
  CHECK_THROWS_AS(parse_config(base + "initial = spline(1)\n"), ConfigError);
  CHECK_THROWS_AS(parse_config(base + "initial = bump(0)\n"), ConfigError);
  CHECK_THROWS_AS(parse_config(base + "t_end = -1\n"), ConfigError);
  CHECK_THROWS_AS(parse_config(base + "monitor_volume = maybe\n"), ConfigError);
  CHECK_THROWS_AS(parse_config(base + "max_steps = 1e4\n"), ConfigError);
  CHECK_THROWS_AS(parse_config(base + "chart = polar\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("scenario = grim_reaper\nnodes = 21\nchart = hyperbolic\n"), ConfigError);
}

TEST_CASE("serialize round trip") {
  const char* texts[] = {
      "scenario = grim_reaper\nnodes = 401\ncfl = 0.5\nt_end = 0\n",
      "scenario = cylinder_disk\nnodes = 101\ninitial = constant(0)\nmax_steps = 10000\n",
      "scenario = sine_tube\nnodes = 81\ninitial = bump(-1.5707963267948966, 0.05)\nh_stop = 1e-7\n"
      "monitor_certificate = yes\nmax_pairing = 3.25\n",
      "scenario = hyperbolic_plane\nnodes = 41\nheight = 0.7\nstepper = rk2\nchart = hyperbolic\n",
      "scenario = plane\nnodes = 11\ninitial = nodes(0, 0.01, 0.02)\ncondition_lo = -0.1\n"};
  for (const char* t : texts) {
    const ScenarioConfig c = parse_config(t);
    const std::string s = serialize(c);
    const ScenarioConfig back = parse_config(s);
    CHECK(back == c);
    CHECK(serialize(back) == s);
    CHECK(back.cfl == c.cfl);
    CHECK(back.t_end == c.t_end);
    CHECK(back.max_pairing == c.max_pairing);
  }
}

TEST_CASE("grim reaper solution satisfies the graph equation and the boundary conditions") {
  const auto cfg = parse_config("scenario = grim_reaper\nnodes = 21\n");
  const auto sol = analytic_solution(cfg);
  REQUIRE(sol);
  const double d = 1e-4;
  for (double t : {-1.0, -0.5, -0.1}) {
    const double xb = sol->boundary_pos(t);
    for (double x : {-0.9 * xb, -0.3 * xb, 0.0, 0.5 * xb, xb}) {
      // central differences of the evaluator itself
      const double ux = (sol->u(x + d, t) - sol->u(x - d, t)) / (2 * d);
      const double uxx = (sol->u(x + d, t) - 2 * sol->u(x, t) + sol->u(x - d, t)) / (d * d);
      const double ut = (sol->u(x, t + d) - sol->u(x, t - d)) / (2 * d);
      CHECK(ut == doctest::Approx(uxx / (1 - ux * ux)).epsilon(1e-6));
    }
    // incidence u = log sinh x_b and perpendicularity u_x s'(x_b) = 1
    CHECK(sol->u(xb, t) == doctest::Approx(std::log(std::sinh(xb))).epsilon(1e-13));
    CHECK(sol->u_r(xb, t) * (1.0 / std::tanh(xb)) == doctest::Approx(1.0).epsilon(1e-13));
  }
}

TEST_CASE("hyperbolic plane meets the pseudosphere perpendicularly") {
  const auto cfg = parse_config("scenario = hyperbolic_plane\nnodes = 21\n");
  const auto sol = analytic_solution(cfg);
  REQUIRE(sol);
  CHECK_FALSE(sol->time_dependent);
  CHECK(sol->R == doctest::Approx(std::sqrt(2.0)).epsilon(1e-14));
  const double rb = sol->boundary_pos(0.0);
  CHECK(rb == doctest::Approx(std::sqrt(2.0)).epsilon(1e-14));
  CHECK(sol->u(rb, 0) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(sol->u_r(rb, 0) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-14));
  CHECK(sol->u(0.0, 0) == doctest::Approx(-1.0 + std::sqrt(2.0)).epsilon(1e-14));
}

TEST_CASE("analytic solution availability") {
  CHECK(analytic_solution(parse_config("scenario = plane\nnodes = 21\n"))->stationary);
  CHECK(analytic_solution(parse_config("scenario = cylinder_disk\nnodes = 21\ninitial = constant(0.3)\n"))
            ->name == "cylinder_disk_constant");
  CHECK_FALSE(analytic_solution(parse_config("scenario = cylinder_disk\nnodes = 21\n")));
  CHECK_FALSE(analytic_solution(parse_config("scenario = sine_tube\nnodes = 21\n")));
  // a constant off the critical heights of the sine tube is not a solution
  CHECK_FALSE(analytic_solution(parse_config("scenario = sine_tube\nnodes = 21\ninitial = constant(0.3)\n")));
  CHECK(analytic_solution(parse_config("scenario = pseudosphere_profile\nnodes = 21\n"))->stationary);
}

TEST_CASE("initial states") {
  const auto gr = initial_state(parse_config("scenario = grim_reaper\nnodes = 41\n"));
  const auto ref = fixtures::translator(41, -1.0);
  CHECK(gr.boundary_pos == doctest::Approx(ref.boundary_pos).epsilon(1e-15));
  for (int i = 0; i < 41; ++i) CHECK(gr.u[i] == doctest::Approx(ref.u[i]).epsilon(1e-14));

  const auto disk = initial_state(parse_config("scenario = cylinder_disk\nnodes = 21\n"));
  const auto dref = fixtures::disk(21, 0.1);
  for (int k : disk_lattice(21, 1.0).inside) CHECK(disk.u[k] == doctest::Approx(dref.u[k]).epsilon(1e-14));

  const auto sine = parse_config("scenario = sine_tube\nnodes = 21\n");
  const auto rs = initial_state(sine);
  CHECK(rs.boundary_pos == doctest::Approx(2.5).epsilon(1e-15));
  CHECK(rs.u[0] == doctest::Approx(M_PI / 2 + 0.05));
  CHECK(rs.u[20] == doctest::Approx(M_PI / 2));
  const auto radial = initial_state(parse_config("scenario = cylinder_disk\nnodes = 21\n"),
                                    GridKind::Radial2D, 11);
  CHECK(radial.grid.kind == GridKind::Radial2D);
  CHECK(radial.u[5] == doctest::Approx(0.1 * std::pow(1 - 0.25, 2)));

  const auto nodes = initial_state(parse_config("scenario = plane\nnodes = 5\ninitial = nodes(0, 0.2, 0.1)\n"));
  CHECK(nodes.u[0] == 0.0);
  CHECK(nodes.u[1] == doctest::Approx(0.1));
  CHECK(nodes.u[2] == doctest::Approx(0.2));
  CHECK(nodes.u[3] == doctest::Approx(0.15));
  CHECK(nodes.u[4] == doctest::Approx(0.1));

  const auto flat = initial_state(
      parse_config("scenario = grim_reaper\nnodes = 11\ninitial = constant(0.2)\nt0 = 0\nt_end = 1\n"));
  CHECK(std::log(std::sinh(flat.boundary_pos)) == doctest::Approx(0.2).epsilon(1e-12));
}

TEST_CASE("boundary checks") {
  auto trumpet = check_boundary(parse_config("scenario = grim_reaper\nnodes = 21\n"));
  CHECK_FALSE(trumpet.ok);
  CHECK_FALSE(trumpet.condition_ok);
  // A(V, V) = -sinh x on the trumpet, largest at the top of the sampled heights
  CHECK(trumpet.worst_height == 2.0);
  CHECK(trumpet.worst_value == doctest::Approx(std::exp(2.0)).epsilon(1e-10));

  auto cyl = check_boundary(parse_config("scenario = cylinder_disk\nnodes = 21\n"));
  CHECK(cyl.ok);
  CHECK(cyl.compatibility_evaluated);
  CHECK(cyl.compatibility.v_hat_pairing_max == doctest::Approx(1.0));

  auto pseudo = check_boundary(parse_config("scenario = pseudosphere_profile\nnodes = 21\n"));
  CHECK(pseudo.ok);
  CHECK(std::abs(pseudo.worst_value) <= 1e-12);
  CHECK(pseudo.signs_agree);

  auto gauss = check_boundary(parse_config(
      "scenario = sine_tube\nnodes = 21\nprofile = gaussian(0.5, 2, 0.5)\ninitial = bump(0, 0.01)\n"));
  CHECK_FALSE(gauss.ok);

  auto capped = check_boundary(parse_config("scenario = cylinder_disk\nnodes = 21\nmax_leaf_volume = 1\n"));
  CHECK_FALSE(capped.volume_ok);
  CHECK_FALSE(capped.ok);

  std::ostringstream os;
  trumpet.write(os);
  CHECK(os.str().find("ok = false") != std::string::npos);
}

TEST_CASE("run_scenario exit codes and outputs") {
  const auto root = scratch("runs");
  SUBCASE("trumpet with require_conditions gives exit 4") {
    auto c = parse_config(with_output("scenario = grim_reaper\nnodes = 21\nrequire_conditions = true\n",
                                      root / "cond"));
    auto r = run_scenario(c);
    CHECK(r.exit_code == kExitCondition);
    CHECK(fs::exists(root / "cond" / "monitor_summary.txt"));
  }
  SUBCASE("constant disk is a fixed point") {
    auto c = parse_config(with_output(
        "scenario = cylinder_disk\nnodes = 21\ninitial = constant(0)\nmax_steps = 300\nt_end = 100\n",
        root / "disk"));
    auto r = run_scenario(c);
    CHECK(r.exit_code == kExitOk);
    CHECK(r.monitors.summary.at("final.sup_H") <= 1e-10);
    CHECK(r.monitors.summary.at("final.max_abs_u") <= 1e-12);
    CHECK(r.monitors.summary.at("steps") == 300);
    for (const char* f : {"timeseries.csv", "final_profile.csv", "monitor_summary.txt", "config.cfg"})
      CHECK(fs::exists(root / "disk" / f));
    CHECK(parse_config(slurp(root / "disk" / "config.cfg")) == c);
  }
  SUBCASE("grim reaper continued toward t = 0 trips the guard") {
    // the guard stops the run; t_end only has to lie beyond the blow-up time
    auto c = parse_config(with_output(
        "scenario = grim_reaper\nnodes = 101\ncfl = 0.5\nt0 = -0.3\nt_end = 1\n", root / "blow"));
    auto r = run_scenario(c);
    CHECK(r.exit_code == kExitGuard);
    REQUIRE(r.monitors.summary.count("guard_time"));
    const double tg = r.monitors.summary.at("guard_time");
    CHECK(tg < 0.0);
    CHECK(std::abs(tg - 0.5 * std::log(1.0 - c.eps_guard)) < 5e-4);
    CHECK(slurp(root / "blow" / "monitor_summary.txt").find("guard_time") != std::string::npos);
  }
  SUBCASE("curved chart is a configuration error") {
    auto c = parse_config(with_output("scenario = plane\nnodes = 21\nchart = hyperbolic\n", root / "chart"));
    CHECK(run_scenario(c).exit_code == kExitConfig);
  }
  SUBCASE("outputs are deterministic") {
    const std::string text = "scenario = sine_tube\nnodes = 21\nt_end = 0.05\nstride = 10\nmonitor_boundary = true\n";
    run_scenario(parse_config(with_output(text, root / "a")));
    run_scenario(parse_config(with_output(text, root / "b")));
    for (const char* f : {"timeseries.csv", "final_profile.csv", "monitor_summary.txt"})
      CHECK(slurp(root / "a" / f) == slurp(root / "b" / f));
    CHECK(slurp(root / "a" / "timeseries.csv").size() > 100);
  }
}

TEST_CASE("output root override") {
  const auto root = scratch("root");
  setenv("LORENTZFLOW_OUTPUT_ROOT", root.string().c_str(), 1);
  auto c = parse_config("scenario = plane\nnodes = 11\nt_end = 0.01\n", "flat");
  CHECK(resolve_output_dir(c) == (root / "runs/flat").string());
  CHECK(run_scenario(c).exit_code == kExitOk);
  CHECK(fs::exists(root / "runs/flat/final_profile.csv"));
  unsetenv("LORENTZFLOW_OUTPUT_ROOT");
  CHECK(output_root() == ".");
}

TEST_CASE("residual study in run_scenario") {
  const auto root = scratch("residuals");
  auto c = parse_config(with_output(
      "scenario = cylinder_disk\nnodes = 51\nt_end = 0.05\nmonitor_residuals = true\nresidual_levels = 2\n"
      "probe_warm = 0.2\nmonitor_boundary = true\n",
      root));
  auto r = run_scenario(c);
  CHECK(r.exit_code == kExitOk);
  const auto& s = r.monitors.summary;
  CHECK(r.monitors.notes.at("residual_grid") == "Radial2D");
  REQUIRE(s.count("residual.res_H.n26"));
  REQUIRE(s.count("residual.res_H.n51"));
  CHECK(s.at("residual.order.res_H") >= 1.0);
  CHECK(s.at("residual.order.res_v") >= 1.0);
  CHECK(r.monitors.notes.count("boundary_identities"));
}

TEST_CASE("convergence study") {
  SUBCASE("translator is second order") {
    auto c = parse_config("scenario = grim_reaper\nnodes = 26\ncfl = 0.5\nt_end = -0.7\n");
    auto t = convergence_study(c, 3);
    REQUIRE(t.levels.size() == 3);
    CHECK(t.levels[1].nodes == 51);
    CHECK(t.levels[2].nodes == 101);
    CHECK(t.levels[0].h == doctest::Approx(2 * t.levels[1].h));
    CHECK(t.min_order() == doctest::Approx(2.0).epsilon(0.1));
  }
  SUBCASE("stationary plane saturates") {
    auto t = convergence_study(parse_config("scenario = plane\nnodes = 11\nt_end = 0.05\n"), 2);
    CHECK(t.levels[0].saturated);
    CHECK(t.levels[1].saturated);
    CHECK(std::isnan(t.min_order()));
  }
  SUBCASE("hyperbolic plane static check") {
    auto t = convergence_study(parse_config("scenario = hyperbolic_plane\nnodes = 21\n"), 3);
    CHECK(t.quantity == "max_abs_HR_minus_2");
    CHECK(t.levels[0].steps == 0);
    CHECK(t.min_order() == doctest::Approx(2.0).epsilon(0.1));
  }
  SUBCASE("non-analytic scenario") {
    CHECK_THROWS_AS(convergence_study(parse_config("scenario = cylinder_disk\nnodes = 21\n"), 2), ConfigError);
  }
  std::ostringstream os;
  convergence_study(parse_config("scenario = plane\nnodes = 11\nt_end = 0.01\n"), 2).write_csv(os);
  CHECK(os.str().rfind("nodes,h,max_space_time_error,order", 0) == 0);
}

TEST_CASE("batch runs every config") {
  const auto dir = scratch("batch");
  std::ofstream(dir / "a_plane.cfg") << with_output("scenario = plane\nnodes = 11\nt_end = 0.01\n", dir / "out_a");
  std::ofstream(dir / "b_bad.cfg") << "scenario = plane\nnodes = 3\n";
  std::ofstream(dir / "c_guard.cfg")
      << with_output("scenario = grim_reaper\nnodes = 21\ncfl = 0.5\nt0 = -0.3\nt_end = 1\n", dir / "out_c");
  std::ofstream(dir / "notes.txt") << "ignored\n";
  auto items = run_batch(dir.string(), 2);
  REQUIRE(items.size() == 3);
  CHECK(items[0].exit_code == kExitOk);
  CHECK(items[1].exit_code == kExitConfig);
  CHECK(items[2].exit_code == kExitGuard);
  CHECK(fs::exists(dir / "out_a" / "timeseries.csv"));
}
