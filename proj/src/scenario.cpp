#include "lorentzflow/scenario.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include "lorentzflow/call_syntax.hpp"

namespace lorentzflow {

namespace fs = std::filesystem;

namespace {

const std::vector<std::string> kScenarios = {"grim_reaper", "cylinder_disk", "sine_tube",
                                             "plane",       "hyperbolic_plane",
                                             "pseudosphere_profile"};

// Serialization order; also the set of accepted keys.
const std::vector<std::string> kKeys = {
    "scenario", "nodes", "profile", "grid", "chart", "initial", "height",
    "t0", "t_end", "cfl", "eps_guard", "max_steps", "h_stop", "stepper",
    "stride", "series_stride", "output_dir",
    "monitor_volume", "monitor_estimates", "monitor_residuals", "monitor_boundary",
    "monitor_certificate", "residual_levels", "probe_warm", "probe_cfl", "probe_steps",
    "estimate_p", "require_conditions", "condition_lo", "condition_hi", "condition_samples",
    "max_pairing", "max_leaf_volume"};

struct Defaults {
  std::string profile;
  GridKind grid;
  std::string initial;
  double height;
  double t0;
  double t_end;
};

Defaults scenario_defaults(const std::string& name) {
  if (name == "grim_reaper") return {"trumpet", GridKind::Curve1D, "exact", 0.0, -1.0, -0.3};
  if (name == "cylinder_disk") return {"cylinder(1)", GridKind::Disk2D, "bump(0, 0.1)", 0.0, 0.0, 1.0};
  if (name == "sine_tube")
    return {"sine_tube(2, 0.5, 1)", GridKind::Radial2D, "bump(1.5707963267948966, 0.05)",
            1.5707963267948966, 0.0, 1.0};
  if (name == "plane") return {"cylinder(1)", GridKind::Radial2D, "exact", 0.0, 0.0, 1.0};
  if (name == "hyperbolic_plane")
    return {"pseudosphere(1, 0)", GridKind::Radial2D, "exact", 1.0, 0.0, 1.0};
  return {"pseudosphere(1, 0)", GridKind::Radial2D, "exact", 0.0, 0.0, 1.0};
}

[[noreturn]] void fail(const std::string& msg) { throw ConfigError(msg); }

double to_double(const std::string& key, const std::string& v) {
  char* end = nullptr;
  const double x = std::strtod(v.c_str(), &end);
  if (v.empty() || end != v.c_str() + v.size() || std::isnan(x))
    fail(key + ": '" + v + "' is not a number");
  return x;
}

long to_long(const std::string& key, const std::string& v) {
  char* end = nullptr;
  const long x = std::strtol(v.c_str(), &end, 10);
  if (v.empty() || end != v.c_str() + v.size()) fail(key + ": '" + v + "' is not an integer");
  return x;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  fail(key + ": '" + v + "' is not a boolean");
}

void require(bool ok, const std::string& msg) {
  if (!ok) fail(msg);
}

bool is_cylinder(const std::string& profile) { return parse_call(profile).name == "cylinder"; }

void validate(const ScenarioConfig& c) {
  require(c.nodes >= 5, "nodes must be >= 5");
  require(c.cfl > 0.0 && c.cfl <= 0.5, "cfl must lie in (0, 0.5]");
  require(c.eps_guard > 0.0 && c.eps_guard < 1.0, "eps_guard must lie in (0, 1)");
  require(c.max_steps >= 1, "max_steps must be >= 1");
  require(c.stride >= 1 && c.series_stride >= 1, "stride and series_stride must be >= 1");
  require(c.t_end > c.t0, "t_end must exceed t0");
  require(c.residual_levels >= 1 && c.residual_levels <= 6, "residual_levels must lie in [1, 6]");
  require(c.probe_warm >= 0.0, "probe_warm must be >= 0");
  require(c.probe_cfl > 0.0 && c.probe_cfl <= 0.5, "probe_cfl must lie in (0, 0.5]");
  require(c.probe_steps >= 3, "probe_steps must be >= 3");
  require(c.estimate_p > 0.0 && c.estimate_p < 1.0, "estimate_p must lie in (0, 1)");
  require(c.condition_samples >= 2, "condition_samples must be >= 2");
  require(c.condition_lo < c.condition_hi, "condition_lo must be below condition_hi");
  require(c.chart == "flat" || c.chart == "hyperbolic", "chart must be flat or hyperbolic");
  require(!c.output_dir.empty(), "output_dir must not be empty");

  Boundary b;
  try {
    b = parse_boundary(c.profile);
  } catch (const std::exception& e) {
    fail(std::string("profile: ") + e.what());
  }
  const bool planar = std::holds_alternative<PlanarBoundary>(b);
  if (planar)
    require(c.grid == GridKind::Curve1D, "planar profiles need grid = curve1d");
  else
    require(c.grid != GridKind::Curve1D, "rotational profiles need grid = radial2d or disk2d");
  if (c.grid == GridKind::Disk2D)
    require(is_cylinder(c.profile), "grid = disk2d needs a cylinder profile");
  if (c.chart == "hyperbolic") require(!planar, "chart = hyperbolic needs a rotational profile");
  if (c.scenario == "grim_reaper")
    require(boundary_name(b) == "trumpet", "grim_reaper needs profile = trumpet");

  CallSyntax init;
  try {
    init = parse_call(c.initial);
    if (init.name == "constant") {
      require(init.args.size() == 1, "initial: constant takes one argument");
      init.number(0);
    } else if (init.name == "bump") {
      require(init.args.size() == 2, "initial: bump takes two arguments");
      init.number(0);
      init.number(1);
    } else if (init.name == "nodes") {
      require(init.args.size() >= 2, "initial: nodes needs at least two values");
      for (std::size_t i = 0; i < init.args.size(); ++i) init.number(i);
    } else if (init.name != "exact") {
      fail("initial: unknown selector '" + init.name + "'");
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    fail(std::string("initial: ") + e.what());
  }
  if (init.name == "exact" && !analytic_solution(c))
    fail("initial = exact: scenario " + c.scenario + " has no closed-form solution here");
}

std::string fmt(double x) { return format_number(x); }

std::string node_label(int n) { return "n" + std::to_string(n); }

}  // namespace

Boundary ScenarioConfig::boundary() const { return parse_boundary(profile); }

StepControl ScenarioConfig::step_control() const {
  StepControl c;
  c.cfl = cfl;
  c.eps_guard = eps_guard;
  c.max_steps = max_steps;
  c.h_stop = h_stop;
  c.t_end = t_end;
  c.stepper = stepper;
  c.stride = stride;
  c.series_stride = series_stride;
  return c;
}

bool operator==(const ScenarioConfig& a, const ScenarioConfig& b) { return serialize(a) == serialize(b); }

ScenarioConfig parse_config(const std::string& text, const std::string& name) {
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail("line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (std::find(kKeys.begin(), kKeys.end(), key) == kKeys.end())
      fail("line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    if (!kv.emplace(key, value).second) fail("duplicate key '" + key + "'");
  }
  for (const char* k : {"scenario", "nodes"})
    if (!kv.count(k)) fail(std::string("missing required key '") + k + "'");

  ScenarioConfig c;
  c.scenario = kv["scenario"];
  if (std::find(kScenarios.begin(), kScenarios.end(), c.scenario) == kScenarios.end())
    fail("unknown scenario '" + c.scenario + "'");
  const Defaults d = scenario_defaults(c.scenario);
  auto get = [&](const char* k) -> const std::string* {
    auto it = kv.find(k);
    return it == kv.end() ? nullptr : &it->second;
  };
  auto num = [&](const char* k, double& field) {
    if (auto v = get(k)) field = to_double(k, *v);
  };
  auto integer = [&](const char* k, auto& field) {
    if (auto v = get(k)) field = static_cast<std::remove_reference_t<decltype(field)>>(to_long(k, *v));
  };
  auto flag = [&](const char* k, bool& field) {
    if (auto v = get(k)) field = to_bool(k, *v);
  };

  integer("nodes", c.nodes);
  c.profile = get("profile") ? *get("profile") : d.profile;
  c.grid = d.grid;
  if (auto v = get("grid")) {
    try {
      c.grid = parse_grid_kind(*v);
    } catch (const std::exception& e) {
      fail(std::string("grid: ") + e.what());
    }
  }
  if (auto v = get("chart")) c.chart = *v;
  c.initial = get("initial") ? *get("initial") : d.initial;
  c.height = d.height;
  if (!get("height") && c.scenario == "pseudosphere_profile") {
    const CallSyntax p = parse_call(c.profile);
    if (p.name == "pseudosphere") c.height = -p.number_or(1, 0.0);
  }
  num("height", c.height);
  c.t0 = d.t0;
  c.t_end = d.t_end;
  num("t0", c.t0);
  num("t_end", c.t_end);
  num("cfl", c.cfl);
  num("eps_guard", c.eps_guard);
  integer("max_steps", c.max_steps);
  num("h_stop", c.h_stop);
  if (auto v = get("stepper")) {
    try {
      c.stepper = parse_stepper(*v);
    } catch (const std::exception& e) {
      fail(std::string("stepper: ") + e.what());
    }
  }
  integer("stride", c.stride);
  integer("series_stride", c.series_stride);
  c.output_dir = get("output_dir") ? *get("output_dir") : "runs/" + (name.empty() ? c.scenario : name);
  flag("monitor_volume", c.monitor_volume);
  flag("monitor_estimates", c.monitor_estimates);
  flag("monitor_residuals", c.monitor_residuals);
  flag("monitor_boundary", c.monitor_boundary);
  flag("monitor_certificate", c.monitor_certificate);
  integer("residual_levels", c.residual_levels);
  num("probe_warm", c.probe_warm);
  num("probe_cfl", c.probe_cfl);
  integer("probe_steps", c.probe_steps);
  num("estimate_p", c.estimate_p);
  flag("require_conditions", c.require_conditions);
  num("condition_lo", c.condition_lo);
  num("condition_hi", c.condition_hi);
  integer("condition_samples", c.condition_samples);
  num("max_pairing", c.max_pairing);
  num("max_leaf_volume", c.max_leaf_volume);
  validate(c);
  return c;
}

ScenarioConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("cannot read config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), fs::path(path).stem().string());
}

std::string serialize(const ScenarioConfig& c) {
  auto b = [](bool x) { return std::string(x ? "true" : "false"); };
  const std::map<std::string, std::string> kv = {
      {"scenario", c.scenario},
      {"nodes", std::to_string(c.nodes)},
      {"profile", c.profile},
      {"grid", to_string(c.grid)},
      {"chart", c.chart},
      {"initial", c.initial},
      {"height", fmt(c.height)},
      {"t0", fmt(c.t0)},
      {"t_end", fmt(c.t_end)},
      {"cfl", fmt(c.cfl)},
      {"eps_guard", fmt(c.eps_guard)},
      {"max_steps", std::to_string(c.max_steps)},
      {"h_stop", fmt(c.h_stop)},
      {"stepper", to_string(c.stepper)},
      {"stride", std::to_string(c.stride)},
      {"series_stride", std::to_string(c.series_stride)},
      {"output_dir", c.output_dir},
      {"monitor_volume", b(c.monitor_volume)},
      {"monitor_estimates", b(c.monitor_estimates)},
      {"monitor_residuals", b(c.monitor_residuals)},
      {"monitor_boundary", b(c.monitor_boundary)},
      {"monitor_certificate", b(c.monitor_certificate)},
      {"residual_levels", std::to_string(c.residual_levels)},
      {"probe_warm", fmt(c.probe_warm)},
      {"probe_cfl", fmt(c.probe_cfl)},
      {"probe_steps", std::to_string(c.probe_steps)},
      {"estimate_p", fmt(c.estimate_p)},
      {"require_conditions", b(c.require_conditions)},
      {"condition_lo", fmt(c.condition_lo)},
      {"condition_hi", fmt(c.condition_hi)},
      {"condition_samples", std::to_string(c.condition_samples)},
      {"max_pairing", fmt(c.max_pairing)},
      {"max_leaf_volume", fmt(c.max_leaf_volume)}};
  std::string out;
  for (const auto& k : kKeys) out += k + " = " + kv.at(k) + "\n";
  return out;
}

std::optional<AnalyticSolution> analytic_solution(const ScenarioConfig& cfg) {
  Boundary b;
  try {
    b = cfg.boundary();
  } catch (const std::exception&) {
    return std::nullopt;
  }
  const CallSyntax init = parse_call(cfg.initial);
  const bool exact = init.name == "exact";
  AnalyticSolution s;

  if (cfg.scenario == "grim_reaper") {
    if (!exact) return std::nullopt;
    s.name = "grim_reaper";
    s.u = [](double x, double t) { return std::log(std::cosh(x)) + t; };
    s.u_r = [](double x, double) { return std::tanh(x); };
    s.u_t = [](double, double) { return 1.0; };
    s.boundary_pos = [](double t) { return std::atanh(std::exp(t)); };
    return s;
  }
  const auto* p = std::get_if<RotationalProfile>(&b);
  if (!p) return std::nullopt;

  auto constant = [&](const std::string& name, double c) -> std::optional<AnalyticSolution> {
    if (!p->contains(c) || std::abs(p->df(c)) > 1e-12) return std::nullopt;
    const double rb = p->f(c);
    s.name = name;
    s.u = [c](double, double) { return c; };
    s.u_r = [](double, double) { return 0.0; };
    s.u_t = [](double, double) { return 0.0; };
    s.boundary_pos = [rb](double) { return rb; };
    s.stationary = true;
    return s;
  };

  if (cfg.scenario == "hyperbolic_plane") {
    if (!exact || !p->contains(cfg.height)) return std::nullopt;
    const CmcLeaf leaf = cmc_leaf_through(*p, cfg.height);
    if (leaf.kind != CmcLeaf::Kind::HyperbolicPlane) return std::nullopt;
    const double rb = p->f(cfg.height);
    s.name = "hyperbolic_plane";
    s.u = [leaf](double r, double) { return leaf.height(r); };
    s.u_r = [leaf](double r, double) { return leaf.sheet * r / std::sqrt(leaf.R * leaf.R + r * r); };
    s.u_t = [](double, double) { return 0.0; };
    s.boundary_pos = [rb](double) { return rb; };
    s.time_dependent = false;
    s.R = leaf.R;
    return s;
  }
  if (exact && (cfg.scenario == "plane" || cfg.scenario == "pseudosphere_profile"))
    return constant(cfg.scenario, cfg.height);
  if (init.name == "constant") {
    const double c = init.number(0);
    return constant(cfg.scenario == "cylinder_disk" ? "cylinder_disk_constant" : "plane", c);
  }
  return std::nullopt;
}

namespace {

// Initial height as a function of the reference coordinate (s in [-1, 1] for
// Curve1D, r in [0, 1] otherwise) and the height that fixes the boundary.
struct InitialData {
  std::function<double(double)> u;
  double boundary_height = 0.0;
};

InitialData initial_data(const ScenarioConfig& cfg) {
  const CallSyntax c = parse_call(cfg.initial);
  if (c.name == "constant") {
    const double v = c.number(0);
    return {[v](double) { return v; }, v};
  }
  if (c.name == "bump") {
    const double base = c.number(0), amp = c.number(1);
    return {[base, amp](double r) { return base + amp * std::pow(1.0 - r * r, 2); }, base};
  }
  std::vector<double> v(c.args.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = c.number(i);
  const bool curve = cfg.grid == GridKind::Curve1D;
  auto f = [v, curve](double r) {
    const double q = curve ? 0.5 * (r + 1.0) : std::abs(r);
    const double pos = std::clamp(q, 0.0, 1.0) * (v.size() - 1);
    const std::size_t i = std::min<std::size_t>(static_cast<std::size_t>(pos), v.size() - 2);
    const double w = pos - i;
    return (1.0 - w) * v[i] + w * v[i + 1];
  };
  return {f, v.back()};
}

double reference_coord(GridKind kind, int i, int n) {
  return kind == GridKind::Curve1D ? -1.0 + 2.0 * i / (n - 1) : static_cast<double>(i) / (n - 1);
}

}  // namespace

FlowState initial_state(const ScenarioConfig& cfg) { return initial_state(cfg, cfg.grid, cfg.nodes); }

FlowState initial_state(const ScenarioConfig& cfg, GridKind grid, int nodes) {
  const Boundary b = cfg.boundary();
  FlowState s;
  s.t = cfg.t0;
  s.grid = {grid, nodes};
  s.grid.validate();
  s.chart_id = cfg.chart;

  std::function<double(double)> u_ref;  // of the reference coordinate
  if (parse_call(cfg.initial).name == "exact") {
    const auto sol = analytic_solution(cfg);
    if (!sol) fail("initial = exact: no closed-form solution for " + cfg.scenario);
    s.boundary_pos = sol->boundary_pos(cfg.t0);
    const double xb = s.boundary_pos, t = cfg.t0;
    u_ref = [sol, xb, t](double r) { return sol->u(r * xb, t); };
  } else {
    InitialData d = initial_data(cfg);
    u_ref = d.u;
    if (const auto* p = std::get_if<RotationalProfile>(&b)) {
      p->require_admissible(d.boundary_height);
      s.boundary_pos = p->f(d.boundary_height);
    } else {
      s.boundary_pos = std::get<PlanarBoundary>(b).solve_height(d.boundary_height, 1.0);
    }
  }

  s.u.assign(storage_size(s.grid), 0.0);
  if (grid == GridKind::Disk2D) {
    const auto& lat = disk_lattice(nodes, s.boundary_pos);
    for (int k : lat.inside) {
      const double x = lat.coord(k % lat.m), y = lat.coord(k / lat.m);
      s.u[k] = u_ref(std::min(1.0, std::hypot(x, y) / s.boundary_pos));
    }
    fill_ghosts(lat, s.u);
  } else {
    for (int i = 0; i < nodes; ++i) s.u[i] = u_ref(reference_coord(grid, i, nodes));
  }
  return s;
}

double solution_error(const FlowState& s, const AnalyticSolution& sol) {
  double err = 0.0;
  const int n = s.grid.nodes;
  if (s.grid.kind == GridKind::Disk2D) {
    const auto& lat = disk_lattice(n, s.boundary_pos);
    for (int k : lat.inside) {
      const double r = std::hypot(lat.coord(k % lat.m), lat.coord(k / lat.m));
      err = std::max(err, std::abs(s.u[k] - sol.u(r, s.t)));
    }
    return err;
  }
  for (int i = 0; i < n; ++i) {
    const double x = reference_coord(s.grid.kind, i, n) * s.boundary_pos;
    err = std::max(err, std::abs(s.u[i] - sol.u(x, s.t)));
  }
  return err;
}

void BoundaryCheck::write(std::ostream& os) const {
  os << "condition_ok = " << (condition_ok ? "true" : "false") << '\n'
     << "condition_worst_value = " << fmt(worst_value) << '\n'
     << "condition_worst_height = " << fmt(worst_height) << '\n'
     << "condition_samples = " << samples << '\n'
     << "condition_signs_agree = " << (signs_agree ? "true" : "false") << '\n';
  if (compatibility_evaluated) {
    const auto& c = compatibility;
    os << "chart_orthogonality_max = " << fmt(c.orthogonality_max) << '\n'
       << "chart_lapse_min = " << fmt(c.lapse_min) << '\n'
       << "chart_boundary_alignment_max = " << fmt(c.boundary_alignment_max) << '\n'
       << "v_hat_pairing_min = " << fmt(c.v_hat_pairing_min) << '\n'
       << "v_hat_pairing_max = " << fmt(c.v_hat_pairing_max) << '\n'
       << "max_leaf_volume = " << fmt(c.max_leaf_volume) << '\n'
       << "pairing_ok = " << (pairing_ok ? "true" : "false") << '\n'
       << "volume_ok = " << (volume_ok ? "true" : "false") << '\n';
  }
  if (!note.empty()) os << "note = " << note << '\n';
  os << "ok = " << (ok ? "true" : "false") << '\n';
}

BoundaryCheck check_boundary(const ScenarioConfig& cfg) {
  const Boundary b = cfg.boundary();
  BoundaryCheck r;
  r.samples = cfg.condition_samples;
  if (const auto* p = std::get_if<RotationalProfile>(&b)) {
    const double lo = std::max(cfg.condition_lo, p->z_lo), hi = std::min(cfg.condition_hi, p->z_hi);
    const ConditionReport c = check_condition_curvature(*p, lo, hi, cfg.condition_samples);
    r.condition_ok = c.ok;
    r.worst_value = c.worst_value;
    r.worst_height = c.worst_z;
    r.signs_agree = c.signs_agree;
  } else {
    // A planar boundary curve has no W directions: the condition is A(V, V) >= 0.
    const auto& pl = std::get<PlanarBoundary>(b);
    r.worst_value = -std::numeric_limits<double>::infinity();
    double guess = 1.0;
    for (int k = 0; k < cfg.condition_samples; ++k) {
      const double z =
          cfg.condition_lo + (cfg.condition_hi - cfg.condition_lo) * k / (cfg.condition_samples - 1);
      const double x = pl.solve_height(z, guess);
      guess = x;
      const double q = -planar_boundary_curvature(pl, x).A_VV;
      if (q > r.worst_value) {
        r.worst_value = q;
        r.worst_height = z;
      }
    }
    r.condition_ok = r.worst_value <= kConditionTolerance;
  }

  std::shared_ptr<FoliationChart> chart;
  if (cfg.chart == "hyperbolic") {
    chart = make_rotational_leaf_chart(std::get<RotationalProfile>(b));
  } else if (is_cylinder(cfg.profile)) {
    chart = make_flat_chart(2, std::get<RotationalProfile>(b).f(0.0));
  } else {
    r.note = "flat chart does not follow this boundary; chart compatibility not evaluated";
  }
  if (chart) {
    r.compatibility_evaluated = true;
    r.compatibility = check_compatibility(*chart, b, std::min(cfg.condition_samples, 64),
                                          {cfg.condition_lo, cfg.condition_hi, 12345});
    r.pairing_ok = r.compatibility.v_hat_pairing_max <= cfg.max_pairing;
    r.volume_ok = r.compatibility.max_leaf_volume <= cfg.max_leaf_volume;
  }
  r.ok = r.condition_ok && r.pairing_ok && r.volume_ok;
  return r;
}

std::string output_root() {
  const char* env = std::getenv("LORENTZFLOW_OUTPUT_ROOT");
  return env && *env ? env : ".";
}

std::string resolve_output_dir(const ScenarioConfig& cfg) {
  const fs::path p(cfg.output_dir);
  return p.is_absolute() ? p.string() : (fs::path(output_root()) / p).string();
}

namespace {

// Runs for `warm` time, then stores `steps` consecutive states.
Trajectory probe_window(const FlowState& s, const ScenarioConfig& cfg, const Boundary& b) {
  StepControl c = cfg.step_control();
  c.cfl = cfg.probe_cfl;
  c.h_stop = 0.0;
  c.max_steps = 10'000'000;
  c.stride = 1L << 40;
  c.t_end = s.t + cfg.probe_warm;
  const FlowState w = cfg.probe_warm > 0.0 ? run(s, c, b).final_state : s;
  c.t_end = 1e300;
  c.max_steps = cfg.probe_steps;
  c.stride = 1;
  return run(w, c, b);
}

void residual_study(const ScenarioConfig& cfg, const Boundary& b, MonitorReport& rep) {
  // Disk2D residuals are taken on the radial reduction of the same data.
  const GridKind grid = cfg.grid == GridKind::Disk2D ? GridKind::Radial2D : cfg.grid;
  std::vector<int> levels;
  for (int k = cfg.residual_levels - 1; k >= 0; --k) {
    const int n = (cfg.nodes - 1) / (1 << k) + 1;
    if (n >= 5) levels.push_back(n);
  }
  if (grid != cfg.grid) rep.notes["residual_grid"] = to_string(grid);
  struct Row {
    int n;
    double res_H, res_v, res_Hmu, res_vmu;
  };
  std::vector<Row> rows;
  for (int n : levels) {
    const Trajectory tr = probe_window(initial_state(cfg, grid, n), cfg, b);
    const EvolutionResiduals er = evolution_residuals(tr, b);
    const BoundaryIdentities bi = boundary_identities(tr, b);
    const Row row{n, er.res_H, er.res_v, bi.res_Hmu, bi.res_vmu};
    rows.push_back(row);
    const std::string l = node_label(n);
    rep.summary["residual.res_H." + l] = row.res_H;
    rep.summary["residual.res_v." + l] = row.res_v;
    rep.summary["residual.res_Hmu." + l] = row.res_Hmu;
    rep.summary["residual.res_vmu." + l] = row.res_vmu;
  }
  double max_abs = 0.0;
  const Row& fine = rows.back();
  for (double v : {fine.res_H, fine.res_v, fine.res_Hmu, fine.res_vmu}) max_abs = std::max(max_abs, v);
  rep.summary["residual.max_finest"] = max_abs;
  if (rows.size() < 2) return;
  auto order = [&](double Row::*f) {
    double o = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k + 1 < rows.size(); ++k) {
      const double ratio = static_cast<double>(rows[k + 1].n - 1) / (rows[k].n - 1);
      const double coarse = rows[k].*f, fine = rows[k + 1].*f;
      // round-off level residuals carry no order information
      if (coarse <= 1e-10 && fine <= 1e-10) continue;
      o = std::min(o, empirical_order(coarse, fine, ratio));
    }
    return o;
  };
  rep.summary["residual.order.res_H"] = order(&Row::res_H);
  rep.summary["residual.order.res_v"] = order(&Row::res_v);
  rep.summary["residual.order.res_Hmu"] = order(&Row::res_Hmu);
  rep.summary["residual.order.res_vmu"] = order(&Row::res_vmu);
}

double max_abs_u(const FlowState& s) {
  double m = 0.0;
  for (int k : surface_nodes(s)) m = std::max(m, std::abs(s.u[k]));
  return m;
}

void write_text(const fs::path& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << body;
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

void write_outputs(const std::string& dir, const ScenarioConfig& cfg, const RunReport& r,
                   const std::optional<GeometryFields>& final_geo) {
  fs::create_directories(dir);
  std::ostringstream ts, prof, sum;
  r.monitors.write_csv(ts);
  if (final_geo) write_profile_csv(prof, *final_geo);
  r.monitors.write_summary(sum);
  write_text(fs::path(dir) / "timeseries.csv", ts.str());
  write_text(fs::path(dir) / "final_profile.csv", prof.str());
  write_text(fs::path(dir) / "monitor_summary.txt", sum.str());
  write_text(fs::path(dir) / "config.cfg", serialize(cfg));
}

}  // namespace

RunReport run_scenario(const ScenarioConfig& cfg, bool write_files) {
  RunReport r;
  r.output_dir = resolve_output_dir(cfg);
  auto& rep = r.monitors;
  rep.notes["scenario"] = cfg.scenario;
  rep.notes["profile"] = cfg.profile;
  rep.notes["grid"] = to_string(cfg.grid);
  rep.summary["nodes"] = cfg.nodes;

  auto finish = [&](int code, const std::string& msg, const std::optional<GeometryFields>& geo) {
    r.exit_code = code;
    r.message = msg;
    rep.summary["exit_code"] = code;
    if (!msg.empty()) rep.notes["message"] = msg;
    if (write_files) write_outputs(r.output_dir, cfg, r, geo);
    return r;
  };

  Boundary b;
  FlowState s0;
  try {
    b = cfg.boundary();
    if (cfg.chart != "flat")
      return finish(kExitConfig, "chart '" + cfg.chart + "' is not supported by the flow engine",
                    std::nullopt);
    s0 = initial_state(cfg);
    validate_state(s0, b, cfg.eps_guard);
  } catch (const std::exception& e) {
    return finish(kExitConfig, e.what(), std::nullopt);
  }

  if (cfg.require_conditions) {
    const BoundaryCheck bc = check_boundary(cfg);
    rep.summary["condition.ok"] = bc.condition_ok;
    rep.summary["condition.worst_value"] = bc.worst_value;
    rep.summary["condition.worst_height"] = bc.worst_height;
    if (bc.compatibility_evaluated) {
      rep.summary["condition.v_hat_pairing_max"] = bc.compatibility.v_hat_pairing_max;
      rep.summary["condition.max_leaf_volume"] = bc.compatibility.max_leaf_volume;
    }
    if (!bc.ok)
      return finish(kExitCondition,
                    "boundary condition check failed (worst value " + fmt(bc.worst_value) +
                        " at height " + fmt(bc.worst_height) + ")",
                    std::nullopt);
  }

  try {
    r.trajectory = run(s0, cfg.step_control(), b);
  } catch (const std::exception& e) {
    return finish(kExitRuntime, e.what(), std::nullopt);
  }
  const Trajectory& tr = r.trajectory;
  r.event = tr.event;
  rep.records = tr.series;
  rep.notes["event"] = to_string(tr.event);
  rep.summary["steps"] = static_cast<double>(tr.steps);
  rep.summary["t_final"] = tr.final_state.t;
  if (tr.event == RunEvent::GuardTripped) rep.summary["guard_time"] = tr.guard_time;

  const GeometryFields geo = geometry(tr.final_state, b);
  const ScalarRecord last = scalar_record(geo, tr.final_state);
  rep.summary["final.sup_H"] = last.sup_H;
  rep.summary["final.sup_v_hat"] = last.sup_v_hat;
  rep.summary["final.max_abs_u"] = max_abs_u(tr.final_state);
  rep.summary["final.osc_u"] = last.osc_u;
  rep.summary["final.volume"] = last.volume;
  double rise = 0.0;
  for (std::size_t k = 1; k < tr.series.size(); ++k)
    rise = std::max(rise, tr.series[k].sup_H - tr.series[k - 1].sup_H);
  rep.summary["sup_H_max_increase"] = rise;

  try {
    if (cfg.monitor_volume) rep.summary["volume_identity"] = volume_identity(tr);
    if (const auto sol = analytic_solution(cfg); sol && sol->time_dependent) {
      double err = solution_error(tr.final_state, *sol);
      for (const auto& s : tr.states) err = std::max(err, solution_error(s, *sol));
      rep.summary["max_space_time_error"] = err;
    }
    if (cfg.monitor_boundary) {
      if (cfg.grid == GridKind::Disk2D) {
        rep.notes["boundary_identities"] = "not available on the disk2d lattice";
      } else {
        for (const auto& s : tr.states) {
          auto bs = boundary_samples(s, b);
          rep.boundary.insert(rep.boundary.end(), bs.begin(), bs.end());
        }
        const BoundaryIdentities bi = boundary_identities(tr, b);
        rep.summary["boundary.res_Hmu"] = bi.res_Hmu;
        rep.summary["boundary.res_vmu"] = bi.res_vmu;
        rep.summary["boundary.max_grad_mu_v"] = bi.max_grad_mu_v;
        rep.summary["boundary.max_grad_mu_H2_term"] = bi.max_grad_mu_H2_term;
      }
    }
    if (cfg.monitor_estimates && tr.states.size() >= 2) {
      const EstimateReport e = estimate_monitors(tr, b, cfg.estimate_p);
      rep.summary["estimate.h_sup_monotone"] = e.h_sup_monotone;
      rep.summary["estimate.monotone_regime"] = e.monotone_regime;
      rep.summary["estimate.grad_bound_C1"] = e.grad_bound_fit.C1;
      rep.summary["estimate.grad_bound_C2"] = e.grad_bound_fit.C2;
      rep.summary["estimate.h_vs_v_C1"] = e.h_vs_v_fit.C1;
      rep.summary["estimate.h_vs_v_C2"] = e.h_vs_v_fit.C2;
      rep.summary["estimate.h_vs_v_best_p"] = e.h_vs_v_best.p;
    }
    if (cfg.monitor_certificate) {
      try {
        const StabilityCertificate c = stability_certificate(tr.final_state, b);
        rep.summary["certificate.ok"] = c.ok;
        rep.summary["certificate.R"] = c.R;
        rep.summary["certificate.interior_margin"] = c.interior_margin;
        rep.summary["certificate.boundary_margin"] = c.boundary_margin;
        rep.summary["certificate.min_phi"] = c.min_phi;
      } catch (const HypothesisError& e) {
        rep.notes["certificate"] = std::string("hypothesis failure: ") + e.what();
      }
    }
    if (cfg.monitor_residuals) residual_study(cfg, b, rep);
  } catch (const std::exception& e) {
    return finish(kExitRuntime, std::string("monitor failed: ") + e.what(), geo);
  }

  const int code = tr.event == RunEvent::GuardTripped ? kExitGuard : kExitOk;
  return finish(code, tr.message, geo);
}

double ConvergenceTable::min_order() const {
  double o = std::numeric_limits<double>::quiet_NaN();
  for (const auto& l : levels)
    if (!l.saturated && std::isfinite(l.order)) o = std::isnan(o) ? l.order : std::min(o, l.order);
  return o;
}

void ConvergenceTable::write_csv(std::ostream& os) const {
  os << "nodes,h," << quantity << ",order,saturated,steps,seconds\n";
  for (const auto& l : levels)
    os << l.nodes << ',' << fmt(l.h) << ',' << fmt(l.error) << ','
       << (std::isnan(l.order) ? std::string() : fmt(l.order)) << ',' << (l.saturated ? 1 : 0) << ','
       << l.steps << ',' << fmt(l.seconds) << '\n';
}

ConvergenceTable convergence_study(const ScenarioConfig& cfg, int levels) {
  if (levels < 1) fail("convergence_study: levels must be >= 1");
  const auto sol = analytic_solution(cfg);
  if (!sol) fail("convergence_study: scenario " + cfg.scenario + " with initial = " + cfg.initial +
                 " has no analytic solution");
  if (cfg.chart != "flat") fail("convergence_study: chart '" + cfg.chart + "' is not supported");
  const Boundary b = cfg.boundary();
  constexpr double kSaturation = 1e-13;

  ConvergenceTable table;
  table.scenario = cfg.scenario;
  table.quantity = sol->time_dependent ? "max_space_time_error" : "max_abs_HR_minus_2";
  for (int k = 0; k < levels; ++k) {
    ConvergenceLevel lv;
    lv.nodes = (cfg.nodes - 1) * (1 << k) + 1;
    const auto start = std::chrono::steady_clock::now();
    const FlowState s0 = initial_state(cfg, cfg.grid, lv.nodes);
    lv.h = physical_spacing(s0);
    if (!sol->time_dependent) {
      // Static check of the discrete mean curvature against H = 2 / R.
      const GeometryFields g = geometry(s0, b);
      for (int i : g.nodes) lv.error = std::max(lv.error, std::abs(std::abs(g.H[i]) * sol->R - 2.0));
    } else {
      const Trajectory tr = run(s0, cfg.step_control(), b);
      lv.steps = tr.steps;
      lv.error = solution_error(tr.final_state, *sol);
      for (const auto& s : tr.states) lv.error = std::max(lv.error, solution_error(s, *sol));
    }
    lv.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    lv.saturated = lv.error <= kSaturation;
    if (k > 0) {
      const auto& prev = table.levels.back();
      lv.order = lv.saturated ? std::numeric_limits<double>::infinity()
                              : empirical_order(prev.error, lv.error, prev.h / lv.h);
    }
    table.levels.push_back(lv);
  }
  return table;
}

std::vector<BatchItem> run_batch(const std::string& dir, unsigned workers) {
  std::vector<std::string> paths;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".cfg") paths.push_back(e.path().string());
  std::sort(paths.begin(), paths.end());

  std::vector<BatchItem> items(paths.size());
  std::vector<std::optional<ScenarioConfig>> cfgs(paths.size());
  std::map<std::string, std::string> owner;  // output dir -> first config using it
  for (std::size_t i = 0; i < paths.size(); ++i) {
    items[i].config_path = paths[i];
    try {
      cfgs[i] = load_config(paths[i]);
      const std::string out = fs::weakly_canonical(resolve_output_dir(*cfgs[i])).string();
      if (auto [it, fresh] = owner.emplace(out, paths[i]); !fresh) {
        items[i].exit_code = kExitConfig;
        items[i].message = "output directory already used by " + it->second;
        cfgs[i].reset();
      }
    } catch (const std::exception& e) {
      items[i].exit_code = kExitConfig;
      items[i].message = e.what();
    }
  }

  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = std::min<unsigned>(workers, std::max<std::size_t>(1, paths.size()));
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i; (i = next++) < paths.size();) {
      if (!cfgs[i]) continue;
      try {
        const RunReport r = run_scenario(*cfgs[i]);
        items[i].exit_code = r.exit_code;
        items[i].message = r.message;
      } catch (const std::exception& e) {
        items[i].exit_code = kExitRuntime;
        items[i].message = e.what();
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
  for (auto& t : pool) t.join();
  return items;
}

}  // namespace lorentzflow
