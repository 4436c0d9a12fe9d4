#pragma once

#include <functional>
#include <iosfwd>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "lorentzflow/boundary_profile.hpp"
#include "lorentzflow/flow_engine.hpp"
#include "lorentzflow/foliation_chart.hpp"
#include "lorentzflow/graph_discretization.hpp"
#include "lorentzflow/monitor_suite.hpp"

namespace lorentzflow {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitGuard = 2;
inline constexpr int kExitConfig = 3;
inline constexpr int kExitCondition = 4;

/// Bad key, missing key, out-of-range value or unsupported combination.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Flat key = value configuration. Every field carries its resolved default
/// after parsing, so serialize() writes a complete file.
struct ScenarioConfig {
  std::string scenario;            // grim_reaper, cylinder_disk, sine_tube, plane,
                                   // hyperbolic_plane, pseudosphere_profile
  int nodes = 0;
  std::string profile;             // boundary spec, see parse_boundary
  GridKind grid = GridKind::Radial2D;
  std::string chart = "flat";      // flat or hyperbolic
  std::string initial;             // exact, constant(c), bump(base, amp), nodes(u0, ...)
  double height = 0.0;             // plane height or leaf anchor
  double t0 = 0.0;
  double t_end = 1.0;
  double cfl = 0.2;
  double eps_guard = 1e-3;
  long max_steps = 10'000'000;
  double h_stop = 0.0;
  Stepper stepper = Stepper::Euler;
  long stride = 100;
  long series_stride = 1;
  std::string output_dir;

  bool monitor_volume = true;
  bool monitor_estimates = true;
  bool monitor_residuals = false;  // residual study on probe windows
  bool monitor_boundary = false;   // boundary samples at snapshots
  bool monitor_certificate = false;
  int residual_levels = 3;         // probe resolutions nodes, nodes/2, ...
  double probe_warm = 0.1;
  double probe_cfl = 0.2;          // probes damp the grid-scale mode that cfl near 0.5 keeps
  int probe_steps = 6;
  double estimate_p = 0.5;

  bool require_conditions = false;
  double condition_lo = -2.0;      // heights sampled by the condition check
  double condition_hi = 2.0;
  int condition_samples = 201;
  double max_pairing = std::numeric_limits<double>::infinity();
  double max_leaf_volume = std::numeric_limits<double>::infinity();

  Boundary boundary() const;
  StepControl step_control() const;
};

bool operator==(const ScenarioConfig& a, const ScenarioConfig& b);

/// Parses the key = value text. `name` seeds the default output directory
/// runs/<name>; it defaults to the scenario name.
ScenarioConfig parse_config(const std::string& text, const std::string& name = "");
ScenarioConfig load_config(const std::string& path);
std::string serialize(const ScenarioConfig& cfg);

/// Closed-form reference solution of a scenario, as a function of the
/// physical coordinate (x for Curve1D, rho for the radial kinds) and time.
struct AnalyticSolution {
  std::string name;  // grim_reaper, plane, cylinder_disk_constant,
                     // pseudosphere_profile, hyperbolic_plane
  std::function<double(double, double)> u;
  std::function<double(double, double)> u_r;
  std::function<double(double, double)> u_t;
  std::function<double(double)> boundary_pos;  // x_b(t) or rho_b(t)
  bool stationary = false;
  bool time_dependent = true;  // false: static geometry check only
  double R = 0.0;              // pseudo-radius of a hyperbolic plane
};

std::optional<AnalyticSolution> analytic_solution(const ScenarioConfig& cfg);

FlowState initial_state(const ScenarioConfig& cfg);
/// Same initial data on another grid.
FlowState initial_state(const ScenarioConfig& cfg, GridKind grid, int nodes);

/// max over surface nodes of |u - u_exact(., t)|.
double solution_error(const FlowState& s, const AnalyticSolution& sol);

struct BoundaryCheck {
  bool condition_ok = false;
  double worst_value = 0.0;   // rotational: f''/(1-f'^2) - 1/f; planar: -A(V, V)
  double worst_height = 0.0;
  bool signs_agree = true;
  int samples = 0;
  bool compatibility_evaluated = false;
  ChartCompatibilityReport compatibility;
  bool pairing_ok = true;
  bool volume_ok = true;
  bool ok = false;
  std::string note;

  void write(std::ostream& os) const;
};

BoundaryCheck check_boundary(const ScenarioConfig& cfg);

struct RunReport {
  int exit_code = kExitOk;
  std::optional<RunEvent> event;
  std::string message;
  std::string output_dir;
  MonitorReport monitors;
  Trajectory trajectory;
};

/// Directory for relative output paths: $LORENTZFLOW_OUTPUT_ROOT or ".".
std::string output_root();
std::string resolve_output_dir(const ScenarioConfig& cfg);

/// Runs the scenario with its monitors and writes timeseries.csv,
/// final_profile.csv and monitor_summary.txt. Errors in the configuration
/// (including curved charts) give kExitConfig.
RunReport run_scenario(const ScenarioConfig& cfg, bool write_files = true);

struct ConvergenceLevel {
  int nodes = 0;
  double h = 0.0;
  double error = 0.0;
  double order = std::numeric_limits<double>::quiet_NaN();  // vs the previous level
  bool saturated = false;
  double seconds = 0.0;
  long steps = 0;
};

struct ConvergenceTable {
  std::string scenario;
  std::string quantity;  // max_space_time_error or max_abs_HR_minus_2
  std::vector<ConvergenceLevel> levels;

  /// Smallest order over the unsaturated pairs; NaN when none.
  double min_order() const;
  void write_csv(std::ostream& os) const;
};

/// Errors at nodes N, 2N-1, 4N-3, ... so that h halves exactly.
/// Throws ConfigError for scenarios without an analytic solution.
ConvergenceTable convergence_study(const ScenarioConfig& cfg, int levels);

struct BatchItem {
  std::string config_path;
  int exit_code = kExitOk;
  std::string message;
};

/// Runs every *.cfg in `dir` (sorted by name) concurrently, one worker per run.
std::vector<BatchItem> run_batch(const std::string& dir, unsigned workers = 0);

}  // namespace lorentzflow
