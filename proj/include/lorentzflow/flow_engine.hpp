#pragma once

#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "lorentzflow/boundary_profile.hpp"
#include "lorentzflow/graph_discretization.hpp"

namespace lorentzflow {

enum class Stepper { Euler, RK2 };
const char* to_string(Stepper s);
Stepper parse_stepper(const std::string& s);

struct StepControl {
  double cfl = 0.2;          // dt = cfl h^2 / max stiffness
  double eps_guard = 1e-3;   // spacelike margin
  long max_steps = 10'000'000;
  double h_stop = 0.0;       // converged when sup|H| < h_stop; <= 0 disables
  double t_end = 1.0;        // absolute end time
  Stepper stepper = Stepper::Euler;
  long stride = 100;         // snapshot stride in steps
  long series_stride = 1;    // scalar record stride in steps

  void validate() const;
};

enum class RunEvent { Converged, GuardTripped, TimeExhausted, StepLimit };
const char* to_string(RunEvent e);

class GuardTripped : public std::runtime_error {
 public:
  GuardTripped(double t, double value, const std::string& what)
      : std::runtime_error(what), time(t), gradient_sq(value) {}
  double time;
  double gradient_sq;
};

class IncidenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class StepError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ScalarRecord {
  long step = 0;
  double t = 0.0;
  double dt = 0.0;
  double sup_v = 0.0;
  double sup_v_hat = 0.0;
  double sup_H = 0.0;
  double volume = 0.0;
  double int_H2 = 0.0;       // integral of H^2 dV
  double cum_int_H2 = 0.0;   // time integral of int_H2 from the start (trapezoid over every step)
  double osc_u = 0.0;
  double boundary_pos = 0.0;
  double max_gradient_sq = 0.0;
};

struct Trajectory {
  std::vector<FlowState> states;      // snapshots, strictly increasing times
  std::vector<ScalarRecord> series;
  RunEvent event = RunEvent::TimeExhausted;
  std::string message;
  long steps = 0;
  double guard_time = 0.0;            // time of the rejected state when the guard tripped
  FlowState final_state;
};

ScalarRecord scalar_record(const GeometryFields& geo, const FlowState& s);

/// Largest stable step for the explicit schemes: cfl h^2 / max_nodes trace(g^ij).
double stable_time_step(const GeometryFields& geo, const StepControl& ctrl);

/// Checks |Du|^2 <= 1 - eps_guard and the boundary incidence equation.
void validate_state(const FlowState& s, const Boundary& b, double eps_guard);

/// Advances by exactly dt with the chosen stepper, including boundary motion.
FlowState advance(const FlowState& s, double dt, Stepper stepper, const Boundary& b);

/// One step of size stable_time_step (clipped to t_end). Throws GuardTripped
/// when the input state violates the guard.
FlowState step(const FlowState& s, const StepControl& ctrl, const Boundary& b);

Trajectory run(const FlowState& s0, const StepControl& ctrl, const Boundary& b);

/// Replaces the MCF update of the upper state in a comparison run.
using MotionLaw = std::function<FlowState(const FlowState&, double dt)>;

struct ComparisonResult {
  Trajectory a, b;
  std::vector<double> times;
  std::vector<double> min_gap;
};

/// Minimum over the common physical domain of (uB - uA); linear interpolation
/// is used when the grids have moved apart.
double min_gap(const FlowState& a, const FlowState& b);

ComparisonResult comparison_pair_run(const FlowState& a0, const FlowState& b0,
                                     const StepControl& ctrl, const Boundary& boundary,
                                     const MotionLaw& law_b = {});

}  // namespace lorentzflow
