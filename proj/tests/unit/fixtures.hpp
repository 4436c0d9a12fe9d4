#pragma once

#include <cmath>

#include "lorentzflow/flow_engine.hpp"

namespace fixtures {

using namespace lorentzflow;

/// Grim reaper translator u = log cosh x + t inside the trumpet.
inline FlowState translator(int n, double t) {
  FlowState s;
  s.grid = {GridKind::Curve1D, n};
  s.t = t;
  s.boundary_pos = std::atanh(std::exp(t));
  s.u.resize(n);
  for (int i = 0; i < n; ++i) {
    double x = (-1.0 + 2.0 * i / (n - 1)) * s.boundary_pos;
    s.u[i] = std::log(std::cosh(x)) + t;
  }
  return s;
}

inline double translator_error(const FlowState& s) {
  double err = 0.0;
  const int n = s.grid.nodes;
  for (int i = 0; i < n; ++i) {
    double x = (-1.0 + 2.0 * i / (n - 1)) * s.boundary_pos;
    err = std::max(err, std::abs(s.u[i] - std::log(std::cosh(x)) - s.t));
  }
  return err;
}

/// amp (1 - |x|^2)^2 on the unit disk lattice.
inline FlowState disk(int n, double amp) {
  FlowState s;
  s.grid = {GridKind::Disk2D, n};
  s.boundary_pos = 1.0;
  const auto& lat = disk_lattice(n, 1.0);
  s.u.assign(storage_size(s.grid), 0.0);
  for (int k : lat.inside) {
    double x = lat.coord(k % lat.m), y = lat.coord(k / lat.m);
    s.u[k] = amp * std::pow(1 - x * x - y * y, 2);
  }
  fill_ghosts(lat, s.u);
  return s;
}

/// base + amp (1 - r^2)^2 in the reference radius r = rho / rho_b.
inline FlowState radial_bump(int n, const RotationalProfile& p, double base, double amp) {
  FlowState s;
  s.grid = {GridKind::Radial2D, n};
  s.boundary_pos = p.f(base);
  s.u.resize(n);
  for (int i = 0; i < n; ++i) {
    double r = static_cast<double>(i) / (n - 1);
    s.u[i] = base + amp * std::pow(1 - r * r, 2);
  }
  return s;
}

/// Runs for `warm` time, then stores `steps` consecutive stride-1 states.
inline Trajectory probe_window(const FlowState& s, const Boundary& b, double warm, int steps = 6) {
  StepControl c;
  c.t_end = s.t + warm;
  c.stride = 1 << 30;
  FlowState w = warm > 0.0 ? run(s, c, b).final_state : s;
  StepControl p;
  p.t_end = 1e9;
  p.max_steps = steps;
  p.stride = 1;
  return run(w, p, b);
}

}  // namespace fixtures
