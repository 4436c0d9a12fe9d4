#include "lorentzflow/flow_engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace lorentzflow {

const char* to_string(Stepper s) { return s == Stepper::Euler ? "euler" : "rk2"; }

Stepper parse_stepper(const std::string& s) {
  if (s == "euler") return Stepper::Euler;
  if (s == "rk2") return Stepper::RK2;
  throw std::invalid_argument("unknown stepper '" + s + "' (expected euler or rk2)");
}

const char* to_string(RunEvent e) {
  switch (e) {
    case RunEvent::Converged: return "Converged";
    case RunEvent::GuardTripped: return "GuardTripped";
    case RunEvent::TimeExhausted: return "TimeExhausted";
    case RunEvent::StepLimit: return "StepLimit";
  }
  return "?";
}

void StepControl::validate() const {
  if (!(cfl > 0.0 && cfl <= 0.5)) throw std::invalid_argument("cfl must lie in (0, 0.5]");
  if (!(eps_guard > 0.0 && eps_guard < 1.0)) throw std::invalid_argument("eps_guard must lie in (0, 1)");
  if (max_steps < 0) throw std::invalid_argument("max_steps must be nonnegative");
  if (stride < 1 || series_stride < 1) throw std::invalid_argument("strides must be positive");
  if (!std::isfinite(t_end)) throw std::invalid_argument("t_end must be finite");
}

namespace {

struct Rates {
  std::vector<double> w;
  double boundary_velocity = 0.0;
};

void rates(const FlowState& s, const GeometryFields& geo, const Boundary& b, Rates& r) {
  r.w.assign(s.u.size(), 0.0);
  const int n = s.grid.nodes;
  switch (s.grid.kind) {
    case GridKind::Curve1D: {
      const auto& pb = std::get<PlanarBoundary>(b);
      double sp = pb.ds(s.boundary_pos);
      double ut = 0.5 * (geo.speed[0] + geo.speed[n - 1]);
      r.boundary_velocity = ut * sp / (sp * sp - 1.0);
      for (int i = 0; i < n; ++i) r.w[i] = geo.speed[i] + geo.s[i] * r.boundary_velocity * geo.du_x[i];
      break;
    }
    case GridKind::Radial2D: {
      double fp = geo.boundary_slope;
      r.boundary_velocity = fp * geo.speed[n - 1] / (1.0 - fp * fp);
      for (int i = 0; i < n; ++i) r.w[i] = geo.speed[i] + geo.s[i] * r.boundary_velocity * geo.du_x[i];
      break;
    }
    case GridKind::Disk2D:
      r.boundary_velocity = 0.0;
      for (int k : geo.nodes) r.w[k] = geo.speed[k];
      break;
  }
}

/// Scratch storage reused across steps.
struct Workspace {
  Rates k1, k2;
  FlowState stage;
  GeometryFields stage_geo;
};

void project(FlowState& s, const Boundary& b) {
  switch (s.grid.kind) {
    case GridKind::Curve1D: {
      const auto& pb = std::get<PlanarBoundary>(b);
      double height = 0.5 * (s.u.front() + s.u.back());
      try {
        s.boundary_pos = pb.solve_height(height, s.boundary_pos);
      } catch (const std::exception& e) {
        throw IncidenceError(std::string("boundary incidence failed: ") + e.what());
      }
      break;
    }
    case GridKind::Radial2D: {
      const auto& p = std::get<RotationalProfile>(b);
      double ub = s.u.back();
      if (!p.contains(ub)) throw IncidenceError("boundary height left the profile domain");
      double rb = p.f(ub);
      if (!(rb > 0.0) || !std::isfinite(rb)) throw IncidenceError("profile radius is not positive");
      s.boundary_pos = rb;
      break;
    }
    case GridKind::Disk2D:
      fill_ghosts(disk_lattice(s.grid.nodes, s.boundary_pos), s.u);
      break;
  }
}

void check_boundary_kind(const FlowState& s, const Boundary& b) {
  if (s.chart_id != "flat")
    throw StepError("chart '" + s.chart_id +
                    "': the lower-order term of curved charts is not implemented; use ambient "
                    "flat coordinates");
  bool planar = std::holds_alternative<PlanarBoundary>(b);
  if ((s.grid.kind == GridKind::Curve1D) != planar)
    throw StepError(std::string("grid ") + to_string(s.grid.kind) + " does not match boundary " +
                    boundary_name(b));
}

void euler_from(const FlowState& s, const Rates& r, double dt, const Boundary& b, FlowState& out) {
  out.grid = s.grid;
  out.chart_id = s.chart_id;
  out.u.resize(s.u.size());
  for (std::size_t k = 0; k < s.u.size(); ++k) out.u[k] = s.u[k] + dt * r.w[k];
  out.boundary_pos = s.boundary_pos + dt * r.boundary_velocity;
  out.t = s.t + dt;
  project(out, b);
}

void advance_with(const FlowState& s, const GeometryFields& geo, double dt, Stepper stepper,
                  const Boundary& b, Workspace& ws, FlowState& out) {
  rates(s, geo, b, ws.k1);
  if (stepper == Stepper::Euler) {
    euler_from(s, ws.k1, dt, b, out);
    return;
  }
  euler_from(s, ws.k1, dt, b, ws.stage);
  geometry_into(ws.stage, b, ws.stage_geo);
  rates(ws.stage, ws.stage_geo, b, ws.k2);
  for (std::size_t k = 0; k < ws.k1.w.size(); ++k) ws.k1.w[k] = 0.5 * (ws.k1.w[k] + ws.k2.w[k]);
  ws.k1.boundary_velocity = 0.5 * (ws.k1.boundary_velocity + ws.k2.boundary_velocity);
  euler_from(s, ws.k1, dt, b, out);
}

FlowState advance_with(const FlowState& s, const GeometryFields& geo, double dt, Stepper stepper,
                       const Boundary& b) {
  Workspace ws;
  FlowState out;
  advance_with(s, geo, dt, stepper, b, ws, out);
  return out;
}

void guard(const GeometryFields& geo, const FlowState& s, double eps) {
  if (geo.max_gradient_sq > 1.0 - eps)
    throw GuardTripped(s.t, geo.max_gradient_sq,
                       "spacelike guard tripped at t = " + std::to_string(s.t) + " (|Du|^2 = " +
                           std::to_string(geo.max_gradient_sq) + ")");
}

/// Shared bookkeeping of run and comparison_pair_run.
class Recorder {
 public:
  Recorder(Trajectory& tr, const StepControl& ctrl) : tr_(tr), ctrl_(ctrl) {}

  void start(const FlowState& s, const GeometryFields& geo) {
    last_ = scalar_record(geo, s);
    tr_.series.push_back(last_);
    tr_.states.push_back(s);
  }

  void add(const FlowState& s, const GeometryFields& geo, double dt, long k) {
    ScalarRecord rec = scalar_record(geo, s);
    rec.step = k;
    rec.dt = dt;
    rec.cum_int_H2 = last_.cum_int_H2 + 0.5 * dt * (last_.int_H2 + rec.int_H2);
    last_ = rec;
    if (k % ctrl_.series_stride == 0) tr_.series.push_back(rec);
    if (k % ctrl_.stride == 0) tr_.states.push_back(s);
  }

  void finish(const FlowState& s, long k) {
    if (tr_.series.back().t != last_.t) tr_.series.push_back(last_);
    if (tr_.states.back().t != s.t) tr_.states.push_back(s);
    tr_.final_state = s;
    tr_.steps = k;
  }

  const ScalarRecord& last() const { return last_; }

 private:
  Trajectory& tr_;
  const StepControl& ctrl_;
  ScalarRecord last_;
};

bool time_done(double t, double t_end) { return t >= t_end - 1e-13 * std::max(1.0, std::abs(t_end)); }

}  // namespace

ScalarRecord scalar_record(const GeometryFields& geo, const FlowState& s) {
  ScalarRecord r;
  r.t = s.t;
  for (int k : geo.nodes) {
    r.sup_v = std::max(r.sup_v, geo.v[k]);
    r.sup_v_hat = std::max(r.sup_v_hat, geo.v_hat[k]);
    r.sup_H = std::max(r.sup_H, std::abs(geo.H[k]));
    r.int_H2 += geo.weight[k] * geo.dV[k] * geo.H[k] * geo.H[k];
  }
  r.volume = geo.volume;
  r.osc_u = geo.osc_u;
  r.boundary_pos = s.boundary_pos;
  r.max_gradient_sq = geo.max_gradient_sq;
  return r;
}

double stable_time_step(const GeometryFields& geo, const StepControl& ctrl) {
  double stiff = 0.0;
  for (int k : geo.nodes) {
    double tr = geo.g_inv[k][0];
    if (geo.kind == GridKind::Radial2D) tr += 1.0;
    if (geo.kind == GridKind::Disk2D) tr += geo.g_inv[k][3];
    stiff = std::max(stiff, tr);
    // the one-sided end closure raises the spectral radius of the second difference
    // from 4/h^2 to 6.298/h^2
    if (geo.speed_diag[k] != 0.0) stiff = std::max(stiff, 1.6 * geo.g_inv[k][0]);
  }
  return ctrl.cfl * geo.h * geo.h / stiff;
}

void validate_state(const FlowState& s, const Boundary& b, double eps_guard) {
  check_boundary_kind(s, b);
  GeometryFields geo = geometry(s, b);
  guard(geo, s, eps_guard);
  double defect = 0.0;
  switch (s.grid.kind) {
    case GridKind::Curve1D: {
      const auto& pb = std::get<PlanarBoundary>(b);
      double sb = pb.s(s.boundary_pos);
      defect = std::max(std::abs(sb - s.u.front()), std::abs(sb - s.u.back()));
      break;
    }
    case GridKind::Radial2D:
      defect = std::abs(std::get<RotationalProfile>(b).f(s.u.back()) - s.boundary_pos);
      break;
    case GridKind::Disk2D:
      break;
  }
  if (!(defect <= 1e-10))
    throw IncidenceError("boundary node is off the boundary surface by " + std::to_string(defect));
}

FlowState advance(const FlowState& s, double dt, Stepper stepper, const Boundary& b) {
  check_boundary_kind(s, b);
  return advance_with(s, geometry(s, b), dt, stepper, b);
}

FlowState step(const FlowState& s, const StepControl& ctrl, const Boundary& b) {
  ctrl.validate();
  check_boundary_kind(s, b);
  GeometryFields geo = geometry(s, b);
  guard(geo, s, ctrl.eps_guard);
  double dt = stable_time_step(geo, ctrl);
  if (ctrl.t_end > s.t) dt = std::min(dt, ctrl.t_end - s.t);
  if (!(dt > 1e-15 * std::max(1.0, std::abs(s.t)))) throw StepError("time step underflow");
  return advance_with(s, geo, dt, ctrl.stepper, b);
}

Trajectory run(const FlowState& s0, const StepControl& ctrl, const Boundary& b) {
  ctrl.validate();
  validate_state(s0, b, ctrl.eps_guard);
  Trajectory tr;
  Recorder rec(tr, ctrl);
  FlowState state = s0, next;
  GeometryFields geo = geometry(state, b), ngeo;
  Workspace ws;
  rec.start(state, geo);
  long k = 0;
  while (true) {
    if (ctrl.h_stop > 0.0 && rec.last().sup_H < ctrl.h_stop) {
      tr.event = RunEvent::Converged;
      break;
    }
    if (time_done(state.t, ctrl.t_end)) {
      tr.event = RunEvent::TimeExhausted;
      break;
    }
    if (k >= ctrl.max_steps) {
      tr.event = RunEvent::StepLimit;
      break;
    }
    double dt = std::min(stable_time_step(geo, ctrl), ctrl.t_end - state.t);
    if (!(dt > 1e-15 * std::max(1.0, std::abs(state.t)))) throw StepError("time step underflow");
    try {
      advance_with(state, geo, dt, ctrl.stepper, b, ws, next);
      geometry_into(next, b, ngeo);
    } catch (const SpacelikeViolation& e) {
      tr.event = RunEvent::GuardTripped;
      tr.guard_time = state.t + dt;
      tr.message = e.what();
      break;
    }
    if (ngeo.max_gradient_sq > 1.0 - ctrl.eps_guard) {
      tr.event = RunEvent::GuardTripped;
      tr.guard_time = next.t;
      tr.message = "spacelike guard tripped (|Du|^2 = " + std::to_string(ngeo.max_gradient_sq) + ")";
      break;
    }
    ++k;
    std::swap(state, next);
    std::swap(geo, ngeo);
    rec.add(state, geo, dt, k);
  }
  rec.finish(state, k);
  return tr;
}

double min_gap(const FlowState& a, const FlowState& b) {
  if (!(a.grid == b.grid)) throw std::invalid_argument("comparison states live on different grids");
  double scale = std::max(1.0, std::abs(a.boundary_pos));
  double gap = std::numeric_limits<double>::infinity();
  if (a.grid.kind == GridKind::Disk2D || std::abs(a.boundary_pos - b.boundary_pos) <= 1e-15 * scale) {
    for (int k : surface_nodes(a)) gap = std::min(gap, b.u[k] - a.u[k]);
    return gap;
  }
  // Moving grids: compare over the common physical interval.
  const int n = a.grid.nodes;
  const bool curve = a.grid.kind == GridKind::Curve1D;
  auto coord = [&](const FlowState& s, int i) {
    double ref = curve ? -1.0 + 2.0 * i / (n - 1) : static_cast<double>(i) / (n - 1);
    return ref * s.boundary_pos;
  };
  auto interp = [&](const FlowState& s, double x) {
    double ref = x / s.boundary_pos;
    double fi = curve ? (ref + 1.0) * 0.5 * (n - 1) : ref * (n - 1);
    int i = std::clamp(static_cast<int>(std::floor(fi)), 0, n - 2);
    double w = std::clamp(fi - i, 0.0, 1.0);
    return (1.0 - w) * s.u[i] + w * s.u[i + 1];
  };
  double hi = std::min(a.boundary_pos, b.boundary_pos);
  for (const FlowState* s : {&a, &b})
    for (int i = 0; i < n; ++i) {
      double x = coord(*s, i);
      if (std::abs(x) > hi) continue;
      gap = std::min(gap, interp(b, x) - interp(a, x));
    }
  return gap;
}

ComparisonResult comparison_pair_run(const FlowState& a0, const FlowState& b0,
                                     const StepControl& ctrl, const Boundary& boundary,
                                     const MotionLaw& law_b) {
  ctrl.validate();
  if (!(a0.grid == b0.grid)) throw std::invalid_argument("comparison states live on different grids");
  validate_state(a0, boundary, ctrl.eps_guard);
  validate_state(b0, boundary, ctrl.eps_guard);
  ComparisonResult res;
  double g0 = min_gap(a0, b0);
  if (g0 < -1e-14) throw std::invalid_argument("comparison pair is not ordered (uA > uB somewhere)");
  Recorder ra(res.a, ctrl), rb(res.b, ctrl);
  FlowState sa = a0, sb = b0;
  GeometryFields ga = geometry(sa, boundary), gb = geometry(sb, boundary);
  ra.start(sa, ga);
  rb.start(sb, gb);
  res.times.push_back(sa.t);
  res.min_gap.push_back(g0);
  long k = 0;
  RunEvent ev;
  while (true) {
    if (ctrl.h_stop > 0.0 && ra.last().sup_H < ctrl.h_stop && rb.last().sup_H < ctrl.h_stop) {
      ev = RunEvent::Converged;
      break;
    }
    if (time_done(sa.t, ctrl.t_end)) {
      ev = RunEvent::TimeExhausted;
      break;
    }
    if (k >= ctrl.max_steps) {
      ev = RunEvent::StepLimit;
      break;
    }
    double dt = std::min({stable_time_step(ga, ctrl), stable_time_step(gb, ctrl), ctrl.t_end - sa.t});
    if (!(dt > 1e-15 * std::max(1.0, std::abs(sa.t)))) throw StepError("time step underflow");
    FlowState na, nb;
    GeometryFields nga, ngb;
    try {
      na = advance_with(sa, ga, dt, ctrl.stepper, boundary);
      nb = law_b ? law_b(sb, dt) : advance_with(sb, gb, dt, ctrl.stepper, boundary);
      nga = geometry(na, boundary);
      ngb = geometry(nb, boundary);
    } catch (const SpacelikeViolation& e) {
      ev = RunEvent::GuardTripped;
      res.a.message = res.b.message = e.what();
      res.a.guard_time = res.b.guard_time = sa.t + dt;
      break;
    }
    if (std::max(nga.max_gradient_sq, ngb.max_gradient_sq) > 1.0 - ctrl.eps_guard) {
      ev = RunEvent::GuardTripped;
      res.a.guard_time = res.b.guard_time = na.t;
      break;
    }
    ++k;
    sa = std::move(na);
    sb = std::move(nb);
    ga = std::move(nga);
    gb = std::move(ngb);
    ra.add(sa, ga, dt, k);
    rb.add(sb, gb, dt, k);
    res.times.push_back(sa.t);
    res.min_gap.push_back(min_gap(sa, sb));
  }
  res.a.event = res.b.event = ev;
  ra.finish(sa, k);
  rb.finish(sb, k);
  return res;
}

}  // namespace lorentzflow
