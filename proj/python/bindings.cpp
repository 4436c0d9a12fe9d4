#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "lorentzflow/scenario.hpp"

namespace py = pybind11;
using namespace lorentzflow;

namespace {

py::dict geometry_dict(const GeometryFields& g) {
  py::dict d;
  d["kind"] = to_string(g.kind);
  d["nodes"] = g.nodes;
  d["h"] = g.h;
  d["volume"] = g.volume;
  d["osc_u"] = g.osc_u;
  d["max_gradient_sq"] = g.max_gradient_sq;
  auto on_nodes = [&](const std::vector<double>& f) {
    std::vector<double> out;
    out.reserve(g.nodes.size());
    for (int i : g.nodes) out.push_back(f[i]);
    return out;
  };
  d["x"] = on_nodes(g.x);
  d["y"] = on_nodes(g.y);
  d["u"] = on_nodes(g.u);
  d["H"] = on_nodes(g.H);
  d["v"] = on_nodes(g.v);
  d["v_hat"] = on_nodes(g.v_hat);
  d["normA2"] = on_nodes(g.normA2);
  d["speed"] = on_nodes(g.speed);
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Mean curvature flow of spacelike graphs in Minkowski space with a free boundary";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<SpacelikeViolation>(m, "SpacelikeViolation", PyExc_ValueError);
  py::register_exception<ProfileError>(m, "ProfileError", PyExc_ValueError);
  py::register_exception<HypothesisError>(m, "HypothesisError", PyExc_ValueError);
  py::register_exception<StepError>(m, "StepError", PyExc_RuntimeError);

  py::class_<SpacetimeVector>(m, "SpacetimeVector")
      .def(py::init<double, double>(), py::arg("x"), py::arg("t"))
      .def(py::init<double, double, double>(), py::arg("x"), py::arg("y"), py::arg("t"))
      .def("__getitem__", [](const SpacetimeVector& v, std::size_t i) {
        if (i >= v.dim()) throw py::index_error();
        return v[i];
      })
      .def("__len__", &SpacetimeVector::dim)
      .def("__repr__", &SpacetimeVector::str);
  m.def("minkowski_inner", &minkowski_inner);
  m.def("causal_class", [](const SpacetimeVector& v) { return std::string(to_string(causal_class(v))); });

  py::class_<RotationalProfile>(m, "RotationalProfile")
      .def_readonly("name", &RotationalProfile::name)
      .def("f", [](const RotationalProfile& p, double z) { return p.f(z); })
      .def("df", [](const RotationalProfile& p, double z) { return p.df(z); })
      .def("d2f", [](const RotationalProfile& p, double z) { return p.d2f(z); })
      .def_static("cylinder", &RotationalProfile::cylinder, py::arg("radius") = 1.0)
      .def_static("pseudosphere", &RotationalProfile::pseudosphere, py::arg("A") = 1.0, py::arg("B") = 0.0)
      .def_static("sine_tube", &RotationalProfile::sine_tube, py::arg("a") = 2.0, py::arg("b") = 0.5,
                  py::arg("omega") = 1.0)
      .def_static("gaussian", &RotationalProfile::gaussian, py::arg("amp") = 1.0, py::arg("floor") = 0.2,
                  py::arg("width") = 1.0);
  py::class_<PlanarBoundary>(m, "PlanarBoundary")
      .def_readonly("name", &PlanarBoundary::name)
      .def("s", [](const PlanarBoundary& b, double x) { return b.s(x); })
      .def("solve_height", &PlanarBoundary::solve_height, py::arg("height"), py::arg("x_guess") = 1.0)
      .def_static("trumpet", &PlanarBoundary::trumpet)
      .def_static("linear", &PlanarBoundary::linear, py::arg("slope") = 2.0);
  m.def("parse_boundary", &parse_boundary);

  py::class_<BoundaryCurvature>(m, "BoundaryCurvature")
      .def_readonly("mu", &BoundaryCurvature::mu)
      .def_readonly("V", &BoundaryCurvature::V)
      .def_readonly("A_VV", &BoundaryCurvature::A_VV)
      .def_readonly("A_WW", &BoundaryCurvature::A_WW);
  m.def("profile_curvature", &profile_curvature, py::arg("profile"), py::arg("z"), py::arg("theta") = 0.0);
  m.def("rotational_condition_value", &rotational_condition_value);
  py::class_<ConditionReport>(m, "ConditionReport")
      .def_readonly("ok", &ConditionReport::ok)
      .def_readonly("worst_z", &ConditionReport::worst_z)
      .def_readonly("worst_value", &ConditionReport::worst_value)
      .def_readonly("signs_agree", &ConditionReport::signs_agree)
      .def_readonly("samples", &ConditionReport::samples);
  m.def("check_condition_curvature", &check_condition_curvature, py::arg("profile"), py::arg("z_lo"),
        py::arg("z_hi"), py::arg("samples"));

  py::class_<CmcLeaf>(m, "CmcLeaf")
      .def_property_readonly("kind", [](const CmcLeaf& l) {
        return l.kind == CmcLeaf::Kind::Plane ? "plane" : "hyperbolic_plane";
      })
      .def_readonly("R", &CmcLeaf::R)
      .def_readonly("J", &CmcLeaf::J)
      .def_readonly("z_anchor", &CmcLeaf::z_anchor)
      .def_readonly("sheet", &CmcLeaf::sheet)
      .def("height", &CmcLeaf::height);
  m.def("cmc_leaf_through", &cmc_leaf_through);
  m.def("foliation_monotonicity", &foliation_monotonicity);

  py::enum_<GridKind>(m, "GridKind")
      .value("Curve1D", GridKind::Curve1D)
      .value("Radial2D", GridKind::Radial2D)
      .value("Disk2D", GridKind::Disk2D);
  py::class_<FlowState>(m, "FlowState")
      .def_readonly("t", &FlowState::t)
      .def_readonly("u", &FlowState::u)
      .def_readonly("boundary_pos", &FlowState::boundary_pos)
      .def_property_readonly("grid", [](const FlowState& s) { return s.grid.kind; })
      .def_property_readonly("nodes", [](const FlowState& s) { return s.grid.nodes; });
  m.def("geometry", [](const FlowState& s, const Boundary& b) { return geometry_dict(geometry(s, b)); });

  py::enum_<RunEvent>(m, "RunEvent")
      .value("Converged", RunEvent::Converged)
      .value("GuardTripped", RunEvent::GuardTripped)
      .value("TimeExhausted", RunEvent::TimeExhausted)
      .value("StepLimit", RunEvent::StepLimit);
  py::class_<ScalarRecord>(m, "ScalarRecord")
      .def_readonly("step", &ScalarRecord::step)
      .def_readonly("t", &ScalarRecord::t)
      .def_readonly("dt", &ScalarRecord::dt)
      .def_readonly("sup_v", &ScalarRecord::sup_v)
      .def_readonly("sup_v_hat", &ScalarRecord::sup_v_hat)
      .def_readonly("sup_H", &ScalarRecord::sup_H)
      .def_readonly("volume", &ScalarRecord::volume)
      .def_readonly("osc_u", &ScalarRecord::osc_u)
      .def_readonly("boundary_pos", &ScalarRecord::boundary_pos);
  py::class_<Trajectory>(m, "Trajectory")
      .def_readonly("states", &Trajectory::states)
      .def_readonly("series", &Trajectory::series)
      .def_readonly("event", &Trajectory::event)
      .def_readonly("steps", &Trajectory::steps)
      .def_readonly("guard_time", &Trajectory::guard_time)
      .def_readonly("final_state", &Trajectory::final_state);
  m.def("volume_identity", &volume_identity);

  py::class_<ScenarioConfig>(m, "ScenarioConfig")
      .def_readwrite("scenario", &ScenarioConfig::scenario)
      .def_readwrite("nodes", &ScenarioConfig::nodes)
      .def_readwrite("profile", &ScenarioConfig::profile)
      .def_readwrite("initial", &ScenarioConfig::initial)
      .def_readwrite("t0", &ScenarioConfig::t0)
      .def_readwrite("t_end", &ScenarioConfig::t_end)
      .def_readwrite("cfl", &ScenarioConfig::cfl)
      .def_readwrite("h_stop", &ScenarioConfig::h_stop)
      .def_readwrite("max_steps", &ScenarioConfig::max_steps)
      .def_readwrite("stride", &ScenarioConfig::stride)
      .def_readwrite("output_dir", &ScenarioConfig::output_dir)
      .def("boundary", &ScenarioConfig::boundary)
      .def("__eq__", [](const ScenarioConfig& a, const ScenarioConfig& b) { return a == b; });
  m.def("parse_config", &parse_config, py::arg("text"), py::arg("name") = "");
  m.def("load_config", &load_config);
  m.def("serialize", &serialize);
  m.def("initial_state", py::overload_cast<const ScenarioConfig&>(&initial_state));

  py::class_<BoundaryCheck>(m, "BoundaryCheck")
      .def_readonly("ok", &BoundaryCheck::ok)
      .def_readonly("condition_ok", &BoundaryCheck::condition_ok)
      .def_readonly("worst_value", &BoundaryCheck::worst_value)
      .def_readonly("worst_height", &BoundaryCheck::worst_height)
      .def_readonly("note", &BoundaryCheck::note);
  m.def("check_boundary", &check_boundary);

  py::class_<RunReport>(m, "RunReport")
      .def_readonly("exit_code", &RunReport::exit_code)
      .def_readonly("event", &RunReport::event)
      .def_readonly("message", &RunReport::message)
      .def_readonly("output_dir", &RunReport::output_dir)
      .def_readonly("trajectory", &RunReport::trajectory)
      .def_property_readonly("summary", [](const RunReport& r) { return r.monitors.summary; })
      .def_property_readonly("notes", [](const RunReport& r) { return r.monitors.notes; });
  m.def("run_scenario", &run_scenario, py::arg("config"), py::arg("write_files") = true,
        py::call_guard<py::gil_scoped_release>());

  py::class_<ConvergenceLevel>(m, "ConvergenceLevel")
      .def_readonly("nodes", &ConvergenceLevel::nodes)
      .def_readonly("h", &ConvergenceLevel::h)
      .def_readonly("error", &ConvergenceLevel::error)
      .def_readonly("order", &ConvergenceLevel::order)
      .def_readonly("saturated", &ConvergenceLevel::saturated)
      .def_readonly("seconds", &ConvergenceLevel::seconds);
  py::class_<ConvergenceTable>(m, "ConvergenceTable")
      .def_readonly("scenario", &ConvergenceTable::scenario)
      .def_readonly("quantity", &ConvergenceTable::quantity)
      .def_readonly("levels", &ConvergenceTable::levels)
      .def("min_order", &ConvergenceTable::min_order);
  m.def("convergence_study", &convergence_study, py::arg("config"), py::arg("levels"),
        py::call_guard<py::gil_scoped_release>());

  m.attr("EXIT_OK") = kExitOk;
  m.attr("EXIT_GUARD") = kExitGuard;
  m.attr("EXIT_CONFIG") = kExitConfig;
  m.attr("EXIT_CONDITION") = kExitCondition;
}
