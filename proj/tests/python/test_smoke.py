import math
from pathlib import Path

import pytest

import lorentzflow as lf

SCENARIOS = Path(__file__).resolve().parents[2] / "scenarios"


def test_minkowski_inner_signature():
    assert lf.minkowski_inner(lf.SpacetimeVector(1.0, 2.0), lf.SpacetimeVector(3.0, 1.0)) == 1.0
    assert lf.causal_class(lf.SpacetimeVector(0.0, 1.0)) == "timelike"


def test_config_round_trip():
    cfg = lf.parse_config("scenario = cylinder_disk\nnodes = 21\n")
    assert cfg.nodes == 21
    assert lf.parse_config(lf.serialize(cfg)) == cfg


def test_config_errors_raise_value_error():
    with pytest.raises(ValueError):
        lf.parse_config("scenario = cylinder_disk\nbogus = 1\n")
    with pytest.raises(lf.ConfigError):
        lf.parse_config("scenario = cylinder_disk\nnodes = -3\n")


def test_cylinder_condition_and_leaf():
    cyl = lf.RotationalProfile.cylinder(2.0)
    assert lf.rotational_condition_value(cyl, 0.3) == pytest.approx(-0.5)
    rep = lf.check_condition_curvature(cyl, -1.0, 1.0, 11)
    assert rep.ok and rep.samples == 11
    leaf = lf.cmc_leaf_through(cyl, 0.7)
    assert leaf.kind == "plane"
    assert leaf.height(1.3) == pytest.approx(0.7)


def test_pseudosphere_leaf_is_hyperbolic():
    ps = lf.RotationalProfile.pseudosphere(1.0, 0.0)
    leaf = lf.cmc_leaf_through(ps, 1.0)
    assert leaf.kind == "hyperbolic_plane"
    # the leaf meets the tube at height z: rho = f(z)
    assert leaf.height(ps.f(1.0)) == pytest.approx(1.0, abs=1e-12)
    assert lf.foliation_monotonicity(ps, 1.0) > 0.0


def test_geometry_of_constant_state():
    cfg = lf.parse_config("scenario = plane\nnodes = 21\n")
    state = lf.initial_state(cfg)
    geo = lf.geometry(state, cfg.boundary())
    assert max(abs(h) for h in geo["H"]) < 1e-12
    assert min(geo["v_hat"]) == pytest.approx(1.0)


def test_translator_run_tracks_closed_form(tmp_path):
    cfg = lf.parse_config(
        "scenario = grim_reaper\nnodes = 51\nt_end = -0.9\noutput_dir = %s\n" % tmp_path
    )
    rep = lf.run_scenario(cfg)
    assert rep.exit_code == lf.EXIT_OK
    assert rep.summary["max_space_time_error"] < 1e-3
    assert (tmp_path / "timeseries.csv").exists()
    t = rep.trajectory.final_state.t
    assert t == pytest.approx(-0.9)
    assert rep.trajectory.final_state.boundary_pos == pytest.approx(math.atanh(math.exp(t)), rel=1e-3)


def test_condition_failure_exit_code(tmp_path):
    cfg = lf.load_config(str(SCENARIOS / "trumpet_conditions.cfg"))
    cfg.output_dir = str(tmp_path)
    assert not lf.check_boundary(cfg).ok
    assert lf.run_scenario(cfg, False).exit_code == lf.EXIT_CONDITION


def test_convergence_study_order():
    cfg = lf.parse_config("scenario = grim_reaper\nnodes = 26\nt_end = -0.9\n")
    table = lf.convergence_study(cfg, 2)
    assert len(table.levels) == 2
    assert table.levels[1].nodes == 51
    assert table.min_order() == pytest.approx(2.0, abs=0.3)
