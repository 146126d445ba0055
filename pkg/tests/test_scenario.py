import math
from pathlib import Path

import numpy as np
import pytest

from ftdp.scenario import ScenarioError, load_scenario, scenario_from_dict

SCENARIOS = sorted((Path(__file__).parent.parent / "scenarios").glob("*.toml"))


@pytest.mark.parametrize("path", SCENARIOS, ids=lambda p: p.stem)
def test_bundled_scenarios_validate(path):
    sc = load_scenario(path)
    assert sc.n_steps > 0


def test_defaults():
    sc = scenario_from_dict({})
    assert sc.eta_d == pytest.approx([10.0, 2.0, math.radians(70)])
    assert sc.dt == 0.01 and sc.duration == 200.0
    assert sc.env.current_speed == 1.0
    assert sc.fdi.c2 == 0.005 and sc.fdi_enabled
    assert sc.faults == []


def test_full_example():
    sc = scenario_from_dict({
        "name": "x",
        "run": {"duration_s": 100, "step_s": 0.02},
        "reference": {"psi_deg": 90},
        "plant": {"mass": [20, 20, 0.6]},
        "environment": {"current_mode": "force", "seed": 3},
        "controller": {"gamma1": [1, 1, 1000], "d_hat_cap": "off"},
        "fdi": {"t1_s": 10, "t2_s": 12, "t3_s": 20, "enabled": False},
        "faults": [{"time_s": 50, "thruster": 2, "weight": 0.5}],
    })
    assert sc.n_steps == 5000
    assert np.allclose(sc.plant.mass, np.diag([20, 20, 0.6]))
    assert sc.env.current_mode == "force"
    assert sc.gains.gamma1[2] == 1000
    assert np.all(np.isinf(sc.control.d_hat_cap))
    assert not sc.fdi_enabled and sc.fdi.t3 == 20
    assert sc.faults[0].thruster == 2


def test_auto_cap():
    sc = scenario_from_dict({"controller": {"d_hat_cap": "auto"}})
    assert np.allclose(sc.control.d_hat_cap, [10.0, 10.0, 0.3])


BAD = [
    ({"run": {"duraton_s": 1}}, "run.duraton_s"),
    ({"run": {"step_s": -0.1}}, "run.step_s"),
    ({"run": {"duration_s": "long"}}, "run.duration_s"),
    ({"environment": {"current_mode": "drift"}}, "environment.current_mode"),
    ({"controller": {"alpha_dot": "magic"}}, "controller.alpha_dot"),
    ({"controller": {"d_hat_cap": [1, 2]}}, "controller.d_hat_cap"),
    ({"faults": [{"time_s": 1, "thruster": 5, "weight": 0.5}]}, "faults[0].thruster"),
    ({"faults": [{"time_s": 1, "thruster": 1}]}, "faults[0].weight"),
    ({"faults": [{"time_s": 10, "thruster": 1, "weight": 0.5},
                 {"time_s": 20, "thruster": 1, "weight": 0.9}]}, "faults[1].weight"),
    ({"faults": [{"time_s": 190, "thruster": 1, "weight": 0.5}]}, "run.duration_s"),
    ({"fdi": {"t1_s": 40}}, "fdi"),
]


@pytest.mark.parametrize("data,field", BAD)
def test_invalid_fields_are_named(data, field):
    with pytest.raises(ScenarioError) as exc:
        scenario_from_dict(data)
    assert exc.value.field == field


def test_error_reports_line(tmp_path):
    p = tmp_path / "bad.toml"
    p.write_text('name = "b"\n\n[run]\nduration_s = 10\nstep_z = 0.1\n')
    with pytest.raises(ScenarioError) as exc:
        load_scenario(p)
    assert exc.value.line == 5
    assert "bad.toml" in str(exc.value) and "run.step_z" in str(exc.value)


def test_syntax_error(tmp_path):
    p = tmp_path / "broken.toml"
    p.write_text("[run\n")
    with pytest.raises(ScenarioError):
        load_scenario(p)


def test_with_seed_copies():
    sc = scenario_from_dict({})
    other = sc.with_seed(9)
    assert other.env.seed == 9 and sc.env.seed == 0
