"""Fault-tolerant dynamic positioning of a four-thruster underwater vehicle.

Library layers, bottom up: :mod:`~ftdp.linalg`, :mod:`~ftdp.plant`,
:mod:`~ftdp.thrusters`, :mod:`~ftdp.controller`, :mod:`~ftdp.fdi`; the
closed loop lives in :mod:`~ftdp.sim` and runs on the step kernel chosen by
:mod:`~ftdp.kernel` (compiled when available).
"""

from .kernel import BACKEND
from .scenario import Scenario, ScenarioError, load_scenario
from .sim import RunLog, SimulationError, run

__version__ = "0.1.0"

__all__ = ["BACKEND", "RunLog", "Scenario", "ScenarioError", "SimulationError", "load_scenario", "run"]
