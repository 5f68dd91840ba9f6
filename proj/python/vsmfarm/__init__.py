"""Python interface to the vsmfarm core.

Configurations and controller sets are plain dicts with the same layout as
the JSON files read by the command-line tool.
"""

import json

from . import _vsmfarm
from ._vsmfarm import (
    LinearModel,
    OperatingPoint,
    ParseError,
    SimulationError,
    SynthesisError,
    TrimError,
    cp_coefficient,
    interaction,
    margins,
    pi_loopshape,
    stability_margins,
    step_envelope,
)

__all__ = [
    "LinearModel",
    "OperatingPoint",
    "ParseError",
    "SimulationError",
    "SynthesisError",
    "TrimError",
    "benchmark_config",
    "cp_coefficient",
    "decoupled_margins",
    "initial_controllers",
    "interaction",
    "linearize",
    "margins",
    "pi_loopshape",
    "redesign",
    "simulate",
    "stability_margins",
    "stage_a_controllers",
    "step_envelope",
    "trim",
]


def _text(obj):
    return "" if obj is None else json.dumps(obj)


def benchmark_config():
    return json.loads(_vsmfarm.benchmark_config_json())


def initial_controllers(config=None):
    return json.loads(_vsmfarm.initial_controllers_json(_text(config)))


def trim(config=None, controllers=None, initial=None):
    return _vsmfarm.trim(_text(config), _text(controllers), initial)


def stage_a_controllers(op, config=None):
    return json.loads(_vsmfarm.stage_a_controllers_json(_text(config), op))


def linearize(controllers, op, config=None):
    return _vsmfarm.linearize(_text(config), _text(controllers), op)


def decoupled_margins(controllers, op, machines, config=None):
    return _vsmfarm.decoupled_margins(_text(config), _text(controllers), op, list(machines))


def redesign(controllers, op, iterations=2, sequence=(), config=None):
    """Returns (controllers, operating point, per-pass margin tables)."""
    ctl, new_op, passes = _vsmfarm.redesign(_text(config), _text(controllers), op, iterations, list(sequence))
    return json.loads(ctl), new_op, passes


def simulate(controllers, op, scenario="pref_step", dt=0.0, duration=0.0, config=None):
    """Scenario is "pref_step", "voltage_dip" or a scenario dict. Returns (series, metrics)."""
    sc = scenario if isinstance(scenario, str) else json.dumps(scenario)
    return _vsmfarm.simulate(_text(config), _text(controllers), op, sc, dt, duration)
