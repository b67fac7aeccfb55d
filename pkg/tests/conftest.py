import json
from pathlib import Path

import hypothesis
import pytest

from shockasym import model

hypothesis.settings.register_profile("ci", max_examples=60, deadline=None)
hypothesis.settings.load_profile("ci")

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"


def config_text(name: str) -> str:
    return (CONFIG_DIR / f"{name}.json").read_text()


def config_dict(name: str) -> dict:
    return json.loads(config_text(name))


def make_spec(**overrides) -> model.ProblemSpec:
    """Small self-consistent default problem, tweakable per test."""
    cfg = {
        "lambda": "u",
        "mu": "v",
        "f": "0",
        "g": "0",
        "Lambda": "u^2/2",
        "Phi": "v",
        "Psi": "v^2/2",
        "initial": {"u_left": "1", "u_right": "0",
                    "v_left": "3", "v_right": "2"},
        "epsilon": 0.05,
        "T": 0.5,
        "numerics": {
            "dt": 1e-3,
            "fan_count": 64,
            "newton_tol": 1e-12,
            "newton_max_iter": 60,
            "fv_cells": 1024,
            "fv_cfl": 0.4,
            "fv_domain": [-0.75, 2.25],
            "state_box": {"u": [-0.2, 1.2], "v": [1.5, 3.3]},
        },
    }
    numerics = overrides.pop("numerics", {})
    initial = overrides.pop("initial", {})
    cfg.update(overrides)
    cfg["numerics"].update(numerics)
    cfg["initial"].update(initial)
    return model.load_spec(cfg)


@pytest.fixture(scope="session")
def decoupled_spec():
    return model.load_spec(config_text("decoupled"))


@pytest.fixture(scope="session")
def coupled_spec():
    return model.load_spec(config_text("coupled"))


@pytest.fixture(scope="session")
def decoupled_solution(decoupled_spec):
    from shockasym import engine

    return engine.solve_asymptotics(
        decoupled_spec, record_times=[0.1, 0.2, 0.3, 0.4, 0.5])


@pytest.fixture(scope="session")
def coupled_solution(coupled_spec):
    from shockasym import engine

    return engine.solve_asymptotics(coupled_spec)
