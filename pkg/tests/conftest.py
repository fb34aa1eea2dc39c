"""Shared fixtures: the canonical desk-scale mechanism used across the suite."""
import math
import pathlib

import pytest

from fourbar_synth import DesignParams, MechanismConfig, MotionTask, OptimizerConfig

REPO_ROOT = pathlib.Path(__file__).resolve().parent.parent
CANON_CONFIG = REPO_ROOT / "configs" / "canon.json"


def make_canon_cfg() -> MechanismConfig:
    return MechanismConfig(
        pivot_c=(0.30, 0.0),
        baseline=DesignParams(0.10, 0.25, 0.15),
        branch="plus",
        link_density=(2.0, 2.0, 2.0),
        payload_mass=0.5,
        effector_tip_length=0.25,
    )


def make_canon_task(n_samples: int = 201) -> MotionTask:
    return MotionTask(
        delta_i=math.radians(150.0),
        delta_e=math.radians(90.0),
        t_move=0.5,
        n_samples=n_samples,
    )


@pytest.fixture(scope="session")
def canon_cfg() -> MechanismConfig:
    return make_canon_cfg()


@pytest.fixture(scope="session")
def canon_task() -> MotionTask:
    return make_canon_task()


@pytest.fixture(scope="session")
def canon_opt() -> OptimizerConfig:
    return OptimizerConfig(
        bounds=((0.03, 0.14), (0.15, 0.34), (0.08, 0.25)),
        n_init=12,
        n_max=60,
        n_acq_starts=32,
        n_acq_samples=4096,
        seed=0,
    )
