import math

import numpy as np
import pytest

from fourbar_synth.constraints import static_gap
from fourbar_synth.kinematics import kinematic_transform, solve_ik
from fourbar_synth.model import DesignParams, MechanismConfig
from fourbar_synth.oracle import brute_ik, brute_static_gap, brute_theta_sweep, grid_sweep

from conftest import make_canon_task


def test_brute_ik_finds_the_closed_form_roots(canon_cfg):
    design = canon_cfg.baseline
    for deg in (92.0, 105.0, 128.0, 147.0):
        delta = math.radians(deg)
        roots = brute_ik(design, canon_cfg, delta)
        assert len(roots) == 2
        for elbow in ("plus", "minus"):
            direct = solve_ik(design, canon_cfg, delta, elbow)
            match = min(abs(r.theta - direct.theta) for r in roots)
            assert match < 1e-9
        tagged = {r.elbow for r in roots}
        assert tagged == {"plus", "minus"}


def test_brute_ik_empty_when_unreachable(canon_cfg):
    assert brute_ik(DesignParams(0.02, 0.25, 0.15), canon_cfg, math.pi / 2) == []


def test_brute_ik_tangency_collapses_to_one_root():
    cfg = MechanismConfig(pivot_c=(1.0, 0.0), baseline=DesignParams(2.0, 2.0, 3.0), branch="plus")
    roots = brute_ik(cfg.baseline, cfg, 0.0)
    assert len(roots) == 1
    assert roots[0].theta == pytest.approx(0.0, abs=1e-9)


def test_static_gap_matches_marching_oracle(canon_cfg, canon_task):
    rng = np.random.default_rng(42)
    worst = 0.0
    for _ in range(200):
        design = DesignParams(*rng.uniform(0.01, 0.45, size=3))
        for pose in ("i", "e"):
            fast = static_gap(design, canon_cfg, canon_task, pose).value
            slow = brute_static_gap(design, canon_cfg, canon_task, pose)
            worst = max(worst, abs(fast - slow))
    assert worst < 2e-6  # marching step is 1e-6


def test_theta_sweep_agrees_with_transform(canon_cfg, canon_task):
    samples = kinematic_transform(canon_cfg.baseline, canon_cfg, canon_task)
    swept = brute_theta_sweep(canon_cfg.baseline, canon_cfg, canon_task, n=canon_task.n_samples)
    assert len(swept) == len(samples)
    for s, (t, delta, theta) in zip(samples, swept):
        assert t == pytest.approx(s.t, abs=1e-15)
        assert delta == pytest.approx(s.delta, abs=1e-12)
        assert theta == pytest.approx(s.theta, abs=1e-9)


def test_grid_sweep_layout_and_gating(canon_cfg, canon_task):
    bounds = ((0.03, 0.14), (0.15, 0.34), (0.08, 0.25))
    records = grid_sweep(canon_cfg, canon_task, bounds, resolution=4)
    assert len(records) == 64
    axes = [np.linspace(lo, hi, 4) for lo, hi in bounds]
    k = 0
    for a in axes[0]:
        for b in axes[1]:
            for c in axes[2]:
                assert records[k].design == DesignParams(a, b, c)
                k += 1
    for rec in records:
        cons = rec.constraints
        if cons.feasible:
            assert cons.c_static_i <= 0.0 and cons.c_static_e <= 0.0
            assert cons.c_dyn == 0.0
            assert rec.objective is not None and rec.objective > 0.0
        else:
            assert rec.objective is None
    assert any(r.constraints.feasible for r in records)
    assert any(not r.constraints.feasible for r in records)


def test_grid_sweep_rejects_bad_arguments(canon_cfg, canon_task):
    bounds = ((0.03, 0.14), (0.15, 0.34), (0.08, 0.25))
    with pytest.raises(ValueError):
        grid_sweep(canon_cfg, canon_task, bounds, resolution=1)
    with pytest.raises(ValueError):
        grid_sweep(canon_cfg, canon_task, bounds, resolution=32)
    with pytest.raises(ValueError):
        grid_sweep(canon_cfg, canon_task, bounds[:2], resolution=4)


def test_theta_sweep_tracks_reversals(canon_cfg):
    # the sweep oracle follows the crank through a defective stroke too
    task = make_canon_task()
    design = DesignParams(0.244710222, 0.133037882, 0.166103598)
    swept = brute_theta_sweep(design, canon_cfg, task, n=201)
    thetas = [theta for _, _, theta in swept]
    diffs = [b - a for a, b in zip(thetas, thetas[1:])]
    assert any(d > 0 for d in diffs) and any(d < 0 for d in diffs)
