import dataclasses
import math

import pytest
from scipy.integrate import simpson

from fourbar_synth.dynamics import (
    equivalent_inertia,
    gravity_torque,
    mass_model,
    mechanical_energy,
    torque_at_state,
    torque_profile,
)
from fourbar_synth.kinematics import kinematic_transform, solve_fk, solve_ik, validate_baseline
from fourbar_synth.model import (
    DesignParams,
    EmptyTrajectory,
    MechanismConfig,
    SingularState,
)

from conftest import make_canon_task


def trapz_sq(samples):
    acc = 0.0
    for (t0, y0), (t1, y1) in zip(samples, samples[1:]):
        acc += 0.5 * (y0 * y0 + y1 * y1) * (t1 - t0)
    return acc


def test_rod_links(canon_cfg):
    mm = mass_model(canon_cfg.baseline, canon_cfg)
    assert mm.crank.mass == pytest.approx(0.2, abs=1e-15)
    assert mm.crank.com == pytest.approx((0.05, 0.0), abs=1e-15)
    assert mm.crank.i_com == pytest.approx(0.2 * 0.10**2 / 12.0, abs=1e-18)
    assert mm.coupler.mass == pytest.approx(0.5, abs=1e-15)
    assert mm.coupler.com == pytest.approx((0.125, 0.0), abs=1e-15)
    assert mm.coupler.i_com == pytest.approx(0.5 * 0.25**2 / 12.0, abs=1e-18)


def test_rocker_composite(canon_cfg):
    # bar + effector beam + point payload, composed about the shared centroid
    parts = [
        (0.3, 0.075, 0.3 * 0.15**2 / 12.0),
        (0.5, 0.125, 0.5 * 0.25**2 / 12.0),
        (0.5, 0.25, 0.0),
    ]
    total = sum(m for m, _, _ in parts)
    gx = sum(m * x for m, x, _ in parts) / total
    i_g = sum(i + m * (x - gx) ** 2 for m, x, i in parts)
    mm = mass_model(canon_cfg.baseline, canon_cfg)
    assert mm.rocker.mass == pytest.approx(total, abs=1e-15)
    assert mm.rocker.com == pytest.approx((gx, 0.0), abs=1e-15)
    assert mm.rocker.i_com == pytest.approx(i_g, abs=1e-15)
    assert mm.rocker.mass == pytest.approx(1.3, abs=1e-12)
    assert mm.rocker.com[0] == pytest.approx(0.21 / 1.3, abs=1e-15)
    assert mm.rocker.i_com == pytest.approx(0.009993589743589743, abs=1e-15)


def test_rocker_composite_offset_beam(canon_cfg):
    # a perpendicular effector beam moves the centroid off the bar axis
    cfg = dataclasses.replace(canon_cfg, effector_offset=math.pi / 2)
    mm = mass_model(cfg.baseline, cfg)
    assert mm.rocker.mass == pytest.approx(1.3, abs=1e-15)
    assert mm.rocker.com[0] == pytest.approx(0.3 * 0.075 / 1.3, abs=1e-15)
    assert mm.rocker.com[1] == pytest.approx((0.5 * 0.125 + 0.5 * 0.25) / 1.3, abs=1e-15)


def test_massless_links_give_zero_torque(canon_cfg):
    cfg = dataclasses.replace(
        canon_cfg, link_density=(0.0, 0.0, 0.0), payload_mass=0.0
    )
    mm = mass_model(cfg.baseline, cfg)
    assert mm.crank.mass == 0.0 and mm.coupler.mass == 0.0 and mm.rocker.mass == 0.0
    p = solve_ik(cfg.baseline, cfg, math.radians(110.0), "plus")
    assert torque_at_state(cfg.baseline, cfg, p, 3.0, -7.0) == 0.0
    assert equivalent_inertia(cfg.baseline, cfg, p) == 0.0


def test_holding_torque_bare_crank(canon_cfg):
    # only the crank rod has mass; horizontal crank holds m g L/2
    cfg = dataclasses.replace(
        canon_cfg, link_density=(2.0, 0.0, 0.0), payload_mass=0.0
    )
    p = solve_fk(cfg.baseline, cfg, 0.0, "plus")
    tau = torque_at_state(cfg.baseline, cfg, p, 0.0, 0.0)
    assert tau == pytest.approx(0.2 * 9.81 * 0.05, abs=1e-12)
    assert gravity_torque(cfg.baseline, cfg, p) == pytest.approx(tau, abs=1e-15)


def test_reflected_inertia_bare_crank(canon_cfg):
    cfg = dataclasses.replace(
        canon_cfg,
        link_density=(2.0, 0.0, 0.0),
        payload_mass=0.0,
        gravity=(0.0, 0.0),
    )
    p = solve_fk(cfg.baseline, cfg, 0.0, "plus")
    tau = torque_at_state(cfg.baseline, cfg, p, 0.0, 1.0)
    assert tau == pytest.approx(0.2 * 0.10**2 / 3.0, abs=1e-12)


def test_torque_affine_in_acceleration(canon_cfg):
    design = canon_cfg.baseline
    p = solve_ik(design, canon_cfg, math.radians(110.0), "plus")
    t0 = torque_at_state(design, canon_cfg, p, 1.7, 0.0)
    t1 = torque_at_state(design, canon_cfg, p, 1.7, 1.0)
    t2 = torque_at_state(design, canon_cfg, p, 1.7, 2.0)
    assert t2 - t0 == pytest.approx(2.0 * (t1 - t0), abs=1e-10)
    assert t1 - t0 == pytest.approx(equivalent_inertia(design, canon_cfg, p), abs=1e-10)


def test_centrifugal_term_quadratic_in_rate(canon_cfg):
    cfg = dataclasses.replace(canon_cfg, gravity=(0.0, 0.0))
    design = cfg.baseline
    p = solve_ik(design, cfg, math.radians(110.0), "plus")
    t1 = torque_at_state(design, cfg, p, 1.3, 0.0)
    t2 = torque_at_state(design, cfg, p, 2.6, 0.0)
    assert t2 == pytest.approx(4.0 * t1, abs=1e-10)


def test_gravity_flip(canon_cfg):
    flipped = dataclasses.replace(canon_cfg, gravity=(0.0, 9.81))
    design = canon_cfg.baseline
    p = solve_ik(design, canon_cfg, math.radians(110.0), "plus")
    assert gravity_torque(design, flipped, p) == -gravity_torque(design, canon_cfg, p)
    assert equivalent_inertia(design, flipped, p) == equivalent_inertia(design, canon_cfg, p)


def test_reflected_inertia_positive_over_stroke(canon_cfg, canon_task):
    for p in validate_baseline(canon_cfg, canon_task):
        assert equivalent_inertia(canon_cfg.baseline, canon_cfg, p) > 0.0


def test_singular_fold_raises():
    cfg = MechanismConfig(pivot_c=(4.0, 0.0), baseline=DesignParams(1.0, 1.5, 1.5), branch="plus")
    p = solve_fk(cfg.baseline, cfg, 0.0, "plus")
    with pytest.raises(SingularState):
        equivalent_inertia(cfg.baseline, cfg, p)


def test_energy_splits_into_kinetic_and_potential(canon_cfg):
    design = canon_cfg.baseline
    p = solve_ik(design, canon_cfg, math.radians(125.0), "plus")
    e0 = mechanical_energy(design, canon_cfg, p, 0.0)
    e1 = mechanical_energy(design, canon_cfg, p, 2.0)
    i_eq = equivalent_inertia(design, canon_cfg, p)
    assert e1 - e0 == pytest.approx(0.5 * i_eq * 4.0, abs=1e-12)
    weightless = dataclasses.replace(canon_cfg, gravity=(0.0, 0.0))
    assert mechanical_energy(design, weightless, p, 0.0) == 0.0


def test_canon_rms_torque(canon_cfg, canon_task):
    design = canon_cfg.baseline
    trajectory = kinematic_transform(design, canon_cfg, canon_task)
    profile = torque_profile(design, canon_cfg, canon_task, trajectory)
    assert profile.t_cycle == pytest.approx(1.0, abs=1e-15)
    assert len(profile.samples) == 2 * canon_task.n_samples
    assert profile.t_rms == pytest.approx(1.742889513063657, rel=1e-12)
    # stored RMS agrees with a direct trapezoid pass over the samples
    assert profile.t_rms == pytest.approx(
        math.sqrt(trapz_sq(profile.samples) / profile.t_cycle), rel=1e-12
    )


def test_return_stroke_mirrors_forward(canon_cfg, canon_task):
    design = canon_cfg.baseline
    trajectory = kinematic_transform(design, canon_cfg, canon_task)
    profile = torque_profile(design, canon_cfg, canon_task, trajectory)
    n = canon_task.n_samples
    fwd = profile.samples[:n]
    ret = profile.samples[n:]
    for j in range(n):
        assert ret[j][1] == fwd[n - 1 - j][1]
        assert ret[j][0] == pytest.approx(canon_task.t_move + fwd[j][0], abs=1e-15)


def test_dwell_holds_static_torque(canon_cfg):
    task = make_canon_task()
    task = dataclasses.replace(task, t_dwell=0.1)
    design = canon_cfg.baseline
    trajectory = kinematic_transform(design, canon_cfg, task)
    profile = torque_profile(design, canon_cfg, task, trajectory)
    n = task.n_samples
    assert profile.t_cycle == pytest.approx(1.2, abs=1e-15)
    assert len(profile.samples) == 2 * n + 4
    t_in, tau_in = profile.samples[n]
    assert t_in == pytest.approx(task.t_move, abs=1e-15)
    assert profile.samples[n + 1] == pytest.approx((task.t_move + 0.1, tau_in))
    p_end = solve_ik(design, canon_cfg, task.delta_i, "plus")
    assert tau_in == pytest.approx(gravity_torque(design, canon_cfg, p_end), abs=1e-12)
    assert profile.t_rms == pytest.approx(
        math.sqrt(trapz_sq(profile.samples) / profile.t_cycle), rel=1e-12
    )


def test_gravity_free_rms_regression(canon_cfg, canon_task):
    cfg = dataclasses.replace(canon_cfg, gravity=(0.0, 0.0))
    trajectory = kinematic_transform(cfg.baseline, cfg, canon_task)
    profile = torque_profile(cfg.baseline, cfg, canon_task, trajectory)
    assert profile.t_rms == pytest.approx(0.6430026397699486, rel=1e-12)


def test_rms_agrees_with_simpson_quadrature(canon_cfg):
    # trapezoid vs Simpson on a dense grid: quadrature error, not model error
    cfg = dataclasses.replace(canon_cfg, gravity=(0.0, 0.0))
    task = make_canon_task(n_samples=4001)
    trajectory = kinematic_transform(cfg.baseline, cfg, task)
    profile = torque_profile(cfg.baseline, cfg, task, trajectory)
    ts = [t for t, _ in profile.samples[: task.n_samples]]
    taus = [tau for _, tau in profile.samples[: task.n_samples]]
    integral = simpson([tau * tau for tau in taus], x=ts)
    rms = math.sqrt(integral / task.t_move)  # mirrored return doubles both factors
    assert profile.t_rms == pytest.approx(rms, rel=1e-4)
    assert abs(profile.t_rms - rms) / rms < 1e-6


def test_power_balance_along_stroke(canon_cfg):
    # motor power equals the rate of change of mechanical energy
    task = make_canon_task(n_samples=4001)
    design = canon_cfg.baseline
    trajectory = kinematic_transform(design, canon_cfg, task)
    profile = torque_profile(design, canon_cfg, task, trajectory)
    energies = []
    for s in trajectory:
        p = solve_ik(design, canon_cfg, s.delta, "plus")
        energies.append(mechanical_energy(design, canon_cfg, p, s.theta_dot))
    worst = 0.0
    for k in range(1, task.n_samples - 1):
        h2 = trajectory[k + 1].t - trajectory[k - 1].t
        e_dot = (energies[k + 1] - energies[k - 1]) / h2
        power = profile.samples[k][1] * trajectory[k].theta_dot
        worst = max(worst, abs(power - e_dot))
    assert worst < 1e-5


def test_trajectory_task_mismatch(canon_cfg, canon_task):
    trajectory = kinematic_transform(canon_cfg.baseline, canon_cfg, canon_task)
    other = make_canon_task(n_samples=101)
    with pytest.raises(ValueError):
        torque_profile(canon_cfg.baseline, canon_cfg, other, trajectory)
    with pytest.raises(EmptyTrajectory):
        torque_profile(canon_cfg.baseline, canon_cfg, canon_task, [])
