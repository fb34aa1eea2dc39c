"""Rigid-body dynamics reduced to the crank axis.

The motor torque is computed from the Lagrangian of the whole linkage with
the crank angle as the single generalized coordinate:

    T_m = I_eq(theta) theta_ddot + 1/2 I_eq'(theta) theta_dot^2
          + G(theta) - Q_ext(theta)

where I_eq is the equivalent (reflected) inertia seen by the motor, G the
gravity torque dV/dtheta, and Q_ext the generalized torque of the external
tip force.  I_eq and G follow analytically from per-link velocity
coefficients at unit crank rate; I_eq' uses a central finite difference
over theta because the reflected inertia has no convenient closed form.

Links are uniform slender rods (m = rho L, centroid at L/2, I = m L^2/12).
The rocker link is the rigid union of bar B-C, the effector beam of length
``effector_tip_length`` at the effector offset angle, and the payload as a
point mass at the beam tip; the union is composed by the parallel-axis
theorem and rotates about the fixed pivot C.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

from .kinematics import Posture, TrajectorySample
from .model import (
    DesignParams,
    EmptyTrajectory,
    MechanismConfig,
    MotionTask,
    NotAssemblable,
    SingularState,
)

__all__ = [
    "LinkInertia",
    "MassModel",
    "TorqueProfile",
    "mass_model",
    "equivalent_inertia",
    "gravity_torque",
    "mechanical_energy",
    "torque_at_state",
    "torque_profile",
]

_FD_STEP = 1e-5  # rad, central-difference step for I_eq'
_SINGULAR_TOL = 1e-12


@dataclass(frozen=True, slots=True)
class LinkInertia:
    """Mass, centroid and central inertia of one link, in its local frame.

    The local frame is anchored at the link's inner joint (O for the crank,
    A for the coupler, C for the rocker) with x along the bar.
    """

    mass: float
    com: tuple[float, float]
    i_com: float


@dataclass(frozen=True, slots=True)
class MassModel:
    crank: LinkInertia
    coupler: LinkInertia
    rocker: LinkInertia


@dataclass(frozen=True, slots=True)
class TorqueProfile:
    """Motor torque over one full duty cycle (stroke, dwell, return, dwell)."""

    samples: tuple[tuple[float, float], ...]
    t_cycle: float
    t_rms: float


def _rod(density: float, length: float) -> tuple[float, tuple[float, float], float]:
    mass = density * length
    return mass, (0.5 * length, 0.0), mass * length * length / 12.0


@lru_cache(maxsize=4096)
def mass_model(design: DesignParams, cfg: MechanismConfig) -> MassModel:
    """Per-link inertial properties for the uniform-rod mass model."""
    rho_oa, rho_ab, rho_bc = cfg.link_density
    m, com, i = _rod(rho_oa, design.l_oa)
    crank = LinkInertia(m, com, i)
    m, com, i = _rod(rho_ab, design.l_ab)
    coupler = LinkInertia(m, com, i)

    # Rocker composite: bar B-C plus effector beam plus point payload.  The
    # beam leaves C at the effector offset angle from the bar direction and
    # shares the bar's linear density.
    lt = cfg.effector_tip_length
    off = cfg.effector_offset
    parts = []  # (mass, com_x, com_y, i_com)
    m_bar, com_bar, i_bar = _rod(rho_bc, design.l_bc)
    parts.append((m_bar, com_bar[0], com_bar[1], i_bar))
    if lt > 0.0:
        m_beam = rho_bc * lt
        cx, sx = math.cos(off), math.sin(off)
        parts.append((m_beam, 0.5 * lt * cx, 0.5 * lt * sx, m_beam * lt * lt / 12.0))
        parts.append((cfg.payload_mass, lt * cx, lt * sx, 0.0))
    else:
        parts.append((cfg.payload_mass, 0.0, 0.0, 0.0))
    total = sum(p[0] for p in parts)
    if total > 0.0:
        gx = sum(p[0] * p[1] for p in parts) / total
        gy = sum(p[0] * p[2] for p in parts) / total
        i_g = sum(p[3] + p[0] * ((p[1] - gx) ** 2 + (p[2] - gy) ** 2) for p in parts)
    else:
        gx = gy = i_g = 0.0
    rocker = LinkInertia(total, (gx, gy), i_g)
    return MassModel(crank, coupler, rocker)


def _dyn_terms(
    design: DesignParams,
    cfg: MechanismConfig,
    masses: MassModel,
    a_pt: tuple[float, float],
    b_pt: tuple[float, float],
) -> tuple[float, float, float]:
    """(I_eq, G, Q_ext) at a geometric configuration given by points A, B.

    Velocity coefficients are taken at unit crank rate: v_A = perp(A - O),
    and the coupler/rocker rates solve the rigid-body velocity closure
    v_A + omega_ab perp(B - A) = omega_r perp(B - C).

    Raises SingularState when coupler and rocker are collinear, where the
    closure has no solution (the crank cannot drive through).
    """
    ox, oy = cfg.pivot_o
    cx, cy = cfg.pivot_c
    ax, ay = a_pt
    bx, by = b_pt

    rax = ax - ox
    ray = ay - oy
    vax = -ray  # perp(A - O), crank rate 1
    vay = rax
    bax = bx - ax
    bay = by - ay
    bcx = bx - cx
    bcy = by - cy

    den = bcx * bay - bcy * bax  # cross(B - C, B - A), ~ sin(beta)
    if abs(den) < _SINGULAR_TOL * design.l_bc * design.l_ab:
        raise SingularState("transmission singularity: coupler and rocker collinear")
    omega_r = (vax * bax + vay * bay) / den
    omega_ab = (vax * bcx + vay * bcy) / den

    mm = masses
    gx, gy = cfg.gravity

    # crank: rotation about O
    i_eq = mm.crank.i_com + mm.crank.mass * (0.25 * (rax * rax + ray * ray))
    vgx = 0.5 * vax
    vgy = 0.5 * vay
    g_sum = -mm.crank.mass * (gx * vgx + gy * vgy)

    # coupler: general plane motion, centroid at the bar midpoint
    vgx = vax + omega_ab * (-0.5 * bay)
    vgy = vay + omega_ab * (0.5 * bax)
    i_eq += mm.coupler.mass * (vgx * vgx + vgy * vgy) + mm.coupler.i_com * omega_ab * omega_ab
    g_sum -= mm.coupler.mass * (gx * vgx + gy * vgy)

    # rocker composite: rotation about C; local frame x-axis along C->B
    cphi = bcx / design.l_bc
    sphi = bcy / design.l_bc
    lx, ly = mm.rocker.com
    rgx = lx * cphi - ly * sphi  # centroid offset from C in world frame
    rgy = lx * sphi + ly * cphi
    i_about_c = mm.rocker.i_com + mm.rocker.mass * (rgx * rgx + rgy * rgy)
    i_eq += i_about_c * omega_r * omega_r
    vgx = omega_r * (-rgy)
    vgy = omega_r * rgx
    g_sum -= mm.rocker.mass * (gx * vgx + gy * vgy)

    # external tip force acting at the end of the effector beam
    fx, fy = cfg.tip_force
    q_ext = 0.0
    if fx != 0.0 or fy != 0.0:
        lt = cfg.effector_tip_length
        co = math.cos(cfg.effector_offset)
        so = math.sin(cfg.effector_offset)
        tx = lt * (cphi * co - sphi * so)  # tip offset from C, world frame
        ty = lt * (sphi * co + cphi * so)
        q_ext = fx * (omega_r * -ty) + fy * (omega_r * tx)

    return i_eq, g_sum, q_ext


def _fk_point_b_near(
    design: DesignParams,
    cfg: MechanismConfig,
    theta: float,
    b_ref: tuple[float, float],
) -> tuple[tuple[float, float], tuple[float, float]]:
    """FK at a crank angle, choosing the rocker-pin solution nearest b_ref."""
    from .kinematics import _circle_intersections  # local to avoid cycle at import

    ox, oy = cfg.pivot_o
    a_pt = (ox + design.l_oa * math.cos(theta), oy + design.l_oa * math.sin(theta))
    pts = _circle_intersections(a_pt, design.l_ab, cfg.pivot_c, design.l_bc)
    if not pts:
        raise NotAssemblable(f"no assembly at theta={theta!r}")
    if len(pts) == 1:
        return a_pt, pts[0]
    d0 = (pts[0][0] - b_ref[0]) ** 2 + (pts[0][1] - b_ref[1]) ** 2
    d1 = (pts[1][0] - b_ref[0]) ** 2 + (pts[1][1] - b_ref[1]) ** 2
    return a_pt, pts[0] if d0 <= d1 else pts[1]


def _terms_with_gradient(
    design: DesignParams,
    cfg: MechanismConfig,
    masses: MassModel,
    a_pt: tuple[float, float],
    b_pt: tuple[float, float],
    theta: float,
) -> tuple[float, float, float, float]:
    """(I_eq, I_eq', G, Q) at a configuration; I_eq' by central FD over theta."""
    i_eq, g_tau, q_ext = _dyn_terms(design, cfg, masses, a_pt, b_pt)
    h = _FD_STEP
    try:
        a_plus, b_plus = _fk_point_b_near(design, cfg, theta + h, b_pt)
        a_minus, b_minus = _fk_point_b_near(design, cfg, theta - h, b_pt)
        i_plus, _, _ = _dyn_terms(design, cfg, masses, a_plus, b_plus)
        i_minus, _, _ = _dyn_terms(design, cfg, masses, a_minus, b_minus)
    except NotAssemblable as exc:
        raise SingularState(
            "assembly fold within the inertia-gradient step"
        ) from exc
    i_prime = (i_plus - i_minus) / (2.0 * h)
    return i_eq, i_prime, g_tau, q_ext


def equivalent_inertia(design: DesignParams, cfg: MechanismConfig, posture: Posture) -> float:
    """Reflected inertia about the crank axis at a posture (kg m^2)."""
    masses = mass_model(design, cfg)
    i_eq, _, _ = _dyn_terms(design, cfg, masses, posture.point_a, posture.point_b)
    return i_eq


def gravity_torque(design: DesignParams, cfg: MechanismConfig, posture: Posture) -> float:
    """dV/dtheta at a posture (N m): crank torque needed to hold gravity."""
    masses = mass_model(design, cfg)
    _, g_tau, _ = _dyn_terms(design, cfg, masses, posture.point_a, posture.point_b)
    return g_tau


def mechanical_energy(
    design: DesignParams, cfg: MechanismConfig, posture: Posture, theta_dot: float
) -> float:
    """Kinetic plus gravitational potential energy at a state (J)."""
    masses = mass_model(design, cfg)
    i_eq, _, _ = _dyn_terms(design, cfg, masses, posture.point_a, posture.point_b)
    gx, gy = cfg.gravity
    ox, oy = cfg.pivot_o
    cx, cy = cfg.pivot_c
    ax, ay = posture.point_a
    bx, by = posture.point_b

    v_pot = 0.0
    m = masses.crank.mass
    v_pot -= m * (gx * 0.5 * (ox + ax) + gy * 0.5 * (oy + ay))
    m = masses.coupler.mass
    v_pot -= m * (gx * 0.5 * (ax + bx) + gy * 0.5 * (ay + by))
    cphi = (bx - cx) / design.l_bc
    sphi = (by - cy) / design.l_bc
    lx, ly = masses.rocker.com
    rgx = cx + lx * cphi - ly * sphi
    rgy = cy + lx * sphi + ly * cphi
    v_pot -= masses.rocker.mass * (gx * rgx + gy * rgy)

    return 0.5 * i_eq * theta_dot * theta_dot + v_pot


def torque_at_state(
    design: DesignParams,
    cfg: MechanismConfig,
    posture: Posture,
    theta_dot: float,
    theta_ddot: float,
) -> float:
    """Motor torque for one instantaneous state (N m).

    At rest this reduces to the static holding torque G - Q_ext.

    Raises SingularState when the posture sits on a transmission
    singularity, where the reflected inertia is unbounded.
    """
    masses = mass_model(design, cfg)
    i_eq, i_prime, g_tau, q_ext = _terms_with_gradient(
        design, cfg, masses, posture.point_a, posture.point_b, posture.theta
    )
    return i_eq * theta_ddot + 0.5 * i_prime * theta_dot * theta_dot + g_tau - q_ext


def _trapezoid_sq(times: list[float], values: list[float]) -> float:
    """Integral of value^2 dt by the trapezoid rule."""
    acc = 0.0
    for k in range(len(times) - 1):
        y0 = values[k] * values[k]
        y1 = values[k + 1] * values[k + 1]
        acc += 0.5 * (y0 + y1) * (times[k + 1] - times[k])
    return acc


def torque_profile(
    design: DesignParams,
    cfg: MechanismConfig,
    task: MotionTask,
    trajectory: list[TrajectorySample],
) -> TorqueProfile:
    """Motor torque over the full duty cycle and its RMS value.

    The forward stroke follows the given trajectory.  The return stroke is
    the time-reversed effector profile, recomputed through the same torque
    model (the crank rate flips sign; because the rate enters only squared
    the return torque mirrors the forward one in time).  Dwells contribute
    the static holding torque at the stroke endpoints.

    t_rms = sqrt( (1/t_cycle) * integral of T_m^2 dt )  (trapezoid rule).
    """
    n = len(trajectory)
    if n == 0:
        raise EmptyTrajectory("torque_profile needs a non-empty trajectory")
    if n != task.n_samples:
        raise ValueError("trajectory sample count does not match the task")

    masses = mass_model(design, cfg)
    ox, oy = cfg.pivot_o
    cx, cy = cfg.pivot_c

    fwd_t: list[float] = []
    fwd_tau: list[float] = []
    holding: list[float] = []  # static torque at first and last sample
    for k, s in enumerate(trajectory):
        a_pt = (
            ox + design.l_oa * math.cos(s.theta),
            oy + design.l_oa * math.sin(s.theta),
        )
        ang = s.delta - cfg.effector_offset
        b_pt = (cx + design.l_bc * math.cos(ang), cy + design.l_bc * math.sin(ang))
        # cheap consistency guard: the sample must close the coupler
        gap = math.hypot(a_pt[0] - b_pt[0], a_pt[1] - b_pt[1]) - design.l_ab
        if abs(gap) > 1e-6 * design.l_ab:
            raise ValueError("trajectory is inconsistent with the design geometry")
        try:
            i_eq, i_prime, g_tau, q_ext = _terms_with_gradient(
                design, cfg, masses, a_pt, b_pt, s.theta
            )
        except SingularState as exc:
            raise SingularState(str(exc), t=s.t) from exc
        tau = i_eq * s.theta_ddot + 0.5 * i_prime * s.theta_dot * s.theta_dot + g_tau - q_ext
        fwd_t.append(s.t)
        fwd_tau.append(tau)
        if k == 0 or k == n - 1:
            holding.append(g_tau - q_ext)

    hold_e, hold_i = holding[0], holding[1]
    tm = task.t_move
    td = task.t_dwell
    t_cycle = task.t_cycle

    samples: list[tuple[float, float]] = list(zip(fwd_t, fwd_tau))
    integral = _trapezoid_sq(fwd_t, fwd_tau)

    t0 = tm
    if td > 0.0:
        samples.append((t0, hold_i))
        samples.append((t0 + td, hold_i))
        integral += hold_i * hold_i * td
    t0 = tm + td

    # return stroke: sample j revisits forward sample n-1-j with the crank
    # rate negated; squared-rate dynamics make the torque the forward one
    # mirrored in time
    ret_t = [t0 + fwd_t[j] for j in range(n)]
    ret_tau = [fwd_tau[n - 1 - j] for j in range(n)]
    samples.extend(zip(ret_t, ret_tau))
    integral += _trapezoid_sq(ret_t, ret_tau)

    t0 = 2.0 * tm + td
    if td > 0.0:
        samples.append((t0, hold_e))
        samples.append((t0 + td, hold_e))
        integral += hold_e * hold_e * td

    t_rms = math.sqrt(integral / t_cycle)
    return TorqueProfile(samples=tuple(samples), t_cycle=t_cycle, t_rms=t_rms)
