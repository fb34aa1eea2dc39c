"""Quantified feasibility constraints and the full design evaluation.

Assemblability is scored, not just classified.  For a candidate design the
linkage is rebuilt from the task pose using the *baseline* design's relative
bar angles; that leaves the crank pivot hanging at a virtual point O' which
coincides with O only if the candidate assembles in the baseline-like
posture.  Sliding O' straight toward O inside the annulus of positions the
free chain can reach turns the remaining distance into a signed gap:
positive means the pose cannot be assembled that way (the slide stopped
short), zero or negative means it can, with the overshoot past O capped.

Motion defects are scored on the crank-angle history of the stroke: if the
crank reverses while the effector sweeps one way (a transmission-angle
crossing of 0 or pi), the constraint value is the crank-angle range covered
against the net direction of travel.

Both scores feed the optimizer as data; infeasibility never raises.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Literal

from .dynamics import torque_profile
from .kinematics import TrajectorySample, _transform_full, solve_ik
from .model import (
    BaselineInfeasible,
    ConstraintBundle,
    DesignParams,
    EmptyTrajectory,
    EvaluationRecord,
    MechanismConfig,
    MotionTask,
    NotAssemblable,
    SeedUnsolvable,
    SingularState,
    TransformUnsolvable,
)

__all__ = [
    "Pose",
    "StaticGapResult",
    "DynamicConstraintResult",
    "baseline_posture",
    "static_gap",
    "dynamic_constraint",
    "evaluate_design",
]

Pose = Literal["i", "e"]

_DEGENERATE_START = 1e-9  # m; below this the slide start sits on O already
_RATE_EPS = 1e-12  # rad/s; crank rates below this do not count as reversal


@dataclass(frozen=True, slots=True)
class StaticGapResult:
    """Outcome of the virtual-assembly slide for one pose.

    value > 0: residual gap, the pose does not assemble this way (m).
    value <= 0: assembles; magnitude is the capped overshoot past O.
    """

    value: float
    pose: Pose
    o_prime_init: tuple[float, float]
    o_prime_final: tuple[float, float]
    degenerate_start: bool


@dataclass(frozen=True, slots=True)
class DynamicConstraintResult:
    """Crank-reversal range over the stroke.

    ``reference_sign`` is the sign of the net crank displacement; violating
    samples move against it.  value = 0 means defect-free motion.
    """

    value: float
    violating_indices: tuple[int, ...]
    reference_sign: int


def _pose_delta(task: MotionTask, pose: Pose) -> float:
    if pose == "i":
        return task.delta_i
    if pose == "e":
        return task.delta_e
    raise ValueError(f"pose must be 'i' or 'e', got {pose!r}")


@lru_cache(maxsize=4096)
def baseline_posture(cfg: MechanismConfig, task: MotionTask, pose: Pose) -> tuple[float, float]:
    """Signed relative bar angles (alpha0, beta0) of the baseline at a pose.

    beta0 rotates the unit ray B->C onto B->A; alpha0 rotates the unit ray
    A->B onto A->O.  Rebuilding the chain with these angles and the baseline
    lengths reproduces the baseline posture exactly, which anchors the
    static-gap construction.

    Raises BaselineInfeasible if the baseline does not assemble at the pose.
    """
    delta = _pose_delta(task, pose)
    try:
        p = solve_ik(cfg.baseline, cfg, delta, cfg.branch)
    except NotAssemblable as exc:
        raise BaselineInfeasible(delta) from exc
    ox, oy = cfg.pivot_o
    cx, cy = cfg.pivot_c
    ax, ay = p.point_a
    bx, by = p.point_b

    ubcx = (cx - bx) / cfg.baseline.l_bc
    ubcy = (cy - by) / cfg.baseline.l_bc
    ubax = (ax - bx) / cfg.baseline.l_ab
    ubay = (ay - by) / cfg.baseline.l_ab
    beta0 = math.atan2(ubcx * ubay - ubcy * ubax, ubcx * ubax + ubcy * ubay)

    uabx, uaby = -ubax, -ubay
    uaox = (ox - ax) / cfg.baseline.l_oa
    uaoy = (oy - ay) / cfg.baseline.l_oa
    alpha0 = math.atan2(uabx * uaoy - uaby * uaox, uabx * uaox + uaby * uaoy)
    return alpha0, beta0


def static_gap(
    design: DesignParams, cfg: MechanismConfig, task: MotionTask, pose: Pose
) -> StaticGapResult:
    """Quantified assemblability of a design at one stroke endpoint.

    Construction: place B from the pose, hang the coupler and crank off it
    using the baseline's signed relative angles, then slide the resulting
    virtual crank pivot O' straight toward O.  The slide is confined to the
    closed annulus centred on B with radii |l_ab - l_oa| and l_ab + l_oa
    (all positions the two-bar chain can reach) and stops at the first exit
    or ``overshoot_cap`` metres past O, whichever comes first.  The value is
    the distance still missing toward O (negative = overshoot).

    A start within 1e-9 m of O (the design assembles exactly in the
    baseline-like posture) degenerates the slide direction; it is then taken
    radially outward from B through O, giving the most negative capped
    value the local geometry allows.
    """
    alpha0, beta0 = baseline_posture(cfg, task, pose)
    delta = _pose_delta(task, pose)
    ox, oy = cfg.pivot_o
    cx, cy = cfg.pivot_c

    ang = delta - cfg.effector_offset
    bx = cx + design.l_bc * math.cos(ang)
    by = cy + design.l_bc * math.sin(ang)

    # chain: A' = B + l_ab * R(beta0) u(B->C); O' = A' + l_oa * R(alpha0) u(A'->B)
    ubcx, ubcy = -math.cos(ang), -math.sin(ang)
    cb, sb = math.cos(beta0), math.sin(beta0)
    ubax = cb * ubcx - sb * ubcy
    ubay = sb * ubcx + cb * ubcy
    apx = bx + design.l_ab * ubax
    apy = by + design.l_ab * ubay
    ca, sa = math.cos(alpha0), math.sin(alpha0)
    uaox = ca * (-ubax) - sa * (-ubay)
    uaoy = sa * (-ubax) + ca * (-ubay)
    opx = apx + design.l_oa * uaox
    opy = apy + design.l_oa * uaoy

    r_in = abs(design.l_ab - design.l_oa)
    r_out = design.l_ab + design.l_oa
    cap = cfg.overshoot_cap

    s_o = math.hypot(ox - opx, oy - opy)
    if s_o < _DEGENERATE_START:
        # already at O: probe outward from B through O for the capped slack
        dx, dy = ox - bx, oy - by
        d_ob = math.hypot(dx, dy)
        if d_ob > 0.0:
            ux, uy = dx / d_ob, dy / d_ob
        else:
            ux, uy = 1.0, 0.0
        s_final = min(cap, max(0.0, r_out - d_ob))
        return StaticGapResult(
            value=-s_final,
            pose=pose,
            o_prime_init=(opx, opy),
            o_prime_final=(ox + s_final * ux, oy + s_final * uy),
            degenerate_start=True,
        )

    ux, uy = (ox - opx) / s_o, (oy - opy) / s_o
    wx, wy = opx - bx, opy - by
    w2 = wx * wx + wy * wy
    p = wx * ux + wy * uy  # signed progress of the start along the ray

    # first exit through the outer circle: larger root of |w + s u| = r_out
    disc_out = p * p - (w2 - r_out * r_out)
    s_exit = -p + math.sqrt(max(disc_out, 0.0))

    # first entry into the inner hole (tangency does not block)
    if r_in > 0.0:
        disc_in = p * p - (w2 - r_in * r_in)
        if disc_in > 0.0:
            root = math.sqrt(disc_in)
            a1 = -p - root
            a2 = -p + root
            if a2 > 0.0 and a1 > -1e-15:
                s_exit = min(s_exit, max(a1, 0.0))

    s_final = min(s_exit, s_o + cap)
    return StaticGapResult(
        value=s_o - s_final,
        pose=pose,
        o_prime_init=(opx, opy),
        o_prime_final=(opx + s_final * ux, opy + s_final * uy),
        degenerate_start=False,
    )


def dynamic_constraint(trajectory: list[TrajectorySample]) -> DynamicConstraintResult:
    """Crank-angle range travelled against the net direction of the stroke.

    Zero when the crank rate keeps one sign over the whole stroke.
    Otherwise the violators are the samples whose rate opposes the sign of
    the net crank displacement (rates below 1e-12 are rest, not reversal)
    and the value is max(theta) - min(theta) over them.

    Raises EmptyTrajectory on empty input.
    """
    if not trajectory:
        raise EmptyTrajectory("dynamic_constraint needs at least one sample")
    rates = [s.theta_dot for s in trajectory]
    net = trajectory[-1].theta - trajectory[0].theta
    reference_sign = 1 if net >= 0.0 else -1
    if all(r >= 0.0 for r in rates) or all(r <= 0.0 for r in rates):
        return DynamicConstraintResult(0.0, (), reference_sign)
    bad = [
        k
        for k, r in enumerate(rates)
        if abs(r) > _RATE_EPS and (1 if r > 0.0 else -1) == -reference_sign
    ]
    if not bad:
        return DynamicConstraintResult(0.0, (), reference_sign)
    values = [trajectory[k].theta for k in bad]
    return DynamicConstraintResult(max(values) - min(values), tuple(bad), reference_sign)


def evaluate_design(
    design: DesignParams, cfg: MechanismConfig, task: MotionTask
) -> EvaluationRecord:
    """Run the full constraint-then-objective pipeline for one design.

    Gate order: static gaps at both stroke endpoints first; only when both
    are non-positive is the stroke trajectory attempted, and only a
    defect-free trajectory (zero dynamic constraint) is costed for RMS
    torque.  Designs that fail early simply carry missing downstream
    observations; this function never raises for an infeasible design.
    """
    gap_i = static_gap(design, cfg, task, "i")
    gap_e = static_gap(design, cfg, task, "e")

    c_dyn: float | None = None
    objective: float | None = None
    if gap_i.value <= 0.0 and gap_e.value <= 0.0:
        try:
            trajectory, _postures = _transform_full(design, cfg, task)
        except (SeedUnsolvable, TransformUnsolvable):
            trajectory = None  # assembles at the endpoints but not throughout
        if trajectory is not None:
            c_dyn = dynamic_constraint(trajectory).value

    bundle = ConstraintBundle.from_values(gap_i.value, gap_e.value, c_dyn)
    if bundle.feasible:
        try:
            objective = torque_profile(design, cfg, task, trajectory).t_rms
        except SingularState:
            objective = None  # marginal posture on a fold; leave uncosted
    return EvaluationRecord(design=design, constraints=bundle, objective=objective)
