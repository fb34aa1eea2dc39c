"""Closed-form position kinematics and stroke trajectory generation.

The linkage is driven in two directions: the motor drives the crank angle
``theta`` (forward kinematics), while the motion task prescribes the
effector angle ``delta`` (inverse kinematics).  Both reduce to classic
circle-circle intersections with an explicit branch tag.

Trajectories are generated by numerical continuation seeded at mid-stroke:
solve once at ``delta_mid`` on the configured branch, then walk outward to
both stroke ends, always keeping the intersection nearest the previous
point A.  This keeps the solution on one assembly branch without relying on
the sign tag, which flips spuriously when the crank crosses the O-B line.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .model import (
    Branch,
    DesignParams,
    MechanismConfig,
    MotionTask,
    BaselineDefective,
    BaselineInfeasible,
    NotAssemblable,
    SeedUnsolvable,
    SingularPosture,
    TransformUnsolvable,
)

__all__ = [
    "Posture",
    "KinematicCoefficients",
    "TrajectorySample",
    "solve_ik",
    "solve_fk",
    "kinematic_coefficients",
    "motion_profile",
    "kinematic_transform",
    "validate_baseline",
]

# Relative tolerance for "the circles just touch": gaps smaller than this
# (scaled by the radii) are treated as exact tangency instead of failure.
_TANGENT_TOL = 1e-12

# Threshold scale for the crank-coupler dead point test in the coefficient
# formula denominator, and for the transmission-singularity flag.
_SINGULAR_TOL = 1e-12

_FD_STEP = 1e-5  # rad, central-difference step for the second derivative


@dataclass(frozen=True, slots=True)
class Posture:
    """One assembled configuration of the linkage.

    ``alpha`` is the interior angle at A between rays A->O and A->B;
    ``beta`` is the transmission angle at B between rays B->A and B->C.
    Both are unsigned, in (0, pi) away from dead points.  ``elbow`` records
    the branch tag the posture was constructed on.
    """

    theta: float
    delta: float
    rocker_angle: float
    point_a: tuple[float, float]
    point_b: tuple[float, float]
    alpha: float
    beta: float
    elbow: Branch


@dataclass(frozen=True, slots=True)
class KinematicCoefficients:
    """First and second derivative of crank angle w.r.t. effector angle.

    ``transmission_singular`` is set when the coupler and rocker are
    collinear (transmission angle at 0 or pi).  There dtheta/ddelta vanishes
    and the inverse ratio ddelta/dtheta blows up: the crank is at a motion
    reversal, which the dynamic constraint quantifies.
    """

    dtheta_ddelta: float
    d2theta_ddelta2: float
    transmission_singular: bool


@dataclass(frozen=True, slots=True)
class TrajectorySample:
    """Time-stamped state along the stroke, effector and crank side."""

    t: float
    delta: float
    delta_dot: float
    delta_ddot: float
    theta: float
    theta_dot: float
    theta_ddot: float


def _rocker_tip(cfg: MechanismConfig, design: DesignParams, delta: float) -> tuple[float, float]:
    """Point B for a given effector angle."""
    ang = delta - cfg.effector_offset
    cx, cy = cfg.pivot_c
    return (cx + design.l_bc * math.cos(ang), cy + design.l_bc * math.sin(ang))


def _circle_intersections(
    c0: tuple[float, float],
    r0: float,
    c1: tuple[float, float],
    r1: float,
) -> list[tuple[float, float]]:
    """Intersection points of two circles; one point means tangency.

    Near-tangency within a 1e-12 relative band is snapped to exact tangency
    so that marginally assemblable designs still solve.
    """
    dx = c1[0] - c0[0]
    dy = c1[1] - c0[1]
    d2 = dx * dx + dy * dy
    if d2 <= 0.0:
        return []
    a = (d2 + r0 * r0 - r1 * r1) / (2.0 * d2)  # chord foot as fraction of d
    h2 = r0 * r0 - a * a * d2
    if h2 < 0.0:
        # h2 ~ -2*r0*r1/d * gap near tangency; accept gaps within tolerance
        if h2 < -4.0 * _TANGENT_TOL * r0 * r1:
            return []
        h2 = 0.0
    mx = c0[0] + a * dx
    my = c0[1] + a * dy
    if h2 == 0.0:
        return [(mx, my)]
    h_over_d = math.sqrt(h2 / d2)
    ox = -dy * h_over_d
    oy = dx * h_over_d
    return [(mx + ox, my + oy), (mx - ox, my - oy)]


def _angle_between(ux: float, uy: float, vx: float, vy: float) -> float:
    """Unsigned angle between two vectors, in [0, pi]."""
    cross = ux * vy - uy * vx
    dot = ux * vx + uy * vy
    return math.atan2(abs(cross), dot)


def _build_posture(
    cfg: MechanismConfig,
    delta: float,
    a_pt: tuple[float, float],
    b_pt: tuple[float, float],
    elbow: Branch,
) -> Posture:
    ox, oy = cfg.pivot_o
    cx, cy = cfg.pivot_c
    ax, ay = a_pt
    bx, by = b_pt
    theta = math.atan2(ay - oy, ax - ox)
    alpha = _angle_between(ox - ax, oy - ay, bx - ax, by - ay)
    beta = _angle_between(ax - bx, ay - by, cx - bx, cy - by)
    return Posture(
        theta=theta,
        delta=delta,
        rocker_angle=delta - cfg.effector_offset,
        point_a=a_pt,
        point_b=b_pt,
        alpha=alpha,
        beta=beta,
        elbow=elbow,
    )


def _ik_candidates(
    design: DesignParams, cfg: MechanismConfig, delta: float
) -> tuple[tuple[float, float], list[tuple[float, float]]]:
    """Point B plus all valid crank-pin positions A for a given delta."""
    b_pt = _rocker_tip(cfg, design, delta)
    pts = _circle_intersections(cfg.pivot_o, design.l_oa, b_pt, design.l_ab)
    return b_pt, pts


def solve_ik(design: DesignParams, cfg: MechanismConfig, delta: float, elbow: Branch) -> Posture:
    """Assemble the linkage for a prescribed effector angle.

    B follows rigidly from delta; A is the intersection of the crank circle
    about O and the coupler circle about B.  The "plus" branch is the
    solution with cross(B - O, A - O) > 0.

    Raises NotAssemblable when the two circles do not intersect.
    """
    b_pt, pts = _ik_candidates(design, cfg, delta)
    if not pts:
        raise NotAssemblable(
            f"no crank-pin position at delta={delta!r} for lengths {design.as_tuple()!r}"
        )
    if len(pts) == 1:
        a_pt = pts[0]
    else:
        ox, oy = cfg.pivot_o
        rx, ry = b_pt[0] - ox, b_pt[1] - oy
        cross0 = rx * (pts[0][1] - oy) - ry * (pts[0][0] - ox)
        want_plus = elbow == "plus"
        a_pt = pts[0] if (cross0 > 0.0) == want_plus else pts[1]
    return _build_posture(cfg, delta, a_pt, b_pt, elbow)


def solve_fk(design: DesignParams, cfg: MechanismConfig, theta: float, elbow: Branch) -> Posture:
    """Assemble the linkage for a prescribed crank angle.

    A follows rigidly from theta; B is the intersection of the coupler
    circle about A and the rocker circle about C.  The "plus" branch is the
    solution with cross(C - A, B - A) > 0.
    """
    ox, oy = cfg.pivot_o
    a_pt = (ox + design.l_oa * math.cos(theta), oy + design.l_oa * math.sin(theta))
    pts = _circle_intersections(a_pt, design.l_ab, cfg.pivot_c, design.l_bc)
    if not pts:
        raise NotAssemblable(
            f"no rocker-pin position at theta={theta!r} for lengths {design.as_tuple()!r}"
        )
    if len(pts) == 1:
        b_pt = pts[0]
    else:
        cx, cy = cfg.pivot_c
        rx, ry = cx - a_pt[0], cy - a_pt[1]
        cross0 = rx * (pts[0][1] - a_pt[1]) - ry * (pts[0][0] - a_pt[0])
        want_plus = elbow == "plus"
        b_pt = pts[0] if (cross0 > 0.0) == want_plus else pts[1]
    cx, cy = cfg.pivot_c
    rocker_angle = math.atan2(b_pt[1] - cy, b_pt[0] - cx)
    delta = rocker_angle + cfg.effector_offset
    posture = _build_posture(cfg, delta, a_pt, b_pt, elbow)
    return posture


def _dtheta_ddelta_at(
    design: DesignParams, cfg: MechanismConfig, posture: Posture
) -> tuple[float, float, float]:
    """Velocity-ratio formula pieces: (ratio numerator, denominator, ratio).

    From the closure |A(theta) - B(delta)| = l_ab:
        dtheta/ddelta = [(A-B) . dB/ddelta] / [(A-B) . dA/dtheta]
    The denominator is proportional to sin(alpha) (crank-coupler dead
    point), the numerator to sin(beta) (transmission singularity).
    """
    ax, ay = posture.point_a
    bx, by = posture.point_b
    ox, oy = cfg.pivot_o
    ex = ax - bx
    ey = ay - by
    # dA/dtheta = l_oa * perp(unit(A - O)); here unnormalized perp(A - O)
    dax = -(ay - oy)
    day = ax - ox
    ang = posture.rocker_angle
    dbx = -design.l_bc * math.sin(ang)
    dby = design.l_bc * math.cos(ang)
    den = ex * dax + ey * day
    num = ex * dbx + ey * dby
    if abs(den) < _SINGULAR_TOL * design.l_oa * design.l_ab:
        raise SingularPosture(
            f"crank and coupler collinear at delta={posture.delta!r}; "
            "effector cannot drive through this pose"
        )
    return num, den, num / den


def kinematic_coefficients(
    posture: Posture, design: DesignParams, cfg: MechanismConfig
) -> KinematicCoefficients:
    """First and second stroke derivatives of the crank angle.

    The first derivative is analytic.  The second is a central finite
    difference of the first over delta with one Richardson extrapolation
    step (h = 1e-5 rad), re-solving the IK on the posture's branch; if the
    pose sits against an assembly fold one-sided differences are used.

    Raises SingularPosture at a crank-coupler dead point, where the
    effector-driven ratio is unbounded.
    """
    num, _den, ratio = _dtheta_ddelta_at(design, cfg, posture)
    transmission_singular = abs(num) < _SINGULAR_TOL * design.l_bc * design.l_ab

    def g(delta: float) -> float | None:
        try:
            p = solve_ik(design, cfg, delta, posture.elbow)
            return _dtheta_ddelta_at(design, cfg, p)[2]
        except (NotAssemblable, SingularPosture):
            return None

    h = _FD_STEP
    d0 = posture.delta
    gp, gm = g(d0 + h), g(d0 - h)
    gp2, gm2 = g(d0 + 0.5 * h), g(d0 - 0.5 * h)
    if None not in (gp, gm, gp2, gm2):
        coarse = (gp - gm) / (2.0 * h)
        fine = (gp2 - gm2) / h
        second = (4.0 * fine - coarse) / 3.0
    elif gp2 is not None and gm2 is not None:
        second = (gp2 - gm2) / h
    elif gp2 is not None:
        second = (gp2 - ratio) / (0.5 * h)
    elif gm2 is not None:
        second = (ratio - gm2) / (0.5 * h)
    else:
        raise SingularPosture(
            f"cannot difference the velocity ratio at delta={posture.delta!r}"
        )
    return KinematicCoefficients(ratio, second, transmission_singular)


def motion_profile(task: MotionTask) -> list[tuple[float, float, float, float]]:
    """Rest-to-rest quintic motion law, one stroke.

    Returns (t, s, s_dot, s_ddot) rows with s in [0, 1] and derivatives with
    respect to time; s(0)=0, s(t_move)=1, velocities and accelerations are
    exactly zero at both ends.
    """
    n = task.n_samples
    tm = task.t_move
    rows = []
    for k in range(n):
        tau = k / (n - 1)
        t = tau * tm
        s = tau * tau * tau * (10.0 - 15.0 * tau + 6.0 * tau * tau)
        sd = 30.0 * tau * tau * (1.0 - tau) * (1.0 - tau) / tm
        sdd = (60.0 * tau - 180.0 * tau * tau + 120.0 * tau * tau * tau) / (tm * tm)
        rows.append((t, s, sd, sdd))
    return rows


def _continuation_postures(
    design: DesignParams,
    cfg: MechanismConfig,
    deltas: list[float],
    mid: int,
) -> list[Posture]:
    """Solve IK along a delta schedule by mid-seeded bidirectional continuation."""
    try:
        seed = solve_ik(design, cfg, deltas[mid], cfg.branch)
    except NotAssemblable as exc:
        raise SeedUnsolvable(
            f"mid-stroke pose delta={deltas[mid]!r} not assemblable"
        ) from exc

    postures: list[Posture | None] = [None] * len(deltas)
    postures[mid] = seed

    for direction in (1, -1):
        prev = seed.point_a
        k = mid + direction
        while 0 <= k < len(deltas):
            b_pt, pts = _ik_candidates(design, cfg, deltas[k])
            if not pts:
                raise TransformUnsolvable(deltas[k])
            if len(pts) == 1:
                a_pt = pts[0]
            else:
                d0 = (pts[0][0] - prev[0]) ** 2 + (pts[0][1] - prev[1]) ** 2
                d1 = (pts[1][0] - prev[0]) ** 2 + (pts[1][1] - prev[1]) ** 2
                a_pt = pts[0] if d0 <= d1 else pts[1]
            ox, oy = cfg.pivot_o
            cross = (b_pt[0] - ox) * (a_pt[1] - oy) - (b_pt[1] - oy) * (a_pt[0] - ox)
            elbow: Branch = "plus" if cross >= 0.0 else "minus"
            postures[k] = _build_posture(cfg, deltas[k], a_pt, b_pt, elbow)
            prev = a_pt
            k += direction
    return postures  # type: ignore[return-value]


def _transform_full(
    design: DesignParams, cfg: MechanismConfig, task: MotionTask
) -> tuple[list[TrajectorySample], list[Posture]]:
    """kinematic_transform plus the posture at every sample (internal)."""
    prof = motion_profile(task)
    span = task.delta_i - task.delta_e
    deltas = [task.delta_e + s * span for (_t, s, _sd, _sdd) in prof]
    mid = task.n_samples // 2
    postures = _continuation_postures(design, cfg, deltas, mid)

    samples = []
    last = task.n_samples - 1
    for k, (t, _s, sd, sdd) in enumerate(prof):
        ddot = sd * span
        dddot = sdd * span
        p = postures[k]
        try:
            coeff = kinematic_coefficients(p, design, cfg)
            th_dot = coeff.dtheta_ddelta * ddot
            th_ddot = coeff.d2theta_ddelta2 * ddot * ddot + coeff.dtheta_ddelta * dddot
        except SingularPosture:
            if k in (0, last):
                # Dead point exactly at a stroke end: the quintic brings the
                # effector to rest there, so the crank rate limit is zero.
                th_dot = 0.0
                th_ddot = 0.0
            else:
                raise TransformUnsolvable(deltas[k])
        samples.append(
            TrajectorySample(
                t=t,
                delta=deltas[k],
                delta_dot=ddot,
                delta_ddot=dddot,
                theta=p.theta,
                theta_dot=th_dot,
                theta_ddot=th_ddot,
            )
        )
    return samples, postures


def kinematic_transform(
    design: DesignParams, cfg: MechanismConfig, task: MotionTask
) -> list[TrajectorySample]:
    """Map the effector stroke onto the crank: full state at every sample.

    Samples are uniform in time over the forward stroke (delta_e to
    delta_i); the mid-stroke sample is the continuation seed on the
    configured branch, and both halves are walked outward with nearest-A
    branch tracking.  Crank rates come from the chain rule:
    theta_dot = (dtheta/ddelta) delta_dot,
    theta_ddot = (d2theta/ddelta2) delta_dot^2 + (dtheta/ddelta) delta_ddot.

    Raises SeedUnsolvable if the mid-stroke pose does not assemble and
    TransformUnsolvable (with the failing delta) if continuation loses
    assembly partway.
    """
    samples, _postures = _transform_full(design, cfg, task)
    return samples


def validate_baseline(cfg: MechanismConfig, task: MotionTask) -> list[Posture]:
    """Check the baseline design over the full stroke; return its postures.

    The baseline must assemble at every one of n_samples poses spanning the
    stroke (solved by continuation from delta_mid on the configured branch)
    and its crank angle must be strictly monotonic in delta.

    Raises BaselineInfeasible (naming the first failing delta) or
    BaselineDefective.
    """
    lo = min(task.delta_i, task.delta_e)
    hi = max(task.delta_i, task.delta_e)
    n = task.n_samples
    deltas = [lo + (hi - lo) * k / (n - 1) for k in range(n)]
    mid = n // 2
    try:
        postures = _continuation_postures(cfg.baseline, cfg, deltas, mid)
    except SeedUnsolvable as exc:
        raise BaselineInfeasible(task.delta_mid, "baseline seed pose unsolvable") from exc
    except TransformUnsolvable as exc:
        raise BaselineInfeasible(exc.delta) from exc

    thetas = [p.theta for p in postures]
    diffs = [thetas[k + 1] - thetas[k] for k in range(n - 1)]
    if any(d == 0.0 for d in diffs) or not (all(d > 0.0 for d in diffs) or all(d < 0.0 for d in diffs)):
        raise BaselineDefective(
            "baseline crank angle is not strictly monotonic over the stroke"
        )
    return postures
