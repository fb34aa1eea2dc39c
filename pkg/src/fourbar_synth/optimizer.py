"""Constrained Bayesian optimization of the bar lengths.

The loop is the classic fit/propose/evaluate cycle: Latin hypercube
initialization, one GP per constraint plus one for the log objective, and
an expected-improvement acquisition weighted by the probability that every
constraint is satisfied.  Designs whose trajectory never ran simply lack
the corresponding observation; the constraint GPs are trained on whatever
is available.

Everything is deterministic for a given seed: the LHS, the GP multistarts,
the acquisition probes and the pattern-descent refinements all derive their
RNG streams from ``OptimizerConfig.seed`` and the iteration index.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Callable

import numpy as np
from scipy.special import ndtr

from .constraints import evaluate_design
from .gp import GpModel, gp_fit, gp_predict
from .kinematics import validate_baseline
from .model import (
    DesignParams,
    EvaluationRecord,
    MechanismConfig,
    MotionTask,
    OptimizerConfig,
)

__all__ = [
    "BoStep",
    "SurrogateSet",
    "OptimizationTrace",
    "latin_hypercube",
    "constrained_ei",
    "fit_surrogates",
    "propose_next",
    "bo_minimize",
    "run_optimization",
]

_LOG_FLOOR = 1e-300  # guards log() of a zero-torque objective


@dataclass(frozen=True)
class BoStep:
    """One evaluated point in the generic loop.

    ``objective`` is the value fed to the objective GP (already transformed
    by the caller), or None when the point yielded no objective.
    ``constraints`` maps constraint names to observations; None marks a
    missing observation, which is excluded from that constraint's GP.
    """

    x: tuple[float, ...]
    objective: float | None
    constraints: dict[str, float | None]
    payload: Any = None


@dataclass(frozen=True)
class SurrogateSet:
    """Models fitted to the trace so far; f_best in objective-GP units.

    ``constraint_names`` parallels ``constraints``; a constraint with fewer
    than two observations has no model and is absent from both.
    """

    objective: GpModel | None
    constraints: tuple[GpModel, ...]
    constraint_names: tuple[str, ...]
    f_best: float | None


@dataclass(frozen=True)
class OptimizationTrace:
    """Full history of a run: one record per evaluation, in order.

    ``acquisition`` holds the acquisition value of each proposed point
    (None during initialization).  ``no_feasible_found`` is a flag, not an
    error: a budget can legitimately end with nothing feasible.
    """

    records: tuple[EvaluationRecord, ...]
    acquisition: tuple[float | None, ...]
    best_feasible: tuple[DesignParams, float] | None
    no_feasible_found: bool


def latin_hypercube(n: int, bounds: tuple[tuple[float, float], ...], seed: int) -> np.ndarray:
    """Seeded Latin hypercube: one point per equal-width stratum per axis."""
    if n < 1:
        raise ValueError("latin_hypercube needs n >= 1")
    rng = np.random.default_rng(seed)
    d = len(bounds)
    out = np.empty((n, d))
    for j, (lo, hi) in enumerate(bounds):
        strata = rng.permutation(n)
        offsets = rng.random(n)
        out[:, j] = lo + (strata + offsets) / n * (hi - lo)
    return out


def constrained_ei(
    x,
    objective_model: GpModel | None,
    constraint_models,
    f_best: float | None,
):
    """Expected improvement times the probability all constraints are met.

    Constraints are feasible at or below zero, so each model contributes
    Phi(-mu/sigma); a zero-variance prediction contributes a hard 0/1.  For
    minimization EI(x) = sigma phi(z) + (f_best - mu) Phi(z) with
    z = (f_best - mu)/sigma, degrading to max(0, f_best - mu) at zero
    variance.  Without an objective observation yet (no f_best), the
    acquisition is the feasibility probability alone.

    Accepts a single point (returns float) or an (m, d) batch.
    """
    q = np.asarray(x, dtype=float)
    single = q.ndim == 1
    if single:
        q = q[None, :]
    m = q.shape[0]

    pof = np.ones(m)
    for cm in constraint_models:
        mu, var = gp_predict(cm, q)
        mu = np.atleast_1d(mu)
        sd = np.sqrt(np.atleast_1d(var))
        ok = sd > 0.0
        factor = np.where(ok, ndtr(-mu / np.where(ok, sd, 1.0)), (mu <= 0.0).astype(float))
        pof *= factor

    if objective_model is None or f_best is None:
        acq = pof
    else:
        mu, var = gp_predict(objective_model, q)
        mu = np.atleast_1d(mu)
        sd = np.sqrt(np.atleast_1d(var))
        imp = f_best - mu
        ok = sd > 0.0
        z = imp / np.where(ok, sd, 1.0)
        pdf = np.exp(-0.5 * z * z) / math.sqrt(2.0 * math.pi)
        ei = np.where(ok, sd * pdf + imp * ndtr(z), np.maximum(imp, 0.0))
        acq = ei * pof

    return float(acq[0]) if single else acq


def _proposal_rng_seed(opt_cfg: OptimizerConfig, n_evaluated: int) -> int:
    return (opt_cfg.seed * 1_000_003 + n_evaluated * 7_919) % (2**63)


def propose_next(
    evaluated: list[tuple[float, ...]],
    models: SurrogateSet,
    opt_cfg: OptimizerConfig,
) -> tuple[tuple[float, ...], float]:
    """Maximize the acquisition inside the box; returns (point, value).

    Seeded uniform probes followed by derivative-free pattern descent from
    the best probes (axis moves, step halving down to 1e-4 of the box
    width).  Deterministic for a given seed and trace length.  Never
    returns an already-evaluated point: exact collisions are nudged by a
    1e-6 box-width perturbation.
    """
    bounds = opt_cfg.bounds
    lo = np.array([b[0] for b in bounds])
    hi = np.array([b[1] for b in bounds])
    widths = hi - lo
    d = len(bounds)

    def acq(points: np.ndarray) -> np.ndarray:
        return np.atleast_1d(
            constrained_ei(points, models.objective, models.constraints, models.f_best)
        )

    rng = np.random.default_rng(_proposal_rng_seed(opt_cfg, len(evaluated)))
    probes = lo + rng.random((opt_cfg.n_acq_samples, d)) * widths
    vals = acq(probes)
    order = np.argsort(-vals, kind="stable")[: opt_cfg.n_acq_starts]

    # all starts descend in lockstep so each sweep costs one batched
    # acquisition call; per-start trajectories are still independent
    xs = probes[order].copy()
    vs = vals[order].astype(float).copy()
    fracs = np.full(len(order), 0.1)
    guard = 0
    while True:
        active = np.nonzero(fracs >= 1e-4)[0]
        if active.size == 0 or guard >= 150:
            break
        guard += 1
        na = active.size
        cand = np.tile(xs[active][:, None, :], (1, 2 * d, 1))
        for j in range(d):
            cand[:, 2 * j, j] = np.minimum(hi[j], xs[active, j] + fracs[active] * widths[j])
            cand[:, 2 * j + 1, j] = np.maximum(lo[j], xs[active, j] - fracs[active] * widths[j])
        cv = acq(cand.reshape(-1, d)).reshape(na, 2 * d)
        best_j = np.argmax(cv, axis=1)
        best_cv = cv[np.arange(na), best_j]
        # a gain only counts if it is visible at the scale of the current
        # leader; otherwise starts stranded where the acquisition is
        # near-zero crawl by huge relative factors without ever mattering
        thresh = 1e-5 * max(float(vs.max()), 1e-300)
        improved = best_cv > vs[active] + thresh
        moved = active[improved]
        xs[moved] = cand[improved, best_j[improved]]
        vs[moved] = best_cv[improved]
        # expand on success so a start marching down a gentle slope covers
        # it in logarithmic rather than linear sweeps; shrink on failure
        fracs[moved] = np.minimum(0.1, fracs[moved] * 2.0)
        fracs[active[~improved]] *= 0.5

    winner = int(np.argmax(vs))
    best_x = xs[winner].copy()
    best_v = float(vs[winner])

    # never re-propose an evaluated point; nudge by 1e-6 of the box width
    def collides(pt: np.ndarray) -> bool:
        for e in evaluated:
            if all(abs(pt[j] - e[j]) <= 1e-12 * widths[j] for j in range(d)):
                return True
        return False

    scale = 1e-6
    guard = 0
    while collides(best_x) and guard < 60:
        guard += 1
        shift = scale * widths
        cand = best_x + shift
        over = cand > hi
        cand[over] = best_x[over] - shift[over]
        best_x = np.clip(cand, lo, hi)
        scale *= 2.0
    return tuple(float(v) for v in best_x), best_v


def fit_surrogates(steps: list[BoStep], opt_cfg: OptimizerConfig) -> SurrogateSet:
    """Fit the objective and per-constraint GPs to the evaluations so far.

    The objective model needs at least two observed objectives; below that
    the set carries no f_best and the acquisition degrades to pure
    feasibility search.  Each constraint model trains only on steps where
    that constraint was observed, and is skipped below two observations.
    """
    bounds = opt_cfg.bounds
    iteration = len(steps)

    def model_seed(idx: int) -> int:
        return (opt_cfg.seed * 999_983 + iteration * 101 + idx) % (2**63)

    obj_pts = [(s.x, s.objective) for s in steps if s.objective is not None]
    objective_model = None
    f_best = None
    if len(obj_pts) >= 2:
        objective_model = gp_fit(obj_pts, bounds, seed=model_seed(0))
        # improvement is measured against the best *feasible* observation;
        # infeasible points may carry better objectives but do not count
        feasible_objs = [
            s.objective
            for s in steps
            if s.objective is not None
            and all(v is not None and v <= 0.0 for v in s.constraints.values())
        ]
        if feasible_objs:
            f_best = min(feasible_objs)

    constraint_models = []
    kept_names = []
    for k, name in enumerate(steps[0].constraints.keys()):
        pts = [(s.x, s.constraints[name]) for s in steps if s.constraints[name] is not None]
        if len(pts) >= 2:
            constraint_models.append(gp_fit(pts, bounds, seed=model_seed(k + 1)))
            kept_names.append(name)
    return SurrogateSet(objective_model, tuple(constraint_models), tuple(kept_names), f_best)


def bo_minimize(
    evaluate: Callable[[tuple[float, ...]], BoStep],
    opt_cfg: OptimizerConfig,
) -> tuple[list[BoStep], list[float | None]]:
    """Generic constrained-BO loop over a black-box evaluator.

    Runs exactly n_max evaluations: n_init from a Latin hypercube, the rest
    proposed by the constrained-EI acquisition.  Returns the steps and the
    acquisition value behind each one (None during initialization).
    """
    bounds = opt_cfg.bounds
    steps: list[BoStep] = []
    acq_values: list[float | None] = []

    for row in latin_hypercube(opt_cfg.n_init, bounds, opt_cfg.seed):
        steps.append(evaluate(tuple(float(v) for v in row)))
        acq_values.append(None)

    while len(steps) < opt_cfg.n_max:
        models = fit_surrogates(steps, opt_cfg)
        x_next, acq = propose_next([s.x for s in steps], models, opt_cfg)
        steps.append(evaluate(x_next))
        acq_values.append(acq)
    return steps, acq_values


def run_optimization(
    cfg: MechanismConfig, task: MotionTask, opt_cfg: OptimizerConfig
) -> OptimizationTrace:
    """Optimize the three bar lengths for minimum RMS torque.

    Validates the baseline once, then runs the constrained-BO loop over
    ``evaluate_design``.  The objective GP models log(t_rms); constraint
    GPs model the two static gaps and the crank-reversal range, each
    trained only on designs where the quantity was observed.
    """
    validate_baseline(cfg, task)

    def evaluate(x: tuple[float, ...]) -> BoStep:
        record = evaluate_design(DesignParams(*x), cfg, task)
        objective = None
        if record.objective is not None:
            objective = math.log(max(record.objective, _LOG_FLOOR))
        return BoStep(
            x=x,
            objective=objective,
            constraints={
                "c_static_i": record.constraints.c_static_i,
                "c_static_e": record.constraints.c_static_e,
                "c_dyn": record.constraints.c_dyn,
            },
            payload=record,
        )

    steps, acq_values = bo_minimize(evaluate, opt_cfg)

    records = tuple(s.payload for s in steps)
    best: tuple[DesignParams, float] | None = None
    for rec in records:
        if rec.constraints.feasible and rec.objective is not None:
            if best is None or rec.objective < best[1]:
                best = (rec.design, rec.objective)
    return OptimizationTrace(
        records=records,
        acquisition=tuple(acq_values),
        best_feasible=best,
        no_feasible_found=best is None,
    )
