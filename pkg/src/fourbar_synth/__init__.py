"""Dimensional synthesis of a four-bar press linkage for minimum RMS torque.

The package covers the full chain from geometry to search: closed-form
position kinematics with explicit branch handling, reduced-inertia inverse
dynamics over a quintic stroke, quantified static and dynamic feasibility
constraints, Gaussian-process surrogates, and a constrained
expected-improvement optimization loop.  Brute-force oracles mirror every
fast path for verification.
"""

from .constraints import (
    DynamicConstraintResult,
    StaticGapResult,
    baseline_posture,
    dynamic_constraint,
    evaluate_design,
    static_gap,
)
from .dynamics import (
    LinkInertia,
    MassModel,
    TorqueProfile,
    equivalent_inertia,
    gravity_torque,
    mass_model,
    mechanical_energy,
    torque_at_state,
    torque_profile,
)
from .gp import GpModel, KernelParams, gp_fit, gp_predict, log_marginal_likelihood
from .kinematics import (
    KinematicCoefficients,
    Posture,
    TrajectorySample,
    kinematic_coefficients,
    kinematic_transform,
    motion_profile,
    solve_fk,
    solve_ik,
    validate_baseline,
)
from .model import (
    BaselineDefective,
    BaselineInfeasible,
    Branch,
    ConstraintBundle,
    DesignParams,
    EmptyTrajectory,
    EvaluationRecord,
    MechanismConfig,
    MechanismError,
    MotionTask,
    NotAssemblable,
    OptimizerConfig,
    ParseError,
    SeedUnsolvable,
    SingularPosture,
    SingularState,
    TransformUnsolvable,
    ValidationError,
    config_to_dict,
    load_config,
    load_config_dict,
)
from .optimizer import (
    BoStep,
    OptimizationTrace,
    SurrogateSet,
    bo_minimize,
    constrained_ei,
    fit_surrogates,
    latin_hypercube,
    propose_next,
    run_optimization,
)
from .oracle import brute_ik, brute_static_gap, brute_theta_sweep, grid_sweep

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # errors
    "MechanismError",
    "ParseError",
    "ValidationError",
    "BaselineInfeasible",
    "BaselineDefective",
    "NotAssemblable",
    "SingularPosture",
    "SeedUnsolvable",
    "TransformUnsolvable",
    "SingularState",
    "EmptyTrajectory",
    # core types
    "Branch",
    "DesignParams",
    "MechanismConfig",
    "MotionTask",
    "OptimizerConfig",
    "ConstraintBundle",
    "EvaluationRecord",
    "load_config",
    "load_config_dict",
    "config_to_dict",
    # kinematics
    "Posture",
    "KinematicCoefficients",
    "TrajectorySample",
    "solve_ik",
    "solve_fk",
    "kinematic_coefficients",
    "motion_profile",
    "kinematic_transform",
    "validate_baseline",
    # dynamics
    "LinkInertia",
    "MassModel",
    "TorqueProfile",
    "mass_model",
    "equivalent_inertia",
    "gravity_torque",
    "mechanical_energy",
    "torque_at_state",
    "torque_profile",
    # constraints
    "StaticGapResult",
    "DynamicConstraintResult",
    "baseline_posture",
    "static_gap",
    "dynamic_constraint",
    "evaluate_design",
    # surrogate
    "GpModel",
    "KernelParams",
    "gp_fit",
    "gp_predict",
    "log_marginal_likelihood",
    # optimizer
    "BoStep",
    "SurrogateSet",
    "OptimizationTrace",
    "latin_hypercube",
    "constrained_ei",
    "fit_surrogates",
    "propose_next",
    "bo_minimize",
    "run_optimization",
    # oracles
    "brute_ik",
    "brute_static_gap",
    "brute_theta_sweep",
    "grid_sweep",
]
