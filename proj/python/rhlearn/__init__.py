"""Receding-horizon learning: signal-model estimation plus a
model-independent receding-horizon controller, with a closed-loop
simulation harness."""

from ._rhlearn import (  # noqa: F401
    DimensionMismatch,
    Estimator,
    EstimatorDiagnostics,
    HorizonExceeded,
    IndefiniteReducedHessian,
    InfeasibleConstraints,
    LiftingConfig,
    NumericalFailure,
    ParseError,
    PredictorMaps,
    RestorationFailed,
    RhcConfig,
    RhcSolution,
    SignalModel,
    TerminalInfeasible,
    ValidationError,
    augment_model,
    blend,
    build_predictor_maps,
    canonical_theta,
    controllability_matrix,
    exact_signal_model,
    gamma_weight,
    is_controllable,
    min_norm_least_squares,
    model_to_theta,
    numerical_rank,
    policy_step,
    restore_controllability,
    run_experiment,
    selftest,
    simulate,
    solve_eq_qp,
    solve_v1,
    solve_v2,
    solve_v3,
    theta_to_model,
)

__all__ = [name for name in dir() if not name.startswith("_")]
