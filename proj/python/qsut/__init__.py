"""Adaptive sequential hypothesis tests for families of qubit states."""

from ._qsut import (
    RESULT_HEADER,
    ExperimentConfig,
    FamilyConfig,
    HypothesisSet,
    QsutError,
    block_level,
    born_probabilities,
    calibrate_lht_lambda,
    eprocess_expectation,
    grid_angles,
    helstrom_bound,
    helstrom_povm,
    optimize_lambda,
    optimize_theta,
    run_single,
    run_sweep,
    state_from_angle,
    sweep_csv,
    tensor_power,
    variational_distribution,
    verify,
)

__all__ = [
    "RESULT_HEADER",
    "ExperimentConfig",
    "FamilyConfig",
    "HypothesisSet",
    "QsutError",
    "block_level",
    "born_probabilities",
    "calibrate_lht_lambda",
    "eprocess_expectation",
    "grid_angles",
    "helstrom_bound",
    "helstrom_povm",
    "optimize_lambda",
    "optimize_theta",
    "run_single",
    "run_sweep",
    "state_from_angle",
    "sweep_csv",
    "tensor_power",
    "variational_distribution",
    "verify",
]
