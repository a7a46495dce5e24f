"""Norm audits, generalization bounds and empirical checks for recurrent networks."""

from .audit import NormProfile, audit, check_assumptions, display, gate_stats
from .bounds import (
    BoundQuery,
    BoundReport,
    comparison_bounds,
    conv_bound,
    covering_log,
    dudley_erc,
    lstm_bound,
    matrix_covering_log,
    mgu_bound,
    pacbayes_bound,
    refined_21_bound,
    regime_classify,
    vanilla_erc_bound,
    vanilla_generalization_bound,
)
from .cells import ActivationSpec, ModelWeights, Trajectory, forward
from .data import SequenceDataset, gen_synthetic
from .errors import FormatError, InvalidInputError, TrainingError
from .fileio import load_dataset, load_model, save_dataset, save_model
from .linalg import (
    frobenius_norm,
    geometric_ratio,
    scale_spectral,
    spectral_norm,
    stable_rank,
    two_one_norm,
)
from .margin import empirical_ramp_risk, margin, ramp_loss, zero_one_error
from .train import TrainConfig, train_vanilla
from .verify import (
    ErcEstimate,
    TrialReport,
    estimate_erc_mc,
    verify_conv_orthogonality,
    verify_hidden_norm,
    verify_margin_lipschitz,
    verify_output_lipschitz,
)

__all__ = [name for name in dir() if not name.startswith("_")]
