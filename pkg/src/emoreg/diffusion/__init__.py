from .sampler import ScoreFunction, reverse_solve, reverse_solve_paths
from .schedule import (
    DEFAULT_T_MIN,
    T_FLOOR,
    NoiseSchedule,
    forward_marginal,
    marginal_variance,
    mean_coefficient,
    noise_at,
    noise_integral,
    oracle_score,
    oracle_score_fn,
    sample_forward,
)
from .scorenet import ScoreNet, dsm_grad, dsm_loss, train_scorenet

__all__ = [
    "DEFAULT_T_MIN",
    "NoiseSchedule",
    "ScoreFunction",
    "ScoreNet",
    "T_FLOOR",
    "dsm_grad",
    "dsm_loss",
    "forward_marginal",
    "marginal_variance",
    "mean_coefficient",
    "noise_at",
    "noise_integral",
    "oracle_score",
    "oracle_score_fn",
    "reverse_solve",
    "reverse_solve_paths",
    "sample_forward",
    "train_scorenet",
]
