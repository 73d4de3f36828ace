"""Non-contrastive sentence-embedding training with EMA target networks."""

from .architectures import (
    Model,
    ProjectorParams,
    TargetState,
    build_model,
    ema_update,
    embed_for_eval,
    forward_pair,
)
from .encoder import EncoderParams, TokenBatch, Vocab, build_vocab, tokenize
from .evaluation import EvalResult, LabeledPair, collapse_report, sts_eval
from .numerics import SpectrumReport, effective_rank, spearman
from .objectives import (
    CorInfoMaxState,
    LossOutput,
    ObjectiveConfig,
    barlow_twins_loss,
    byol_loss,
    corinfomax_loss,
    vicreg_loss,
)
from .training import TrainConfig, TrainReport, train

__version__ = "0.1.0"

__all__ = [
    "Model", "ProjectorParams", "TargetState", "build_model", "ema_update",
    "embed_for_eval", "forward_pair",
    "EncoderParams", "TokenBatch", "Vocab", "build_vocab", "tokenize",
    "EvalResult", "LabeledPair", "collapse_report", "sts_eval",
    "SpectrumReport", "effective_rank", "spearman",
    "CorInfoMaxState", "LossOutput", "ObjectiveConfig",
    "barlow_twins_loss", "byol_loss", "corinfomax_loss", "vicreg_loss",
    "TrainConfig", "TrainReport", "train",
]
