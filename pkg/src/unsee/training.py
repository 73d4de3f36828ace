"""Adam optimizer and the seeded training loop.

The loop is deterministic given (config, corpus, dev): corpus shuffling and
the two dropout views draw from named, step-indexed random streams, and
parameters update in sorted-name order.
"""

import os
from dataclasses import dataclass, field

import numpy as np

from .architectures import Model, backward_pair, build_model, ema_update, forward_pair
from .checkpoint import save_checkpoint
from .encoder import build_vocab, save_vocab, tokenize_batch
from .errors import NonFiniteError, TrainingAbort, UnseeError
from .evaluation import sts_eval
from .objectives import (
    CorInfoMaxState,
    ObjectiveConfig,
    OBJECTIVES,
    barlow_twins_loss,
    byol_loss,
    corinfomax_loss,
    vicreg_loss,
)
from .rng import stream

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8

METRICS_HEADER = "step,loss,loss_inv,loss_var,loss_cov,spearman,effective_rank,mean_dim_std"


@dataclass
class TrainConfig:
    variant: str = "single_projection"
    objective: str = "barlow_twins"
    batch_size: int = 32
    learning_rate: float = 1e-4
    max_len: int = 64
    epochs: int = 1
    decay: float = 0.999
    mlp_depth: int = 2
    eval_count: int = 20
    seed: int = 0
    dim: int = 32
    dropout: float = 0.1
    min_count: int = 1
    grad_clip: float | None = None
    feed_forward: bool = True
    objective_config: ObjectiveConfig = field(default_factory=ObjectiveConfig)

    def __post_init__(self):
        if self.batch_size < 2:
            raise ValueError("batch_size must be >= 2")
        if self.eval_count < 1:
            raise ValueError("eval_count must be >= 1")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be > 0")
        if self.objective not in OBJECTIVES:
            raise ValueError(f"unknown objective {self.objective!r}")


@dataclass
class AdamState:
    m: dict[str, np.ndarray]
    v: dict[str, np.ndarray]
    step: int = 0
    beta1: float = ADAM_BETA1
    beta2: float = ADAM_BETA2
    eps: float = ADAM_EPS

    @classmethod
    def fresh(cls, params: dict[str, np.ndarray]) -> "AdamState":
        return cls(
            {k: np.zeros_like(p) for k, p in params.items()},
            {k: np.zeros_like(p) for k, p in params.items()},
        )


def adam_step(params: dict[str, np.ndarray], grads: dict[str, np.ndarray],
              state: AdamState, lr: float) -> None:
    """In-place bias-corrected Adam update in sorted parameter order."""
    state.step += 1
    t = state.step
    bc1 = 1.0 - state.beta1**t
    bc2 = 1.0 - state.beta2**t
    for name in sorted(params):
        g = grads[name]
        if not np.all(np.isfinite(g)):
            raise NonFiniteError(f"non-finite gradient for tensor {name!r}")
        state.m[name] = state.beta1 * state.m[name] + (1.0 - state.beta1) * g
        state.v[name] = state.beta2 * state.v[name] + (1.0 - state.beta2) * g * g
        m_hat = state.m[name] / bc1
        v_hat = state.v[name] / bc2
        params[name] -= lr * m_hat / (np.sqrt(v_hat) + state.eps)


def clip_global_norm(grads: dict[str, np.ndarray], max_norm: float) -> None:
    total = np.sqrt(sum(float((g * g).sum()) for g in grads.values()))
    if total > max_norm:
        scale = max_norm / total
        for g in grads.values():
            g *= scale


@dataclass
class MetricsRecord:
    step: int
    loss: float
    loss_inv: float | None
    loss_var: float | None
    loss_cov: float | None
    spearman: float
    effective_rank: float
    mean_dim_std: float


@dataclass
class TrainReport:
    rows: list[MetricsRecord]
    best_step: int
    best_spearman: float
    checkpoint_path: str | None
    final_model: Model | None = None
    vocab: object | None = None


def _split_components(objective: str, components: dict[str, float]):
    if objective == "barlow_twins":
        return components["diagonal"], None, components["off_diagonal"]
    if objective == "vicreg":
        return components["invariance"], components["variance"], components["covariance"]
    if objective == "corinfomax":
        return components["invariance"], None, components["covariance"]
    return components["alignment"], None, None


def _apply_objective(cfg: TrainConfig, view_a, view_b, obj_state):
    oc = cfg.objective_config
    if cfg.objective == "barlow_twins":
        return barlow_twins_loss(view_a, view_b, oc.bt_lambda, oc.bt_eps), obj_state
    if cfg.objective == "vicreg":
        out = vicreg_loss(
            view_a, view_b,
            oc.vicreg_w_inv, oc.vicreg_w_var, oc.vicreg_w_cov,
            oc.vicreg_gamma, oc.vicreg_eps,
        )
        return out, obj_state
    if cfg.objective == "corinfomax":
        return corinfomax_loss(
            view_a, view_b, obj_state,
            oc.cim_w_inv, oc.cim_w_cov, oc.cim_la_r, oc.cim_la_mu,
            oc.cim_r_eps_weight,
        )
    if oc.byol_symmetrize:
        fwd = byol_loss(view_a, view_b)
        rev = byol_loss(view_b, view_a)
        out = type(fwd)(
            (fwd.loss + rev.loss) / 2.0,
            (fwd.grad_a + rev.grad_b) / 2.0,
            (fwd.grad_b + rev.grad_a) / 2.0,
            {"alignment": (fwd.loss + rev.loss) / 2.0},
        )
        return out, obj_state
    return byol_loss(view_a, view_b), obj_state


def _format_value(v) -> str:
    if v is None:
        return ""
    return repr(float(v))


def write_metrics_csv(rows, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(METRICS_HEADER + "\n")
        for r in rows:
            fh.write(
                ",".join(
                    [
                        str(r.step),
                        _format_value(r.loss),
                        _format_value(r.loss_inv),
                        _format_value(r.loss_var),
                        _format_value(r.loss_cov),
                        _format_value(r.spearman),
                        _format_value(r.effective_rank),
                        _format_value(r.mean_dim_std),
                    ]
                )
                + "\n"
            )


def train(config: TrainConfig, corpus, dev_pairs, out_dir=None) -> TrainReport:
    """Run the full training loop; returns the per-evaluation report.

    When out_dir is given, the best model (by dev Spearman) is checkpointed
    to out_dir/best.ckpt with its vocabulary alongside.
    """
    sentences = [s for s in corpus if s.strip()]
    if len(sentences) < config.batch_size:
        raise UnseeError(
            f"corpus has {len(sentences)} sentences, need >= batch_size "
            f"({config.batch_size})"
        )
    dev_pairs = list(dev_pairs)
    if not dev_pairs:
        raise UnseeError("dev set is empty")

    vocab = build_vocab(sentences, config.min_count)
    init_rng = stream(config.seed, "init")
    model = build_model(
        config.variant, len(vocab), config.dim, config.mlp_depth, init_rng,
        dropout=config.dropout, max_len=config.max_len, decay=config.decay,
        feed_forward=config.feed_forward,
    )
    obj_state = None
    if config.objective == "corinfomax":
        obj_state = CorInfoMaxState.fresh(config.dim, config.objective_config.cim_r_ini)

    tokenized = tokenize_batch(sentences, vocab, config.max_len)
    params = model.trainable()
    adam = AdamState.fresh(params)

    steps_per_epoch = len(sentences) // config.batch_size
    total_steps = steps_per_epoch * config.epochs
    if total_steps < 1:
        raise UnseeError("no full batch fits in an epoch")
    eval_steps = sorted({max(1, (i * total_steps) // config.eval_count)
                         for i in range(1, config.eval_count + 1)})

    rows: list[MetricsRecord] = []
    best_spearman = -np.inf
    best_step = -1
    ckpt_path = None
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        ckpt_path = os.path.join(out_dir, "best.ckpt")
        save_vocab(vocab, os.path.join(out_dir, "vocab.txt"))

    step = 0
    for epoch in range(config.epochs):
        order = stream(config.seed, "shuffle", epoch).permutation(len(sentences))
        for batch_idx in range(steps_per_epoch):
            step += 1
            sel = order[batch_idx * config.batch_size : (batch_idx + 1) * config.batch_size]
            batch = type(tokenized)(tokenized.ids[sel], tokenized.mask[sel])
            rng_a = stream(config.seed, "dropout-view-1", step)
            rng_b = stream(config.seed, "dropout-view-2", step)

            view_a, view_b, ctx = forward_pair(model, batch, rng_a, rng_b)
            out, obj_state = _apply_objective(config, view_a, view_b, obj_state)
            if not np.isfinite(out.loss):
                raise TrainingAbort(step, f"non-finite loss at step {step}")

            grads = backward_pair(model, ctx, out.grad_a, out.grad_b)
            if config.grad_clip is not None:
                clip_global_norm(grads, config.grad_clip)
            adam_step(params, grads, adam, config.learning_rate)
            if model.target is not None:
                model.target = ema_update(model.encoder, model.target)

            if step in eval_steps:
                row = _evaluate(config, model, dev_pairs, vocab, step, out)
                rows.append(row)
                if row.spearman > best_spearman:
                    best_spearman = row.spearman
                    best_step = step
                    if ckpt_path is not None:
                        save_checkpoint(
                            model, obj_state, ckpt_path, vocab,
                            extra_meta={"best_step": step},
                        )

    return TrainReport(rows, best_step, float(best_spearman), ckpt_path, model, vocab)


def _evaluate(config, model, dev_pairs, vocab, step, loss_out) -> MetricsRecord:
    from .errors import UndefinedCorrelationError

    try:
        result = sts_eval(model, dev_pairs, vocab)
        rho = result.spearman
        diag = result.diagnostics
    except UndefinedCorrelationError:
        # fully tied cosines: a collapsed model carries no ranking signal
        rho = 0.0
        from .encoder import tokenize_batch as tb
        from .architectures import embed_for_eval
        from .numerics import effective_rank as erank

        emb = embed_for_eval(
            model, tb([p.sentence_a for p in dev_pairs]
                      + [p.sentence_b for p in dev_pairs], vocab, config.max_len)
        )
        diag = erank(emb)
    inv, var, cov = _split_components(config.objective, loss_out.components)
    return MetricsRecord(
        step, loss_out.loss, inv, var, cov, rho,
        diag.effective_rank, diag.mean_dim_std,
    )
