"""Model wirings: projector MLP, EMA target network, and the three
pair-forward variants (projection, online_projection, single_projection).

The projector follows the BSL recipe: affine -> batch-norm -> ReLU blocks
with a bare affine final layer. It is a training-time artifact only;
evaluation embeddings always come straight from the pooled encoder output.
"""

from dataclasses import dataclass

import numpy as np

from .encoder import (
    EncoderContext,
    EncoderParams,
    TokenBatch,
    encode_batch,
    encoder_backward,
)
from .errors import DegenerateBatchError, ShapeMismatchError

BN_EPS = 1e-5
BN_MOMENTUM = 0.1

VARIANTS = ("projection", "online_projection", "single_projection")


@dataclass
class ProjectorLayer:
    w: np.ndarray
    b: np.ndarray
    bn_gamma: np.ndarray | None
    bn_beta: np.ndarray | None
    bn_mean: np.ndarray | None
    bn_var: np.ndarray | None
    activation: bool


@dataclass
class ProjectorParams:
    layers: list[ProjectorLayer]

    @property
    def depth(self) -> int:
        return len(self.layers)

    @property
    def in_dim(self) -> int:
        return self.layers[0].w.shape[0]

    @property
    def out_dim(self) -> int:
        return self.layers[-1].w.shape[1]

    def tensors(self) -> dict[str, np.ndarray]:
        out = {}
        for i, layer in enumerate(self.layers):
            out[f"proj.{i}.w"] = layer.w
            out[f"proj.{i}.b"] = layer.b
            if layer.bn_gamma is not None:
                out[f"proj.{i}.bn_gamma"] = layer.bn_gamma
                out[f"proj.{i}.bn_beta"] = layer.bn_beta
                out[f"proj.{i}.bn_mean"] = layer.bn_mean
                out[f"proj.{i}.bn_var"] = layer.bn_var
        return out


def init_projector(dims: list[int], rng: np.random.Generator) -> ProjectorParams:
    """Projector over the dimension chain `dims`; depth = len(dims) - 1."""
    layers = []
    for i in range(len(dims) - 1):
        fan_in, fan_out = dims[i], dims[i + 1]
        w = rng.normal(0.0, 1.0, size=(fan_in, fan_out)) / np.sqrt(fan_in)
        b = np.zeros(fan_out)
        final = i == len(dims) - 2
        if final:
            layers.append(ProjectorLayer(w, b, None, None, None, None, False))
        else:
            layers.append(
                ProjectorLayer(
                    w, b, np.ones(fan_out), np.zeros(fan_out),
                    np.zeros(fan_out), np.ones(fan_out), True,
                )
            )
    return ProjectorParams(layers)


@dataclass
class LayerContext:
    x: np.ndarray  # layer input
    pre_bn: np.ndarray | None
    xhat: np.ndarray | None
    inv_std: np.ndarray | None
    post: np.ndarray  # layer output


@dataclass
class MlpContext:
    proj: ProjectorParams
    layers: list[LayerContext]


def mlp_forward(proj: ProjectorParams, z: np.ndarray, mode: str):
    """Projector forward. Train mode uses batch statistics (and updates the
    running stats with momentum); eval mode uses running statistics."""
    if z.ndim != 2 or z.shape[1] != proj.in_dim:
        raise ShapeMismatchError(
            f"projector expects input width {proj.in_dim}, got {z.shape}"
        )
    if mode == "train" and z.shape[0] < 2:
        raise DegenerateBatchError("batch-norm needs batch >= 2 in train mode")
    ctxs = []
    x = z
    for layer in proj.layers:
        pre = x @ layer.w + layer.b
        if layer.bn_gamma is not None:
            if mode == "train":
                mu = pre.mean(axis=0)
                var = pre.var(axis=0)
                layer.bn_mean[...] = (1 - BN_MOMENTUM) * layer.bn_mean + BN_MOMENTUM * mu
                layer.bn_var[...] = (1 - BN_MOMENTUM) * layer.bn_var + BN_MOMENTUM * var
            else:
                mu, var = layer.bn_mean, layer.bn_var
            inv_std = 1.0 / np.sqrt(var + BN_EPS)
            xhat = (pre - mu) * inv_std
            out = layer.bn_gamma * xhat + layer.bn_beta
        else:
            xhat = inv_std = None
            out = pre
        if layer.activation:
            out = np.maximum(out, 0.0)
        ctxs.append(LayerContext(x, pre, xhat, inv_std, out))
        x = out
    return x, MlpContext(proj, ctxs)


def mlp_backward(ctx: MlpContext, upstream: np.ndarray):
    """Reverse of a train-mode mlp_forward. Returns (param grads, input grad).

    Batch-norm backward differentiates through the batch mean and variance
    (running stats are treated as buffers, not parameters).
    """
    grads = {}
    d_out = upstream
    for i in range(len(ctx.proj.layers) - 1, -1, -1):
        layer = ctx.proj.layers[i]
        lctx = ctx.layers[i]
        if layer.activation:
            d_out = d_out * (lctx.post > 0.0)
        if layer.bn_gamma is not None:
            b = d_out.shape[0]
            grads[f"proj.{i}.bn_gamma"] = (d_out * lctx.xhat).sum(axis=0)
            grads[f"proj.{i}.bn_beta"] = d_out.sum(axis=0)
            d_xhat = d_out * layer.bn_gamma
            d_pre = (
                d_xhat
                - d_xhat.mean(axis=0)
                - lctx.xhat * (d_xhat * lctx.xhat).mean(axis=0)
            ) * lctx.inv_std
        else:
            d_pre = d_out
        grads[f"proj.{i}.w"] = lctx.x.T @ d_pre
        grads[f"proj.{i}.b"] = d_pre.sum(axis=0)
        d_out = d_pre @ layer.w.T
    return grads, d_out


@dataclass
class TargetState:
    encoder: EncoderParams
    decay: float

    @classmethod
    def from_online(cls, online: EncoderParams, decay: float) -> "TargetState":
        return cls(online.copy(), decay)


def ema_update(online: EncoderParams, target: TargetState) -> TargetState:
    """t <- decay * t + (1 - decay) * o for every parameter tensor."""
    online_t = online.tensors()
    target_t = target.encoder.tensors()
    if set(online_t) != set(target_t) or any(
        online_t[k].shape != target_t[k].shape for k in online_t
    ):
        raise ShapeMismatchError("online/target parameter layouts differ")
    d = target.decay
    new = target.encoder.copy()
    new_t = new.tensors()
    for k in online_t:
        new_t[k][...] = d * target_t[k] + (1.0 - d) * online_t[k]
    return TargetState(new, target.decay)


@dataclass
class Model:
    variant: str
    encoder: EncoderParams
    projector: ProjectorParams
    target: TargetState | None

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}")
        if (self.target is None) != (self.variant == "projection"):
            raise ValueError("target state present iff variant uses a target network")

    def tensors(self) -> dict[str, np.ndarray]:
        out = {f"enc.{k}": v for k, v in self.encoder.tensors().items()}
        out.update(self.projector.tensors())
        if self.target is not None:
            out.update({f"target.{k}": v for k, v in self.target.encoder.tensors().items()})
        return out

    def trainable(self) -> dict[str, np.ndarray]:
        out = {f"enc.{k}": v for k, v in self.encoder.tensors().items()}
        for name, t in self.projector.tensors().items():
            if ".bn_mean" not in name and ".bn_var" not in name:
                out[name] = t
        return out


def build_model(
    variant: str,
    vocab_size: int,
    dim: int,
    mlp_depth: int,
    rng: np.random.Generator,
    dropout: float = 0.1,
    max_len: int = 64,
    decay: float = 0.999,
    feed_forward: bool = True,
) -> Model:
    from .encoder import init_encoder

    enc = init_encoder(
        vocab_size, dim, rng, dropout=dropout, max_len=max_len,
        feed_forward=feed_forward,
    )
    proj = init_projector([dim] * (mlp_depth + 1), rng)
    target = None if variant == "projection" else TargetState.from_online(enc, decay)
    return Model(variant, enc, proj, target)


@dataclass
class PairContext:
    variant: str
    enc_a: EncoderContext
    enc_b: EncoderContext
    mlp_a: MlpContext
    mlp_b: MlpContext | None  # None when view_b skips the projector


def forward_pair(model: Model, batch: TokenBatch, rng_a, rng_b, mode: str = "train"):
    """Two-view forward per the model's wiring. Train-only; the two rng
    streams drive the independent dropout draws of the two views."""
    if mode != "train":
        raise ValueError("forward_pair is train-only; use embed_for_eval")
    pooled_a, ctx_ea = encode_batch(model.encoder, batch, "train", rng_a)
    view_a, ctx_ma = mlp_forward(model.projector, pooled_a, "train")

    if model.variant == "projection":
        pooled_b, ctx_eb = encode_batch(model.encoder, batch, "train", rng_b)
        view_b, ctx_mb = mlp_forward(model.projector, pooled_b, "train")
    else:
        pooled_b, ctx_eb = encode_batch(model.target.encoder, batch, "train", rng_b)
        if model.variant == "online_projection":
            view_b, ctx_mb = mlp_forward(model.projector, pooled_b, "train")
        else:  # single_projection: target embeddings bypass the projector
            view_b, ctx_mb = pooled_b, None
    return view_a, view_b, PairContext(model.variant, ctx_ea, ctx_eb, ctx_ma, ctx_mb)


def backward_pair(model: Model, ctx: PairContext, grad_a: np.ndarray,
                  grad_b: np.ndarray) -> dict[str, np.ndarray]:
    """Route view gradients back to trainable parameters.

    Stop-gradient rules: the target encoder never receives gradients; in
    online_projection the shared projector is trained by both views.
    """
    grads: dict[str, np.ndarray] = {}

    def add(update: dict[str, np.ndarray]):
        for k, v in update.items():
            if k in grads:
                grads[k] = grads[k] + v
            else:
                grads[k] = v

    mg_a, d_pooled_a = mlp_backward(ctx.mlp_a, grad_a)
    add(mg_a)
    add({f"enc.{k}": v for k, v in encoder_backward(ctx.enc_a, d_pooled_a).items()})

    if ctx.variant == "projection":
        mg_b, d_pooled_b = mlp_backward(ctx.mlp_b, grad_b)
        add(mg_b)
        add({f"enc.{k}": v for k, v in encoder_backward(ctx.enc_b, d_pooled_b).items()})
    elif ctx.variant == "online_projection":
        mg_b, _ = mlp_backward(ctx.mlp_b, grad_b)  # stop-grad below the MLP
        add(mg_b)
    # single_projection: grad_b stops entirely at the target branch

    for name, tensor in model.trainable().items():
        if name not in grads:
            grads[name] = np.zeros_like(tensor)
    return grads


def embed_for_eval(model: Model, batch: TokenBatch) -> np.ndarray:
    """Deterministic evaluation embeddings: online encoder, no dropout,
    projector bypassed."""
    pooled, _ = encode_batch(model.encoder, batch, "eval")
    return pooled
