"""Finite-difference verification of every analytic gradient in the package.

Used both by the test suite and by the `unsee gradcheck` command. All
checks run on small random instances (B <= 8, d <= 8) where central
differences at h=1e-5 are trustworthy in float64.
"""

import numpy as np

from .architectures import init_projector, mlp_backward, mlp_forward
from .encoder import TokenBatch, encode_batch, encoder_backward, init_encoder
from .numerics import finite_diff_grad
from .objectives import (
    CorInfoMaxState,
    barlow_twins_loss,
    byol_loss,
    corinfomax_loss,
    vicreg_loss,
)
from .rng import stream

H = 1e-5
TOLERANCE = 1e-4


def rel_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    # the 1e-6 floor absorbs central-difference cancellation noise (~1e-11)
    # on tensors whose true gradient is exactly zero
    scale = max(np.abs(analytic).max(initial=0.0), np.abs(numeric).max(initial=0.0), 1e-6)
    return float(np.abs(analytic - numeric).max(initial=0.0) / scale)


def _objective_closure(name: str, d: int):
    if name == "barlow_twins":
        return lambda za, zb: barlow_twins_loss(za, zb)
    if name == "vicreg":
        return lambda za, zb: vicreg_loss(za, zb)
    if name == "corinfomax":
        def run(za, zb):
            # fresh state each call: finite differences hold prior state fixed
            out, _ = corinfomax_loss(za, zb, CorInfoMaxState.fresh(d))
            return out
        return run
    if name == "byol":
        return lambda za, zb: byol_loss(za, zb)
    raise ValueError(f"unknown objective {name!r}")


def check_objective(name: str, seed: int, b: int, d: int, perturb: float = 0.0) -> float:
    """Max relative error of the objective's analytic gradients."""
    rng = stream(seed, "init", b, d)
    za = rng.normal(size=(b, d))
    zb = rng.normal(size=(b, d))
    run = _objective_closure(name, d)
    out = run(za, zb)

    err = rel_error(
        out.grad_a + perturb,
        finite_diff_grad(lambda x: run(x, zb).loss, za, H),
    )
    if name != "byol":  # BYOL's grad_b is a stop-gradient by contract
        err = max(
            err,
            rel_error(out.grad_b, finite_diff_grad(lambda x: run(za, x).loss, zb, H)),
        )
    return err


def check_encoder(seed: int, b: int = 4, d: int = 6, vocab_size: int = 20,
                  max_len: int = 5, dropout: float = 0.1,
                  perturb: float = 0.0) -> float:
    """Max relative error over encoder parameter gradients.

    Scalar head: weighted sum of pooled outputs. The dropout stream is
    re-derived from the seed on every evaluation so perturbed forwards
    replay the same masks.
    """
    rng = stream(seed, "init", b, d)
    params = init_encoder(vocab_size, d, rng, dropout=dropout, max_len=max_len)
    ids = rng.integers(2, vocab_size, size=(b, max_len))
    lengths = rng.integers(1, max_len + 1, size=b)
    mask = (np.arange(max_len)[None, :] < lengths[:, None]).astype(np.float64)
    ids[mask == 0.0] = 0
    batch = TokenBatch(ids, mask)
    head = rng.normal(size=(b, d))

    def value() -> float:
        pooled, _ = encode_batch(params, batch, "train", stream(seed, "dropout-view-1"))
        return float((pooled * head).sum())

    pooled, ctx = encode_batch(params, batch, "train", stream(seed, "dropout-view-1"))
    grads = encoder_backward(ctx, head)

    worst = 0.0
    for tname, tensor in params.tensors().items():
        numeric = np.zeros_like(tensor)
        for idx in np.ndindex(*tensor.shape):
            orig = tensor[idx]
            tensor[idx] = orig + H
            fp = value()
            tensor[idx] = orig - H
            fm = value()
            tensor[idx] = orig
            numeric[idx] = (fp - fm) / (2.0 * H)
        analytic = grads[tname].reshape(tensor.shape)
        worst = max(worst, rel_error(analytic + perturb, numeric))
    return worst


def check_projector(seed: int, b: int = 4, dims=(5, 6, 4), perturb: float = 0.0) -> float:
    """Max relative error over projector parameter and input gradients."""
    rng = stream(seed, "init", b, *dims)
    proj = init_projector(list(dims), rng)
    z = rng.normal(size=(b, dims[0]))
    head = rng.normal(size=(b, dims[-1]))

    def value() -> float:
        snapshot = [
            (l.bn_mean.copy(), l.bn_var.copy())
            for l in proj.layers
            if l.bn_mean is not None
        ]
        out, _ = mlp_forward(proj, z, "train")
        i = 0
        for layer in proj.layers:  # keep running stats untouched across probes
            if layer.bn_mean is not None:
                layer.bn_mean[...], layer.bn_var[...] = snapshot[i]
                i += 1
        return float((out * head).sum())

    out, ctx = mlp_forward(proj, z, "train")
    grads, d_input = mlp_backward(ctx, head)

    worst = rel_error(d_input + perturb, finite_diff_grad(
        lambda x: float((mlp_forward(proj, x, "train")[0] * head).sum()), z, H))
    for tname, tensor in proj.tensors().items():
        if ".bn_mean" in tname or ".bn_var" in tname:
            continue  # buffers, not trainable parameters
        numeric = np.zeros_like(tensor)
        for idx in np.ndindex(*tensor.shape):
            orig = tensor[idx]
            tensor[idx] = orig + H
            fp = value()
            tensor[idx] = orig - H
            fm = value()
            tensor[idx] = orig
            numeric[idx] = (fp - fm) / (2.0 * H)
        worst = max(worst, rel_error(grads[tname].reshape(tensor.shape) + perturb, numeric))
    return worst


def run_full_suite(seed: int = 0, perturb: float = 0.0) -> dict[str, float]:
    """Per-check max relative error across small size sweeps."""
    results = {}
    sizes = [(3, 2), (4, 3), (8, 8)]
    for name in ("barlow_twins", "vicreg", "corinfomax", "byol"):
        results[name] = max(
            check_objective(name, seed + i, b, d, perturb)
            for i, (b, d) in enumerate(sizes)
        )
    results["encoder"] = check_encoder(seed, perturb=perturb)
    results["projector"] = check_projector(seed, perturb=perturb)
    return results
