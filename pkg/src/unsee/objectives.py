"""The four non-contrastive training objectives.

Each loss returns a scalar, exact analytic gradients with respect to both
input views, and its named sub-losses. Gradients are verified against
central finite differences in the test suite, so every formula here is
the full derivative including the batch-statistics terms (means, stds and
covariances are functions of the batch, not constants).
"""

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateBatchError, ShapeMismatchError
from .numerics import as_matrix, cholesky_lower


@dataclass
class LossOutput:
    loss: float
    grad_a: np.ndarray
    grad_b: np.ndarray
    components: dict[str, float]


@dataclass
class ObjectiveConfig:
    """Per-loss hyperparameters; defaults follow the original objectives."""

    bt_lambda: float = 0.0051
    bt_eps: float = 1e-5
    vicreg_w_inv: float = 25.0
    vicreg_w_var: float = 25.0
    vicreg_w_cov: float = 1.0
    vicreg_gamma: float = 1.0
    vicreg_eps: float = 1e-4
    cim_w_inv: float = 2000.0
    cim_w_cov: float = 0.2
    cim_la_r: float = 0.01
    cim_la_mu: float = 0.01
    cim_r_ini: float = 1.0
    cim_r_eps_weight: float = 1e-6
    byol_symmetrize: bool = False


OBJECTIVES = ("barlow_twins", "vicreg", "corinfomax", "byol")


def _check_views(za, zb):
    za = as_matrix(za, "Za")
    zb = as_matrix(zb, "Zb")
    if za.shape != zb.shape:
        raise ShapeMismatchError(f"view shapes differ: {za.shape} vs {zb.shape}")
    if za.shape[0] < 2:
        raise DegenerateBatchError(f"need batch >= 2, got {za.shape[0]}")
    return za, zb


def _standardize_fwd(z, eps):
    mu = z.mean(axis=0)
    std = z.std(axis=0)  # population
    zhat = (z - mu) / (std + eps)
    return zhat, std


def _standardize_bwd(upstream, zhat, std, eps):
    # z_hat = (z - mu)/(std + eps); both mu and std depend on the batch
    b = zhat.shape[0]
    t = std + eps
    grad = (upstream - upstream.mean(axis=0)) / t
    safe = std > 1e-30
    proj = (upstream * zhat).sum(axis=0)
    grad -= np.where(safe, proj / (b * np.where(safe, std, 1.0)), 0.0) * zhat
    return grad


def barlow_twins_loss(za, zb, lam: float = 0.0051, eps: float = 1e-5) -> LossOutput:
    """Redundancy-reduction loss: drive the cross-correlation of the two
    standardized views toward the identity."""
    za, zb = _check_views(za, zb)
    b, d = za.shape
    ha, sa = _standardize_fwd(za, eps)
    hb, sb = _standardize_fwd(zb, eps)
    c = ha.T @ hb / b

    diag = np.diag(c)
    on_diag = float(((1.0 - diag) ** 2).sum())
    off = c - np.diag(diag)
    off_diag = float(lam * (off**2).sum())

    g_c = 2.0 * lam * off
    np.fill_diagonal(g_c, -2.0 * (1.0 - diag))
    g_ha = hb @ g_c.T / b
    g_hb = ha @ g_c / b
    return LossOutput(
        on_diag + off_diag,
        _standardize_bwd(g_ha, ha, sa, eps),
        _standardize_bwd(g_hb, hb, sb, eps),
        {"diagonal": on_diag, "off_diagonal": off_diag},
    )


def vicreg_loss(
    za,
    zb,
    w_inv: float = 25.0,
    w_var: float = 25.0,
    w_cov: float = 1.0,
    gamma: float = 1.0,
    eps: float = 1e-4,
) -> LossOutput:
    """Variance-invariance-covariance regularization over two views."""
    za, zb = _check_views(za, zb)
    b, d = za.shape

    diff = za - zb
    inv = float((diff**2).sum() / (b * d))
    g_inv = 2.0 * diff / (b * d)

    def variance_term(z):
        centered = z - z.mean(axis=0)
        var = (centered**2).sum(axis=0) / (b - 1)
        s = np.sqrt(var + eps)
        active = s < gamma
        value = float(np.where(active, gamma - s, 0.0).sum() / d)
        grad = -(centered * (active / s)) / ((b - 1) * d)
        return value, grad

    def covariance_term(z):
        centered = z - z.mean(axis=0)
        cov = centered.T @ centered / (b - 1)
        off = cov - np.diag(np.diag(cov))
        value = float((off**2).sum() / d)
        grad = centered @ off * (4.0 / (d * (b - 1)))
        return value, grad

    va, g_va = variance_term(za)
    vb, g_vb = variance_term(zb)
    ca, g_ca = covariance_term(za)
    cb, g_cb = covariance_term(zb)

    loss = w_inv * inv + w_var * (va + vb) + w_cov * (ca + cb)
    grad_a = w_inv * g_inv + w_var * g_va + w_cov * g_ca
    grad_b = -w_inv * g_inv + w_var * g_vb + w_cov * g_cb
    return LossOutput(
        loss,
        grad_a,
        grad_b,
        {
            "invariance": w_inv * inv,
            "variance": w_var * (va + vb),
            "covariance": w_cov * (ca + cb),
        },
    )


@dataclass
class CorInfoMaxState:
    """Running covariance/mean estimates, one pair per view."""

    r_a: np.ndarray
    r_b: np.ndarray
    mu_a: np.ndarray
    mu_b: np.ndarray
    step: int = 0

    @classmethod
    def fresh(cls, dim: int, r_ini: float = 1.0) -> "CorInfoMaxState":
        return cls(
            r_ini * np.eye(dim), r_ini * np.eye(dim), np.zeros(dim), np.zeros(dim)
        )


def _logdet_and_inverse(m: np.ndarray):
    L = cholesky_lower(m)
    logdet = float(2.0 * np.sum(np.log(np.diag(L))))
    inv_l = np.linalg.inv(L)
    return logdet, inv_l.T @ inv_l


def corinfomax_loss(
    za,
    zb,
    state: CorInfoMaxState,
    w_inv: float = 2000.0,
    w_cov: float = 0.2,
    la_r: float = 0.01,
    la_mu: float = 0.01,
    eps_weight: float = 1e-6,
):
    """Euclidean invariance regularized by the log-determinant of running
    feature covariances. Returns (LossOutput, post-update state); gradients
    flow through the invariance term and the current batch's contribution
    to the covariance update only."""
    za, zb = _check_views(za, zb)
    b, d = za.shape
    if state.r_a.shape != (d, d):
        raise ShapeMismatchError(
            f"state dimension {state.r_a.shape[0]} does not match views ({d})"
        )
    eps = eps_weight * d

    diff = za - zb
    inv = float((diff**2).sum() / (b * d))
    g_inv = 2.0 * diff / (b * d)

    def update_view(z, r_old, mu_old):
        mu_batch = z.mean(axis=0)
        centered = z - mu_batch
        r_batch = centered.T @ centered / b
        r_new = (1.0 - la_r) * r_old + la_r * r_batch
        r_new = (r_new + r_new.T) / 2.0
        mu_new = (1.0 - la_mu) * mu_old + la_mu * mu_batch
        logdet, r_inv = _logdet_and_inverse(r_new + eps * np.eye(d))
        # d logdet / dz through the la_r * r_batch contribution
        grad = centered @ r_inv * (2.0 * la_r / b)
        return r_new, mu_new, logdet, grad

    r_a, mu_a, logdet_a, g_cov_a = update_view(za, state.r_a, state.mu_a)
    r_b, mu_b, logdet_b, g_cov_b = update_view(zb, state.r_b, state.mu_b)

    cov_term = logdet_a + logdet_b
    loss = w_inv * inv - w_cov * cov_term
    out = LossOutput(
        loss,
        w_inv * g_inv - w_cov * g_cov_a,
        -w_inv * g_inv - w_cov * g_cov_b,
        {"invariance": w_inv * inv, "covariance": -w_cov * cov_term},
    )
    return out, CorInfoMaxState(r_a, r_b, mu_a, mu_b, state.step + 1)


def byol_loss(p, t) -> LossOutput:
    """Cosine-alignment loss between predictions and stop-gradient targets."""
    p, t = _check_views(p, t)
    b = p.shape[0]
    pn = np.linalg.norm(p, axis=1)
    tn = np.linalg.norm(t, axis=1)
    for name, norms in (("P", pn), ("T", tn)):
        zero = np.flatnonzero(norms == 0.0)
        if zero.size:
            raise DegenerateBatchError(f"zero-norm row {int(zero[0])} in {name}")
    phat = p / pn[:, None]
    that = t / tn[:, None]
    cos = (phat * that).sum(axis=1)
    loss = float((2.0 - 2.0 * cos).mean())
    grad_a = (-2.0 / b) * (that - cos[:, None] * phat) / pn[:, None]
    return LossOutput(loss, grad_a, np.zeros_like(t), {"alignment": loss})
