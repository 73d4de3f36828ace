"""Tokenization, vocabulary, and a small trainable sentence encoder.

The encoder is deliberately minimal: token embedding lookup, inverted
dropout (the stochastic-augmentation site), an optional tanh feed-forward
layer, and masked mean pooling. It exposes an explicit forward context so
the backward pass can replay dropout masks exactly.
"""

from collections import Counter
from dataclasses import dataclass

import numpy as np

from .errors import EmptySentenceError, ShapeMismatchError, VocabError

PAD_ID = 0
UNK_ID = 1
RESERVED = ("<pad>", "<unk>")


@dataclass
class Vocab:
    token_to_id: dict[str, int]
    id_to_token: list[str]

    def __len__(self) -> int:
        return len(self.id_to_token)

    def lookup(self, token: str) -> int:
        return self.token_to_id.get(token, UNK_ID)


def build_vocab(corpus, min_count: int = 1) -> Vocab:
    """Vocabulary over whitespace tokens with frequency >= min_count.

    Ids are assigned in descending-frequency order, ties broken
    lexicographically; PAD=0 and UNK=1 are implicit.
    """
    sentences = list(corpus)
    if not sentences:
        raise VocabError("empty corpus")
    counts = Counter()
    for sentence in sentences:
        counts.update(sentence.lower().split())
    kept = sorted(
        (t for t, c in counts.items() if c >= min_count),
        key=lambda t: (-counts[t], t),
    )
    id_to_token = list(RESERVED) + kept
    return Vocab({t: i + 2 for i, t in enumerate(kept)}, id_to_token)


def save_vocab(vocab: Vocab, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for token in vocab.id_to_token[2:]:
            fh.write(token + "\n")


def load_vocab(path) -> Vocab:
    with open(path, encoding="utf-8") as fh:
        tokens = [line.rstrip("\n") for line in fh if line.rstrip("\n")]
    return Vocab({t: i + 2 for i, t in enumerate(tokens)}, list(RESERVED) + tokens)


@dataclass
class TokenBatch:
    ids: np.ndarray  # B x max_len int64
    mask: np.ndarray  # B x max_len, 1.0 on the real-token prefix

    @property
    def size(self) -> int:
        return self.ids.shape[0]


def tokenize(sentence: str, vocab: Vocab, max_len: int):
    """One row of a TokenBatch: lowercased whitespace split, UNK misses,
    truncate to max_len, PAD-fill."""
    tokens = sentence.lower().split()
    if not tokens:
        raise EmptySentenceError(f"no tokens in sentence: {sentence!r}")
    ids = np.full(max_len, PAD_ID, dtype=np.int64)
    mask = np.zeros(max_len)
    for i, token in enumerate(tokens[:max_len]):
        ids[i] = vocab.lookup(token)
        mask[i] = 1.0
    return ids, mask


def tokenize_batch(sentences, vocab: Vocab, max_len: int) -> TokenBatch:
    rows = [tokenize(s, vocab, max_len) for s in sentences]
    return TokenBatch(np.stack([r[0] for r in rows]), np.stack([r[1] for r in rows]))


@dataclass
class EncoderParams:
    emb: np.ndarray  # |V| x d_e
    ff_w: np.ndarray | None  # d_e x d_e
    ff_b: np.ndarray | None  # d_e
    dropout: float = 0.1
    max_len: int = 64

    @property
    def dim(self) -> int:
        return self.emb.shape[1]

    def tensors(self) -> dict[str, np.ndarray]:
        out = {"emb": self.emb}
        if self.ff_w is not None:
            out["ff_w"] = self.ff_w
            out["ff_b"] = self.ff_b
        return out

    def copy(self) -> "EncoderParams":
        return EncoderParams(
            self.emb.copy(),
            None if self.ff_w is None else self.ff_w.copy(),
            None if self.ff_b is None else self.ff_b.copy(),
            self.dropout,
            self.max_len,
        )


def init_encoder(
    vocab_size: int,
    dim: int,
    rng: np.random.Generator,
    dropout: float = 0.1,
    max_len: int = 64,
    feed_forward: bool = True,
) -> EncoderParams:
    emb = rng.normal(0.0, 1.0, size=(vocab_size, dim)) / np.sqrt(dim)
    emb[PAD_ID] = 0.0
    ff_w = ff_b = None
    if feed_forward:
        ff_w = rng.normal(0.0, 1.0, size=(dim, dim)) / np.sqrt(dim)
        ff_b = np.zeros(dim)
    return EncoderParams(emb, ff_w, ff_b, dropout, max_len)


@dataclass
class EncoderContext:
    """Everything the backward pass needs, captured during the forward."""

    params: EncoderParams
    batch: TokenBatch
    dropout_scale: np.ndarray | None  # B x L x d_e inverted-dropout multiplier
    dropped: np.ndarray  # token embeddings after dropout
    hidden: np.ndarray | None  # tanh output, None without feed-forward
    counts: np.ndarray  # real tokens per row


def encode_batch(params: EncoderParams, batch: TokenBatch, mode: str,
                 rng: np.random.Generator | None = None):
    """Forward pass: lookup -> dropout (train) -> optional tanh FF -> masked
    mean pooling. Returns (pooled B x d_e, context)."""
    if mode not in ("train", "eval"):
        raise ValueError(f"mode must be train or eval, got {mode!r}")
    if batch.ids.max() >= params.emb.shape[0]:
        raise VocabError(
            f"token id {int(batch.ids.max())} out of range for |V|={params.emb.shape[0]}"
        )
    b, length = batch.ids.shape
    x = params.emb[batch.ids]  # B x L x d_e

    dropout_scale = None
    if mode == "train" and params.dropout > 0.0:
        if rng is None:
            raise ValueError("train-mode dropout needs an rng stream")
        keep = 1.0 - params.dropout
        # position-major draw: padding a batch to a longer max_len leaves
        # the draws at real positions untouched
        u = rng.random((length, b, params.dim)).transpose(1, 0, 2)
        dropout_scale = (u < keep).astype(np.float64) / keep
        x = x * dropout_scale

    dropped = x
    hidden = None
    if params.ff_w is not None:
        hidden = np.tanh(dropped @ params.ff_w + params.ff_b)
        x = hidden

    counts = batch.mask.sum(axis=1)
    pooled = (x * batch.mask[:, :, None]).sum(axis=1) / counts[:, None]
    ctx = EncoderContext(params, batch, dropout_scale, dropped, hidden, counts)
    return pooled, ctx


def encoder_backward(ctx: EncoderContext, upstream: np.ndarray) -> dict[str, np.ndarray]:
    """Reverse of encode_batch; gradients keyed like EncoderParams.tensors()."""
    params = ctx.params
    if upstream.shape != (ctx.batch.size, params.dim):
        raise ShapeMismatchError(
            f"upstream shape {upstream.shape} does not match context "
            f"({ctx.batch.size}, {params.dim})"
        )
    # un-pool: each real token gets upstream / count of its row
    per_token = (upstream[:, None, :] / ctx.counts[:, None, None]) * ctx.batch.mask[:, :, None]

    grads = {}
    if params.ff_w is not None:
        d_pre = per_token * (1.0 - ctx.hidden**2)
        grads["ff_w"] = np.einsum("bld,ble->de", ctx.dropped, d_pre)
        grads["ff_b"] = d_pre.sum(axis=(0, 1))
        d_x = d_pre @ params.ff_w.T
    else:
        d_x = per_token

    if ctx.dropout_scale is not None:
        d_x = d_x * ctx.dropout_scale

    emb_grad = np.zeros_like(params.emb)
    np.add.at(emb_grad, ctx.batch.ids.ravel(), d_x.reshape(-1, params.dim))
    grads["emb"] = emb_grad
    return grads
