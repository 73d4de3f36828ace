"""STS-style evaluation and collapse diagnostics.

Scores a model by the Spearman correlation between cosine similarities of
sentence-pair embeddings and gold relatedness labels, and quantifies how
much of the embedding space a model actually uses.
"""

from dataclasses import dataclass

import numpy as np

from .architectures import Model, embed_for_eval
from .encoder import Vocab, tokenize_batch
from .errors import DegenerateBatchError, EvalDataError, UnseeError
from .numerics import SpectrumReport, effective_rank, spearman
from .rng import stream

MAX_COSINE_PAIRS = 10_000


@dataclass
class LabeledPair:
    sentence_a: str
    sentence_b: str
    gold: float


@dataclass
class EvalResult:
    spearman: float
    n_pairs: int
    diagnostics: SpectrumReport


def load_pairs(path) -> list[LabeledPair]:
    """Parse the three-column TSV (sentence_a, sentence_b, gold in [0,5]).

    Malformed lines are an error carrying the line number, never skipped.
    """
    pairs = []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n")
            if not line:
                continue
            cols = line.split("\t")
            if len(cols) != 3:
                raise EvalDataError(f"line {lineno}: expected 3 tab-separated columns")
            a, b, gold_s = cols
            if not a or not b:
                raise EvalDataError(f"line {lineno}: empty sentence")
            try:
                gold = float(gold_s)
            except ValueError as exc:
                raise EvalDataError(f"line {lineno}: bad gold score {gold_s!r}") from exc
            if not (0.0 <= gold <= 5.0):
                raise EvalDataError(f"line {lineno}: gold {gold} outside [0, 5]")
            pairs.append(LabeledPair(a, b, gold))
    if not pairs:
        raise EvalDataError("no pairs in file")
    return pairs


def sts_eval(model: Model, pairs, vocab: Vocab) -> EvalResult:
    """Spearman of cosine similarity vs gold, plus spectrum diagnostics over
    the union of all embedded sentences."""
    pairs = list(pairs)
    if not pairs:
        raise EvalDataError("empty pair set")
    max_len = model.encoder.max_len
    emb_a = embed_for_eval(model, tokenize_batch([p.sentence_a for p in pairs], vocab, max_len))
    emb_b = embed_for_eval(model, tokenize_batch([p.sentence_b for p in pairs], vocab, max_len))

    norms_a = np.linalg.norm(emb_a, axis=1)
    norms_b = np.linalg.norm(emb_b, axis=1)
    for norms, side in ((norms_a, "sentence_a"), (norms_b, "sentence_b")):
        bad = np.flatnonzero(norms == 0.0)
        if bad.size:
            pair = pairs[int(bad[0])]
            sent = pair.sentence_a if side == "sentence_a" else pair.sentence_b
            raise DegenerateBatchError(f"zero-norm embedding for {side}: {sent!r}")

    cosines = (emb_a * emb_b).sum(axis=1) / (norms_a * norms_b)
    gold = np.array([p.gold for p in pairs])
    rho = spearman(cosines, gold)
    diagnostics = effective_rank(np.vstack([emb_a, emb_b]))
    return EvalResult(rho, len(pairs), diagnostics)


@dataclass
class CollapseReport:
    spectrum: SpectrumReport
    mean_pairwise_cosine: float


def collapse_report(embeddings, seed: int = 0) -> CollapseReport:
    """Spectrum report plus mean pairwise cosine (seeded subsample above
    10k pairs; zero-norm rows are excluded from the cosine average)."""
    e = np.asarray(embeddings, dtype=np.float64)
    if e.ndim != 2 or e.shape[0] < 2:
        raise DegenerateBatchError("collapse report needs >= 2 embedding rows")
    spectrum = effective_rank(e)

    norms = np.linalg.norm(e, axis=1)
    unit = e[norms > 0.0] / norms[norms > 0.0, None]
    n = unit.shape[0]
    if n < 2:
        raise UnseeError("fewer than 2 nonzero embeddings; cosine undefined")
    total_pairs = n * (n - 1) // 2
    if total_pairs <= MAX_COSINE_PAIRS:
        gram = unit @ unit.T
        mean_cos = float((gram.sum() - np.trace(gram)) / (n * (n - 1)))
    else:
        rng = stream(seed, "subsample")
        i = rng.integers(0, n, size=MAX_COSINE_PAIRS)
        j = rng.integers(0, n - 1, size=MAX_COSINE_PAIRS)
        j = np.where(j >= i, j + 1, j)  # never pair a row with itself
        mean_cos = float((unit[i] * unit[j]).sum(axis=1).mean())
    return CollapseReport(spectrum, mean_cos)
