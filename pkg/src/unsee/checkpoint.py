"""Binary model checkpoints.

Layout: magic b"UNSEE01\\n", UTF-8 header lines, a blank line, then raw
little-endian float64 payloads in table order. Header lines are either
`meta <key> <value>` (variant, vocab hash, scalar hyperparameters) or
`tensor <name> <d0>x<d1>... <offset>` where offset counts float64 values
from the start of the payload.
"""

import hashlib
from dataclasses import dataclass

import numpy as np

from .architectures import (
    Model,
    ProjectorLayer,
    ProjectorParams,
    TargetState,
)
from .encoder import EncoderParams, Vocab
from .errors import BadMagicError, CheckpointShapeError, TruncatedCheckpointError
from .objectives import CorInfoMaxState

MAGIC = b"UNSEE01\n"


def vocab_hash(vocab: Vocab) -> str:
    joined = "\n".join(vocab.id_to_token[2:])
    return hashlib.sha256(joined.encode("utf-8")).hexdigest()


def _collect_tensors(model: Model, objective_state) -> dict[str, np.ndarray]:
    tensors = dict(model.tensors())
    if objective_state is not None:
        tensors["obj.r_a"] = objective_state.r_a
        tensors["obj.r_b"] = objective_state.r_b
        tensors["obj.mu_a"] = objective_state.mu_a
        tensors["obj.mu_b"] = objective_state.mu_b
    return tensors


def save_checkpoint(model: Model, objective_state, path, vocab: Vocab,
                    extra_meta: dict | None = None) -> None:
    """Write model + optional CorInfoMax state; bitwise round-trip safe."""
    tensors = _collect_tensors(model, objective_state)
    meta = {
        "variant": model.variant,
        "vocab_hash": vocab_hash(vocab),
        "dropout": repr(model.encoder.dropout),
        "max_len": str(model.encoder.max_len),
        "mlp_depth": str(model.projector.depth),
        "has_ff": "1" if model.encoder.ff_w is not None else "0",
        "obj_step": str(objective_state.step) if objective_state is not None else "",
    }
    if model.target is not None:
        meta["decay"] = repr(model.target.decay)
    if extra_meta:
        meta.update({k: str(v) for k, v in extra_meta.items()})

    header_lines = [f"meta {k} {v}" for k, v in meta.items() if v != ""]
    offset = 0
    order = []
    for name, t in tensors.items():
        shape = "x".join(str(d) for d in t.shape)
        header_lines.append(f"tensor {name} {shape} {offset}")
        order.append(name)
        offset += t.size

    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(("\n".join(header_lines) + "\n\n").encode("utf-8"))
        for name in order:
            fh.write(np.ascontiguousarray(tensors[name], dtype="<f8").tobytes())


@dataclass
class CheckpointBundle:
    model: Model
    objective_state: CorInfoMaxState | None
    meta: dict[str, str]


def _parse_header(blob: bytes):
    if not blob.startswith(MAGIC):
        raise BadMagicError("not an UNSEE checkpoint (bad magic bytes)")
    end = blob.find(b"\n\n", len(MAGIC))
    if end < 0:
        raise TruncatedCheckpointError("header not terminated by a blank line")
    meta: dict[str, str] = {}
    table: list[tuple[str, tuple[int, ...], int]] = []
    for line in blob[len(MAGIC) : end].decode("utf-8").splitlines():
        kind, rest = line.split(" ", 1)
        if kind == "meta":
            key, _, value = rest.partition(" ")
            meta[key] = value
        elif kind == "tensor":
            name, shape_s, offset_s = rest.rsplit(" ", 2)
            shape = tuple(int(d) for d in shape_s.split("x"))
            table.append((name, shape, int(offset_s)))
        else:
            raise TruncatedCheckpointError(f"unknown header line kind {kind!r}")
    return meta, table, blob[end + 2 :]


def _read_tensors(table, payload) -> dict[str, np.ndarray]:
    values = np.frombuffer(payload, dtype="<f8")
    out = {}
    for name, shape, offset in table:
        size = int(np.prod(shape))
        if offset + size > values.size:
            raise TruncatedCheckpointError(
                f"tensor {name} runs past end of payload "
                f"(needs {offset + size} values, have {values.size})"
            )
        out[name] = values[offset : offset + size].reshape(shape).copy()
    return out


def load_checkpoint(path, expect_variant: str | None = None,
                    expect_mlp_depth: int | None = None) -> CheckpointBundle:
    with open(path, "rb") as fh:
        blob = fh.read()
    meta, table, payload = _parse_header(blob)
    tensors = _read_tensors(table, payload)

    variant = meta["variant"]
    if expect_variant is not None and variant != expect_variant:
        raise CheckpointShapeError(
            f"checkpoint variant {variant!r} does not match requested {expect_variant!r}"
        )
    depth = int(meta["mlp_depth"])
    if expect_mlp_depth is not None and depth != expect_mlp_depth:
        raise CheckpointShapeError(
            f"checkpoint has mlp_depth {depth}, config requests {expect_mlp_depth}"
        )

    def encoder_from(prefix: str) -> EncoderParams:
        if f"{prefix}.emb" not in tensors:
            raise CheckpointShapeError(f"missing tensor {prefix}.emb")
        return EncoderParams(
            tensors[f"{prefix}.emb"],
            tensors.get(f"{prefix}.ff_w"),
            tensors.get(f"{prefix}.ff_b"),
            float(meta["dropout"]),
            int(meta["max_len"]),
        )

    layers = []
    for i in range(depth):
        try:
            w = tensors[f"proj.{i}.w"]
            b = tensors[f"proj.{i}.b"]
        except KeyError as exc:
            raise CheckpointShapeError(f"missing projector tensor for layer {i}") from exc
        if f"proj.{i}.bn_gamma" in tensors:
            layers.append(
                ProjectorLayer(
                    w, b,
                    tensors[f"proj.{i}.bn_gamma"], tensors[f"proj.{i}.bn_beta"],
                    tensors[f"proj.{i}.bn_mean"], tensors[f"proj.{i}.bn_var"],
                    True,
                )
            )
        else:
            layers.append(ProjectorLayer(w, b, None, None, None, None, False))

    encoder = encoder_from("enc")
    target = None
    if variant != "projection":
        target = TargetState(encoder_from("target"), float(meta["decay"]))
    model = Model(variant, encoder, ProjectorParams(layers), target)

    objective_state = None
    if "obj.r_a" in tensors:
        objective_state = CorInfoMaxState(
            tensors["obj.r_a"], tensors["obj.r_b"],
            tensors["obj.mu_a"], tensors["obj.mu_b"],
            int(meta.get("obj_step", "0")),
        )
    return CheckpointBundle(model, objective_state, meta)
