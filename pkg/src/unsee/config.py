"""Run-config files: flat `key=value` lines, `#` comments, strict keys."""

from dataclasses import dataclass

from .architectures import VARIANTS
from .errors import ConfigError
from .objectives import OBJECTIVES, ObjectiveConfig
from .training import TrainConfig


def _to_bool(s: str) -> bool:
    if s.lower() in ("1", "true", "yes", "on"):
        return True
    if s.lower() in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


# key -> (target field, converter); objective keys use their common names
_TRAIN_KEYS = {
    "variant": ("variant", str),
    "objective": ("objective", str),
    "batch_size": ("batch_size", int),
    "learning_rate": ("learning_rate", float),
    "max_len": ("max_len", int),
    "epochs": ("epochs", int),
    "decay": ("decay", float),
    "mlp_depth": ("mlp_depth", int),
    "eval_count": ("eval_count", int),
    "seed": ("seed", int),
    "dim": ("dim", int),
    "dropout": ("dropout", float),
    "min_count": ("min_count", int),
    "grad_clip": ("grad_clip", float),
    "feed_forward": ("feed_forward", _to_bool),
}
_OBJECTIVE_KEYS = {
    "lambda": ("bt_lambda", float),
    "bt_eps": ("bt_eps", float),
    "vicreg_w_inv": ("vicreg_w_inv", float),
    "vicreg_w_var": ("vicreg_w_var", float),
    "vicreg_w_cov": ("vicreg_w_cov", float),
    "vicreg_gamma": ("vicreg_gamma", float),
    "vicreg_eps": ("vicreg_eps", float),
    "cim_w_inv": ("cim_w_inv", float),
    "cim_w_cov": ("cim_w_cov", float),
    "cim_la_r": ("cim_la_r", float),
    "cim_la_mu": ("cim_la_mu", float),
    "cim_r_ini": ("cim_r_ini", float),
    "cim_r_eps_weight": ("cim_r_eps_weight", float),
    "byol_symmetrize": ("byol_symmetrize", _to_bool),
}
_PATH_KEYS = ("corpus", "dev", "out_dir", "vocab")
REQUIRED_KEYS = ("corpus", "dev", "out_dir", "epochs")


@dataclass
class RunConfig:
    train: TrainConfig
    corpus: str
    dev: str
    out_dir: str
    vocab: str | None


def parse_config_text(text: str) -> RunConfig:
    raw: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected key=value, got {stripped!r}")
        key, _, value = stripped.partition("=")
        key, value = key.strip(), value.strip()
        if key in raw:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        raw[key] = value

    for key in raw:
        if key not in _TRAIN_KEYS and key not in _OBJECTIVE_KEYS and key not in _PATH_KEYS:
            raise ConfigError(f"unknown key {key!r}")
    for key in REQUIRED_KEYS:
        if key not in raw:
            raise ConfigError(f"missing required key {key!r}")

    train_kwargs = {}
    obj_kwargs = {}
    for key, value in raw.items():
        if key in _PATH_KEYS:
            continue
        table = _TRAIN_KEYS if key in _TRAIN_KEYS else _OBJECTIVE_KEYS
        field_name, conv = table[key]
        try:
            converted = conv(value)
        except ValueError as exc:
            raise ConfigError(f"key {key!r}: bad value {value!r}") from exc
        (train_kwargs if key in _TRAIN_KEYS else obj_kwargs)[field_name] = converted

    if "variant" in train_kwargs and train_kwargs["variant"] not in VARIANTS:
        raise ConfigError(f"key 'variant': must be one of {VARIANTS}")
    if "objective" in train_kwargs and train_kwargs["objective"] not in OBJECTIVES:
        raise ConfigError(f"key 'objective': must be one of {OBJECTIVES}")

    try:
        train = TrainConfig(objective_config=ObjectiveConfig(**obj_kwargs), **train_kwargs)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return RunConfig(train, raw["corpus"], raw["dev"], raw["out_dir"], raw.get("vocab"))


def parse_config_file(path) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config_text(text)
