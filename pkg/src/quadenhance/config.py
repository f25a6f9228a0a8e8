"""Run configurations: JSON in, dataclasses out, unknown keys rejected.

Every run is reproducible from (config, code version), so parsing is
strict: a key the schema does not know is a configuration error, never
silently ignored.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from typing import Any

from .errors import ConfigError

_REQUIRED = object()


class _Keys:
    """Pop-and-verify view over one config dict level."""

    def __init__(self, d: dict, where: str):
        if not isinstance(d, dict):
            raise ConfigError(f"{where}: expected an object, got {type(d).__name__}")
        self._d = dict(d)
        self._where = where

    def take(self, key: str, default: Any = _REQUIRED) -> Any:
        if key in self._d:
            return self._d.pop(key)
        if default is _REQUIRED:
            raise ConfigError(f"{self._where}: missing required key {key!r}")
        return default

    def done(self) -> None:
        if self._d:
            raise ConfigError(f"{self._where}: unknown keys {sorted(self._d)}")


def _int_list(v, where: str) -> tuple[int, ...]:
    if not isinstance(v, (list, tuple)):
        raise ConfigError(f"{where}: expected a list of integers")
    return tuple(int(x) for x in v)


@dataclass(frozen=True)
class DatasetSpec:
    name: str
    options: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, d: dict, where: str = "dataset") -> "DatasetSpec":
        keys = _Keys(d, where)
        name = keys.take("name")
        known = {
            "xor": ("encoding",),
            "quadratic_target": ("n", "d", "shifts", "seed", "size", "valid_fraction"),
            "blobs": ("classes", "size", "noise", "seed", "valid_fraction"),
            "circles": ("classes", "size", "noise", "seed", "valid_fraction"),
            "csv": ("path", "label_column", "has_header", "classification", "valid_fraction"),
            "idx": ("images", "labels", "valid_fraction"),
        }
        if name not in known:
            raise ConfigError(f"{where}: unknown dataset {name!r} (choose from {sorted(known)})")
        opts = {}
        for key in known[name]:
            val = keys.take(key, None)
            if val is not None:
                opts[key] = tuple(int(x) for x in val) if key == "shifts" else val
        keys.done()
        return cls(name=name, options=opts)


@dataclass(frozen=True)
class ModelSpec:
    kind: str
    options: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, d: dict, where: str = "model") -> "ModelSpec":
        keys = _Keys(d, where)
        kind = keys.take("type")
        if kind == "qe_mlp":
            opts = {
                "layer_dims": _int_list(keys.take("layer_dims"), where),
                "activation": keys.take("activation", "gelu"),
                "shifts": _int_list(keys.take("shifts", [1]), where),
                "exempt_final": bool(keys.take("exempt_final", False)),
            }
            mask = keys.take("enhancer", None)
            if mask is not None:
                opts["enhancer"] = tuple(bool(b) for b in mask)
        elif kind in ("quadranet", "swiglu"):
            opts = {"n": int(keys.take("n")), "d": int(keys.take("d"))}
            if kind == "quadranet":
                opts["bias"] = bool(keys.take("bias", False))
        else:
            raise ConfigError(f"{where}: unknown model type {kind!r}")
        keys.done()
        return cls(kind=kind, options=opts)


@dataclass(frozen=True)
class OptimizerSpec:
    algo: str
    lr: float
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def from_dict(cls, d: dict, where: str = "optimizer") -> "OptimizerSpec":
        keys = _Keys(d, where)
        algo = keys.take("algo")
        if algo not in ("sgd", "adam"):
            raise ConfigError(f"{where}: unknown optimizer {algo!r}")
        spec = cls(algo=algo, lr=float(keys.take("lr")),
                   beta1=float(keys.take("beta1", 0.9)),
                   beta2=float(keys.take("beta2", 0.999)),
                   eps=float(keys.take("eps", 1e-8)))
        keys.done()
        if spec.lr <= 0:
            raise ConfigError(f"{where}: lr must be positive")
        return spec


@dataclass(frozen=True)
class TrainConfig:
    model: ModelSpec
    dataset: DatasetSpec
    optimizer: OptimizerSpec
    epochs: int
    batch_size: int
    seed: int = 0
    dtype: str = "f32"

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        keys = _Keys(d, "train")
        cfg = cls(
            model=ModelSpec.from_dict(keys.take("model")),
            dataset=DatasetSpec.from_dict(keys.take("dataset")),
            optimizer=OptimizerSpec.from_dict(keys.take("optimizer")),
            epochs=int(keys.take("epochs")),
            batch_size=int(keys.take("batch_size")),
            seed=int(keys.take("seed", 0)),
            dtype=str(keys.take("dtype", "f32")),
        )
        keys.done()
        if cfg.epochs < 1 or cfg.batch_size < 1:
            raise ConfigError("epochs and batch_size must be >= 1")
        if cfg.dtype not in ("f32", "f64"):
            raise ConfigError(f"dtype must be f32 or f64, got {cfg.dtype!r}")
        return cfg


@dataclass(frozen=True)
class AblateConfig:
    k_sets: tuple[tuple[int, ...], ...]
    dims: tuple[int, ...]
    seeds: tuple[int, ...]
    optimizer: OptimizerSpec
    epochs: int
    batch_size: int
    dataset_size: int = 256
    target_shifts: tuple[int, ...] = (1,)
    input_dim: int | None = None          # defaults to the hidden dim
    dtype: str = "f32"

    @classmethod
    def from_dict(cls, d: dict) -> "AblateConfig":
        keys = _Keys(d, "ablate")
        raw_sets = keys.take("k_sets")
        if not isinstance(raw_sets, (list, tuple)) or not raw_sets:
            raise ConfigError("ablate: k_sets must be a non-empty list of shift lists")
        raw_input_dim = keys.take("input_dim", None)
        cfg = cls(
            k_sets=tuple(_int_list(s, "ablate.k_sets") for s in raw_sets),
            dims=_int_list(keys.take("dims"), "ablate"),
            seeds=_int_list(keys.take("seeds", [0, 1, 2]), "ablate"),
            optimizer=OptimizerSpec.from_dict(keys.take("optimizer")),
            epochs=int(keys.take("epochs")),
            batch_size=int(keys.take("batch_size")),
            dataset_size=int(keys.take("dataset_size", 256)),
            target_shifts=_int_list(keys.take("target_shifts", [1]), "ablate"),
            input_dim=int(raw_input_dim) if raw_input_dim is not None else None,
            dtype=str(keys.take("dtype", "f32")),
        )
        keys.done()
        if len(cfg.seeds) < 3:
            raise ConfigError("ablate: need at least 3 seeds for a median")
        return cfg


@dataclass(frozen=True)
class GradcheckConfig:
    families: tuple[str, ...] = ("qe_layer", "qe_mlp", "quadranet", "swiglu")
    instances: int = 100
    tol: float = 1e-4
    step: float = 1e-6
    precision: str = "f64"
    seed: int = 0

    @classmethod
    def from_dict(cls, d: dict) -> "GradcheckConfig":
        keys = _Keys(d, "gradcheck")
        fams = keys.take("families", list(cls.families))
        precision = str(keys.take("precision", "f64"))
        # difference quotients always run in f64, so the step stays 1e-6;
        # the tolerance widens for f32 analytic gradients
        defaults = {"f64": (1e-6, 1e-4), "f32": (1e-6, 1e-2)}
        if precision not in defaults:
            raise ConfigError(f"gradcheck: precision must be f32 or f64, got {precision!r}")
        dstep, dtol = defaults[precision]
        cfg = cls(
            families=tuple(fams),
            instances=int(keys.take("instances", 100)),
            tol=float(keys.take("tol", dtol)),
            step=float(keys.take("step", dstep)),
            precision=precision,
            seed=int(keys.take("seed", 0)),
        )
        keys.done()
        bad = set(cfg.families) - {"qe_layer", "qe_mlp", "quadranet", "swiglu"}
        if bad:
            raise ConfigError(f"gradcheck: unknown families {sorted(bad)}")
        return cfg


@dataclass(frozen=True)
class OracleEquivConfig:
    instances: int = 1000
    seed: int = 0
    precision: str = "f64"
    max_dim: int = 32

    @classmethod
    def from_dict(cls, d: dict) -> "OracleEquivConfig":
        keys = _Keys(d, "oracle_equiv")
        precision = str(keys.take("precision", "f64"))
        if precision not in ("f32", "f64"):
            raise ConfigError(f"oracle_equiv: precision must be f32 or f64, got {precision!r}")
        cfg = cls(instances=int(keys.take("instances", 1000)),
                  seed=int(keys.take("seed", 0)),
                  precision=precision,
                  max_dim=int(keys.take("max_dim", 32)))
        keys.done()
        return cfg

    @property
    def tol(self) -> float:
        return 1e-12 if self.precision == "f64" else 1e-6


@dataclass(frozen=True)
class MonteCarloConfig:
    v_list: tuple[float, ...] = (4.0, 8.0, 16.0)
    samples: int = 10_000_000
    seed: int = 0

    @classmethod
    def from_dict(cls, d: dict) -> "MonteCarloConfig":
        keys = _Keys(d, "montecarlo")
        cfg = cls(v_list=tuple(float(v) for v in keys.take("v_list", [4, 8, 16])),
                  samples=int(keys.take("samples", 10_000_000)),
                  seed=int(keys.take("seed", 0)))
        keys.done()
        if cfg.samples < 1 or any(v <= 0 for v in cfg.v_list):
            raise ConfigError("montecarlo: samples must be >= 1 and thresholds positive")
        return cfg


@dataclass(frozen=True)
class CostConfig:
    preset: str | None = None
    model: ModelSpec | None = None

    @classmethod
    def from_dict(cls, d: dict) -> "CostConfig":
        keys = _Keys(d, "cost")
        preset = keys.take("preset", None)
        model_d = keys.take("model", None)
        keys.done()
        if (preset is None) == (model_d is None):
            raise ConfigError("cost: give exactly one of 'preset' or 'model'")
        return cls(preset=preset,
                   model=ModelSpec.from_dict(model_d) if model_d else None)


def load_json(path) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None


def canonical_json(obj) -> str:
    """Stable serialization used when echoing configs next to outputs."""
    def default(o):
        if hasattr(o, "__dataclass_fields__"):
            return asdict(o)
        if isinstance(o, tuple):
            return list(o)
        raise TypeError(f"cannot serialize {type(o).__name__}")
    return json.dumps(obj, indent=2, sort_keys=True, default=default) + "\n"
