"""Layer stacks, quadratic baselines, losses, and optimizers.

Everything here is built from the differentiable primitives, so one
gradient checker covers the whole zoo.  Models expose a uniform surface:
``parameters()`` / ``load_parameters()`` for the raw arrays,
``bind(tape)`` + ``apply(tape, bound, x)`` for a differentiable pass, and
``forward(x)`` for array-in/array-out evaluation.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import autograd as ag
from .enhancer import QELayer, init_qelayer
from .errors import ConfigError, DimensionError, NumericError
from .rng import Rng

ACTIVATIONS = {
    "relu": ag.relu,
    "gelu": ag.gelu,
    "identity": lambda v: v,
}


@dataclass(frozen=True)
class MLPConfig:
    """Stack of linear layers with an optional enhancer on each one.

    ``enhancer`` is a per-layer mask (default: every layer, including the
    output projection; set ``exempt_final`` for the common variant that
    leaves the last projection plain).
    """

    layer_dims: tuple[int, ...]
    activation: str = "gelu"
    enhancer: tuple[bool, ...] | None = None
    shifts: tuple[int, ...] = (1,)
    seed: int = 0
    exempt_final: bool = False
    dtype: str = "f64"

    def __post_init__(self):
        if len(self.layer_dims) < 2:
            raise ConfigError("need at least input and output dims")
        if any(d < 1 for d in self.layer_dims):
            raise ConfigError(f"all dims must be >= 1, got {self.layer_dims}")
        if self.activation not in ACTIVATIONS:
            raise ConfigError(f"unknown activation {self.activation!r}")
        if self.dtype not in ("f32", "f64"):
            raise ConfigError(f"dtype must be f32 or f64, got {self.dtype!r}")
        if self.enhancer is not None and len(self.enhancer) != self.n_layers:
            raise ConfigError(
                f"enhancer mask length {len(self.enhancer)} != layer count {self.n_layers}")

    @property
    def n_layers(self) -> int:
        return len(self.layer_dims) - 1

    def mask(self) -> tuple[bool, ...]:
        m = list(self.enhancer) if self.enhancer is not None else [True] * self.n_layers
        if self.exempt_final:
            m[-1] = False
        return tuple(m)

    def np_dtype(self):
        return np.float32 if self.dtype == "f32" else np.float64

    def plain(self) -> "MLPConfig":
        """Same stack with every enhancer disabled (the linear baseline)."""
        return replace(self, enhancer=tuple(False for _ in range(self.n_layers)))


class MLP:
    """Alternating (enhanced-or-plain linear, activation) stack.

    No activation is applied after the final layer.
    """

    def __init__(self, config: MLPConfig):
        self.config = config
        dims, mask = config.layer_dims, config.mask()
        rng = Rng(config.seed)
        self.layers: list[QELayer] = []
        for i in range(config.n_layers):
            layer_seed = int(rng.split(i).seed)
            self.layers.append(init_qelayer(
                n=dims[i], d=dims[i + 1], shifts=config.shifts, seed=layer_seed,
                dtype=config.np_dtype(), enhancer=mask[i], name=f"layers.{i}"))
        self._act = ACTIVATIONS[config.activation]

    def parameters(self) -> dict[str, np.ndarray]:
        out = {}
        for i, layer in enumerate(self.layers):
            for k, v in layer.parameters().items():
                out[f"layers.{i}.{k}"] = v
        return out

    def load_parameters(self, params: dict[str, np.ndarray]) -> None:
        for i, layer in enumerate(self.layers):
            sub = {k.split(".", 2)[2]: v for k, v in params.items()
                   if k.startswith(f"layers.{i}.")}
            layer.load_parameters(sub)

    def bind(self, tape: ag.Tape) -> dict[str, ag.Variable]:
        return {k: tape.param(v, name=k) for k, v in self.parameters().items()}

    def apply(self, tape: ag.Tape, bound: dict[str, ag.Variable], x: ag.Variable) -> ag.Variable:
        h = x
        last = len(self.layers) - 1
        for i, layer in enumerate(self.layers):
            sub = {k.split(".", 2)[2]: v for k, v in bound.items()
                   if k.startswith(f"layers.{i}.")}
            h = layer.apply(tape, sub, h)
            if i != last:
                h = self._act(h)
        return h

    def forward(self, x: np.ndarray) -> np.ndarray:
        tape = ag.Tape()
        return self.apply(tape, self.bind(tape), tape.const(x)).value


def _glorot(rng: Rng, d: int, n: int, dtype) -> np.ndarray:
    s = np.sqrt(6.0 / (n + d))
    return rng.uniform(n * d, -s, s).reshape(d, n).astype(dtype)


class QuadraNetLayer:
    """Three-matrix quadratic baseline: z = (Wa x) * (Wb x) + Wc x [+ b]."""

    def __init__(self, n: int, d: int, seed: int = 0, bias: bool = False, dtype=np.float64):
        rng = Rng(seed)
        self.Wa = _glorot(rng.split(0), d, n, dtype)
        self.Wb = _glorot(rng.split(1), d, n, dtype)
        self.Wc = _glorot(rng.split(2), d, n, dtype)
        self.b = np.zeros(d, dtype=dtype) if bias else None
        self.n, self.d = n, d

    def parameters(self) -> dict[str, np.ndarray]:
        out = {"Wa": self.Wa, "Wb": self.Wb, "Wc": self.Wc}
        if self.b is not None:
            out["b"] = self.b
        return out

    def load_parameters(self, params) -> None:
        self.Wa, self.Wb, self.Wc = params["Wa"], params["Wb"], params["Wc"]
        if self.b is not None:
            self.b = params["b"]

    def bind(self, tape: ag.Tape) -> dict[str, ag.Variable]:
        return {k: tape.param(v, name=k) for k, v in self.parameters().items()}

    def apply(self, tape, bound, x: ag.Variable) -> ag.Variable:
        single = x.value.ndim == 1
        h = ag.promote_row(x) if single else x
        ha = ag.matmul(h, ag.transpose(bound["Wa"]))
        hb = ag.matmul(h, ag.transpose(bound["Wb"]))
        hc = ag.matmul(h, ag.transpose(bound["Wc"]))
        z = ag.add(ag.hadamard(ha, hb), hc)
        if self.b is not None:
            z = ag.add_row(z, bound["b"])
        return ag.squeeze_row(z) if single else z

    def forward(self, x: np.ndarray) -> np.ndarray:
        tape = ag.Tape()
        return self.apply(tape, self.bind(tape), tape.const(x)).value


class SwiGLULayer:
    """Gated baseline: z = (W1 x) * sigmoid(W1 x) * (W2 x)."""

    def __init__(self, n: int, d: int, seed: int = 0, dtype=np.float64):
        rng = Rng(seed)
        self.W1 = _glorot(rng.split(0), d, n, dtype)
        self.W2 = _glorot(rng.split(1), d, n, dtype)
        self.n, self.d = n, d

    def parameters(self) -> dict[str, np.ndarray]:
        return {"W1": self.W1, "W2": self.W2}

    def load_parameters(self, params) -> None:
        self.W1, self.W2 = params["W1"], params["W2"]

    def bind(self, tape: ag.Tape) -> dict[str, ag.Variable]:
        return {k: tape.param(v, name=k) for k, v in self.parameters().items()}

    def apply(self, tape, bound, x: ag.Variable) -> ag.Variable:
        single = x.value.ndim == 1
        h = ag.promote_row(x) if single else x
        h1 = ag.matmul(h, ag.transpose(bound["W1"]))
        h2 = ag.matmul(h, ag.transpose(bound["W2"]))
        z = ag.hadamard(ag.hadamard(h1, ag.sigmoid(h1)), h2)
        return ag.squeeze_row(z) if single else z

    def forward(self, x: np.ndarray) -> np.ndarray:
        tape = ag.Tape()
        return self.apply(tape, self.bind(tape), tape.const(x)).value


def mse(pred: ag.Variable, target: np.ndarray) -> ag.Variable:
    """Mean squared error over every element, built from taped primitives."""
    if pred.value.shape != target.shape:
        raise DimensionError(f"mse shape mismatch: {pred.value.shape} vs {target.shape}")
    neg = pred.tape.const(-target.astype(pred.value.dtype, copy=False))
    diff = ag.add(pred, neg)
    sq = ag.hadamard(diff, diff)
    return ag.scale(ag.reduce_sum(sq), 1.0 / max(target.size, 1))


cross_entropy = ag.cross_entropy


# ---------------------------------------------------------------------------
# optimizers
# ---------------------------------------------------------------------------

def _check_finite(name: str, g: np.ndarray) -> None:
    if not np.all(np.isfinite(g)):
        raise NumericError(f"non-finite gradient for parameter {name!r}")


@dataclass
class SGD:
    lr: float

    def __post_init__(self):
        if self.lr <= 0:
            raise ConfigError("learning rate must be positive")

    def step(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray]) -> dict[str, np.ndarray]:
        out = {}
        for name, w in params.items():
            g = grads[name]
            if g.shape != w.shape:
                raise DimensionError(f"gradient shape {g.shape} != param shape {w.shape} for {name!r}")
            _check_finite(name, g)
            out[name] = w - w.dtype.type(self.lr) * g.astype(w.dtype, copy=False)
        return out


@dataclass
class Adam:
    lr: float
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    _m: dict = field(default_factory=dict, repr=False)
    _v: dict = field(default_factory=dict, repr=False)
    _t: int = 0

    def __post_init__(self):
        if self.lr <= 0:
            raise ConfigError("learning rate must be positive")
        if not (0 < self.beta1 < 1 and 0 < self.beta2 < 1):
            raise ConfigError("betas must lie in (0, 1)")
        if self.eps <= 0:
            raise ConfigError("eps must be positive")

    def step(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray]) -> dict[str, np.ndarray]:
        self._t += 1
        t = self._t
        out = {}
        for name, w in params.items():
            g = grads[name].astype(w.dtype, copy=False)
            if g.shape != w.shape:
                raise DimensionError(f"gradient shape {g.shape} != param shape {w.shape} for {name!r}")
            _check_finite(name, g)
            dt = w.dtype.type
            m = self._m.get(name)
            v = self._v.get(name)
            if m is None:
                m = np.zeros_like(w)
                v = np.zeros_like(w)
            m = dt(self.beta1) * m + dt(1 - self.beta1) * g
            v = dt(self.beta2) * v + dt(1 - self.beta2) * (g * g)
            self._m[name], self._v[name] = m, v
            m_hat = m / dt(1 - self.beta1 ** t)
            v_hat = v / dt(1 - self.beta2 ** t)
            out[name] = w - dt(self.lr) * m_hat / (np.sqrt(v_hat) + dt(self.eps))
        return out


def matched_hidden_width(param_count, target: int, lo: int = 1, hi: int = 1 << 20) -> int:
    """Largest width whose parameter count stays <= target.

    ``param_count(width)`` must be nondecreasing in width.  Used to match
    baseline capacity to an enhanced model by adjusting the hidden dim.
    """
    if param_count(lo) > target:
        raise ConfigError(f"even width {lo} exceeds the target parameter count {target}")
    while param_count(hi) <= target:
        hi <<= 1
    while lo < hi:
        mid = (lo + hi + 1) // 2
        if param_count(mid) <= target:
            lo = mid
        else:
            hi = mid - 1
    return lo
