"""Band-sparse quadratic augmentation of a linear layer.

A plain layer computes y = W x + b.  The enhanced layer reuses that same
linear response y once more to form cheap quadratic cross terms:

    z = (L y) * y + y + b

where L is a d-by-d coupling matrix restricted to a few circularly
wrapped diagonals.  Each active diagonal is a "shift" r with its own
trainable d-vector, so

    L y = sum_r  lambda_r * roll(y, r)

costs k*d parameters and O(k*d) work instead of d*d.  Shift 0 would
couple each coordinate to itself (square terms, which blow up far more
easily than cross terms), so shifts that reduce to 0 mod d are rejected
unless explicitly overridden.

``quadratic_reference`` and ``dense_lambda_oracle`` are independent
reference implementations used to verify the fast path; they evaluate
the unfactored per-output bilinear forms and the materialized coupling
matrix directly through numpy.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import autograd as ag
from . import tensor as T
from .errors import ConfigError, DimensionError, NumericError
from .rng import Rng


def _canonical_shifts(shifts) -> tuple[int, ...]:
    out = tuple(int(r) for r in shifts)
    if len(set(out)) != len(out):
        raise ConfigError(f"duplicate shifts in {out}")
    return out


@dataclass
class BandLambda:
    """Trainable coupling restricted to circular diagonals of a d x d matrix.

    ``values[r]`` is the d-vector multiplying roll(y, r).  Literal shift 0
    (self-coupling / square terms) is rejected unless
    ``allow_square_terms`` is set.
    """

    d: int
    shifts: tuple[int, ...]
    values: dict[int, np.ndarray] = field(default_factory=dict)
    allow_square_terms: bool = False

    def __post_init__(self):
        if self.d < 1:
            raise ConfigError(f"dimension must be >= 1, got {self.d}")
        self.shifts = _canonical_shifts(self.shifts)
        if 0 in self.shifts and not self.allow_square_terms:
            raise ConfigError("shift 0 produces square terms; pass allow_square_terms=True to permit it")
        for r in self.shifts:
            vec = self.values.get(r)
            if vec is None:
                raise ConfigError(f"missing coefficient vector for shift {r}")
            if vec.shape != (self.d,):
                raise DimensionError(f"shift {r}: vector shape {vec.shape} != ({self.d},)")

    @classmethod
    def zeros(cls, d: int, shifts, dtype=np.float64, allow_square_terms: bool = False) -> "BandLambda":
        shifts = _canonical_shifts(shifts)
        vals = {r: np.zeros(d, dtype=dtype) for r in shifts}
        return cls(d=d, shifts=shifts, values=vals, allow_square_terms=allow_square_terms)

    @property
    def k(self) -> int:
        return len(self.shifts)

    @property
    def param_count(self) -> int:
        return self.k * self.d


def apply_lambda(lam: BandLambda, y: np.ndarray) -> np.ndarray:
    """Band coupling applied to y [..., d]: sum_r lambda_r * roll(y, r).

    Pure array evaluation; the differentiable path inside QELayer.apply
    runs the identical kernel sequence, so the two agree bitwise.  An
    empty shift set returns zeros.
    """
    if y.shape[-1] != lam.d:
        raise DimensionError(f"last axis {y.shape[-1]} != coupling dimension {lam.d}")
    out = None
    for r in lam.shifts:
        term = T.mul_row(T.roll(y, r), lam.values[r].astype(y.dtype, copy=False))
        out = term if out is None else T.add(out, term)
    return out if out is not None else T.zeros(y.shape, dtype=y.dtype)


def dense_lambda_oracle(lam: BandLambda) -> np.ndarray:
    """Materialize the coupling as a dense d x d matrix.

    M[i, (i + r) mod d] accumulates lambda_r[i]; shifts that collide
    modulo d add up, preserving apply_lambda(lam, y) == M @ y.
    """
    d = lam.d
    m = np.zeros((d, d), dtype=next(iter(lam.values.values())).dtype if lam.values else np.float64)
    rows = np.arange(d)
    for r in lam.shifts:
        np.add.at(m, (rows, (rows + r) % d), lam.values[r])
    return m


@dataclass
class QELayer:
    """Linear layer with an optional quadratic enhancer stage.

    With the enhancer off (or every coefficient zero) the layer is
    exactly z = W x + b.
    """

    W: np.ndarray            # [d, n]
    b: np.ndarray            # [d]
    lam: BandLambda
    enhancer: bool = True
    name: str = "qe"

    def __post_init__(self):
        if self.W.ndim != 2:
            raise DimensionError(f"W must be a matrix, got shape {self.W.shape}")
        d = self.W.shape[0]
        if self.b.shape != (d,):
            raise DimensionError(f"b shape {self.b.shape} != ({d},)")
        if self.lam.d != d:
            raise DimensionError(f"coupling dimension {self.lam.d} != output dimension {d}")
        if self.enhancer:
            for r in self.lam.shifts:
                if r % d == 0 and not self.lam.allow_square_terms:
                    raise ConfigError(
                        f"shift {r} reduces to 0 mod d={d} and would produce square terms; "
                        "use allow_square_terms to override")

    @property
    def n(self) -> int:
        return self.W.shape[1]

    @property
    def d(self) -> int:
        return self.W.shape[0]

    @property
    def k(self) -> int:
        return self.lam.k if self.enhancer else 0

    def parameters(self) -> dict[str, np.ndarray]:
        out = {"W": self.W, "b": self.b}
        if self.enhancer:
            for r in self.lam.shifts:
                out[f"lam[{r}]"] = self.lam.values[r]
        return out

    def load_parameters(self, params: dict[str, np.ndarray]) -> None:
        self.W = params["W"]
        self.b = params["b"]
        if self.enhancer:
            for r in self.lam.shifts:
                self.lam.values[r] = params[f"lam[{r}]"]

    def bind(self, tape: ag.Tape, prefix: str = "") -> dict[str, ag.Variable]:
        return {k: tape.param(v, name=prefix + k) for k, v in self.parameters().items()}

    def apply(self, tape: ag.Tape, bound: dict[str, ag.Variable], x: ag.Variable) -> ag.Variable:
        """Differentiable forward pass for x of shape [n] or [batch, n].

        The linear response is computed once and reused by both the
        quadratic and the residual path.
        """
        single = x.value.ndim == 1
        if x.value.shape[-1] != self.n:
            raise DimensionError(f"input trailing dim {x.value.shape[-1]} != {self.n}")
        x2d = ag.promote_row(x) if single else x
        y = ag.matmul(x2d, ag.transpose(bound["W"]))
        if self.enhancer and self.lam.shifts:
            acc = None
            for r in self.lam.shifts:
                term = ag.mul_row(ag.roll(y, r), bound[f"lam[{r}]"])
                acc = term if acc is None else ag.add(acc, term)
            z = ag.add(ag.hadamard(acc, y), y)
        else:
            z = y
        z = ag.add_row(z, bound["b"])
        out = ag.squeeze_row(z) if single else z
        if not np.all(np.isfinite(out.value)):
            raise NumericError(f"non-finite output from layer {self.name!r}")
        return out

    def forward(self, x: np.ndarray) -> np.ndarray:
        """Array-in, array-out convenience wrapper over a throwaway tape."""
        tape = ag.Tape()
        return self.apply(tape, self.bind(tape), tape.const(x)).value


def qe_forward(layer: QELayer, x: np.ndarray) -> np.ndarray:
    """Evaluate z = (L y) * y + y + b with y = W x computed once."""
    return layer.forward(x)


def init_qelayer(n: int, d: int, shifts, seed: int, scale: float | None = None,
                 dtype=np.float64, enhancer: bool = True, name: str = "qe") -> QELayer:
    """Fresh layer, fully determined by the seed.

    W is uniform in [-s, s] with s = sqrt(6 / (n + d)); the bias and all
    coupling coefficients start at zero, so a fresh layer is exactly its
    linear baseline.
    """
    if n < 1 or d < 1:
        raise ConfigError(f"layer dims must be >= 1, got n={n}, d={d}")
    s = np.sqrt(6.0 / (n + d)) if scale is None else float(scale)
    rng = Rng(seed)
    w = rng.uniform(n * d, -s, s).reshape(d, n).astype(dtype)
    lam = BandLambda.zeros(d, shifts, dtype=dtype)
    return QELayer(W=w, b=np.zeros(d, dtype=dtype), lam=lam, enhancer=enhancer, name=name)


# ---------------------------------------------------------------------------
# independent references (kept deliberately separate from the fast path)
# ---------------------------------------------------------------------------

def quadratic_reference(x: np.ndarray, w: np.ndarray, b: np.ndarray,
                        vs: np.ndarray) -> np.ndarray:
    """Unfactored quadratic transform: z_i = x^T V_i x + (W x)_i + b_i.

    ``vs`` stacks the d per-output matrices as [d, n, n].  Evaluation goes
    through numpy's own matmul, independent of the package kernels.
    """
    d, n = w.shape
    if vs.shape != (d, n, n):
        raise DimensionError(f"expected V stack of shape {(d, n, n)}, got {vs.shape}")
    if x.shape != (n,):
        raise DimensionError(f"expected input of shape ({n},), got {x.shape}")
    quad = np.array([x @ vs[i] @ x for i in range(d)], dtype=x.dtype)
    return quad + w @ x + b


def rank1_reference(x: np.ndarray, p: np.ndarray, q: np.ndarray,
                    w: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Factored form (P x) * (Q x) + W x + b via plain numpy."""
    return (p @ x) * (q @ x) + w @ x + b


def rank1_v_stack(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Per-output rank-1 matrices V_i = p_i q_i^T stacked as [d, n, n]."""
    return np.einsum("in,im->inm", p, q)


def layer_v_stack(layer: QELayer) -> tuple[np.ndarray, np.ndarray]:
    """(P, Q) realizing the layer's quadratic term: P = L W, Q = W."""
    m = dense_lambda_oracle(layer.lam)
    return m @ layer.W, layer.W
