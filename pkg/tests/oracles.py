"""Independent reference implementations used only by the test suite.

Everything here is deliberately written against numpy/scipy directly,
with its own conventions, so agreement with the package localizes bugs
instead of sharing them.
"""

import numpy as np
from scipy.optimize import linprog


def matmul_triple_loop(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Scalar triple loop with j-innermost sequential accumulation.

    Matches the package matmul contract operation for operation, so the
    comparison is exact (0 ulp), not approximate.
    """
    r, c = a.shape
    c2, k = b.shape
    assert c == c2
    out = np.zeros((r, k), dtype=a.dtype)
    for i in range(r):
        for l in range(k):
            acc = a.dtype.type(0)
            for j in range(c):
                acc = acc + a[i, j] * b[j, l]
            out[i, l] = acc
    return out


def naive_cross_entropy(logits: np.ndarray, labels: np.ndarray) -> float:
    """Unstabilized softmax cross-entropy in extended precision."""
    z = logits.astype(np.longdouble)
    probs = np.exp(z) / np.exp(z).sum(axis=1, keepdims=True)
    picked = probs[np.arange(len(labels)), labels]
    return float(-np.log(picked).mean())


def separable_subset(points: np.ndarray, signs: np.ndarray, subset: list[int]) -> bool:
    """LP feasibility: does an affine function classify every point in the
    subset correctly (with unit margin)?"""
    if not subset:
        return True
    dim = points.shape[1]
    # variables (u, c); constraints -s_i (u . x_i + c) <= -1
    a_ub = np.array([[-signs[i] * points[i, j] for j in range(dim)] + [-signs[i]]
                     for i in subset])
    b_ub = -np.ones(len(subset))
    res = linprog(c=np.zeros(dim + 1), A_ub=a_ub, b_ub=b_ub,
                  bounds=[(None, None)] * (dim + 1), method="highs")
    return res.status == 0


def linear_cap_accuracy(points: np.ndarray, labels: np.ndarray) -> float:
    """Exhaustive upper bound on affine-classifier accuracy.

    Checks every subset of points for strict linear separability and
    returns the largest correctly-classifiable fraction.  Exponential in
    the point count; meant for tiny datasets like the XOR corners.
    """
    n = len(points)
    assert n <= 16, "exhaustive search only for tiny datasets"
    signs = 2.0 * labels - 1.0
    best = 0
    for mask in range(1 << n):
        subset = [i for i in range(n) if mask >> i & 1]
        if len(subset) <= best:
            continue
        if separable_subset(points, signs, subset):
            best = len(subset)
    return best / n


def linear_floor_mse(x: np.ndarray, y: np.ndarray) -> float:
    """In-sample MSE of the best affine fit, solved via normal equations."""
    a = np.concatenate([x, np.ones((len(x), 1))], axis=1)
    theta = np.linalg.solve(a.T @ a, a.T @ y)
    resid = a @ theta - y
    return float(np.mean(resid ** 2))


def fused_qe_input_grad(shifts, lam_values: dict, y: np.ndarray, g: np.ndarray) -> np.ndarray:
    """Closed-form input gradient of z = (L y) * y + y (bias omitted).

    dL/dy = g * (L y) + sum_r shift_back(lam_r * g * y, r) + g, where the
    coupling L y and its adjoint are evaluated directly with np.roll.
    The package forward convention out[i] = v[(i+r) % d] is np.roll(v, -r),
    so its adjoint is np.roll(., +r).
    """
    ly = np.zeros_like(y)
    for r in shifts:
        ly += lam_values[r] * np.roll(y, -r)
    adj = np.zeros_like(y)
    for r in shifts:
        adj += np.roll(lam_values[r] * g * y, r)
    return g * ly + adj + g
