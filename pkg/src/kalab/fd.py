"""Central finite-difference stencils used by every field differentiation.

Steps scale with the base coordinate, h_i = h * (1 + |p_i|), and stencils of
order 2 and 4 are provided.  Second derivatives optionally apply one level of
Richardson extrapolation.
"""
from __future__ import annotations

from typing import Callable

import numpy as np

# offset -> weight tables for f' ~ sum w_s f(x + s h) / h
_D1 = {
    2: ((-1, -0.5), (1, 0.5)),
    4: ((-2, 1.0 / 12), (-1, -8.0 / 12), (1, 8.0 / 12), (2, -1.0 / 12)),
}
# and f'' ~ sum w_s f(x + s h) / h^2
_D2 = {
    2: ((-1, 1.0), (0, -2.0), (1, 1.0)),
    4: ((-2, -1.0 / 12), (-1, 16.0 / 12), (0, -30.0 / 12), (1, 16.0 / 12), (2, -1.0 / 12)),
}

DEFAULT_STEP = 1e-3
DEFAULT_ORDER = 4


def step_for(p: np.ndarray, i: int, h: float) -> float:
    return h * (1.0 + abs(float(p[i])))


def partial(f: Callable, p: np.ndarray, i: int, h: float = DEFAULT_STEP, order: int = DEFAULT_ORDER):
    """d f / d p_i by a central stencil; f may return any ndarray."""
    p = np.asarray(p, float)
    hi = step_for(p, i, h)
    acc = None
    for s, w in _D1[order]:
        q = p.copy()
        q[i] += s * hi
        val = w * np.asarray(f(q))
        acc = val if acc is None else acc + val
    return acc / hi


def gradient(f: Callable, p: np.ndarray, h: float = DEFAULT_STEP, order: int = DEFAULT_ORDER) -> np.ndarray:
    """Stack of partials along axis 0: out[i] = d f / d p_i."""
    return np.stack([partial(f, p, i, h, order) for i in range(len(p))])


def second_partial(f: Callable, p: np.ndarray, i: int, j: int, h: float = DEFAULT_STEP,
                   order: int = DEFAULT_ORDER, richardson: bool = False):
    """d^2 f / d p_i d p_j; mixed partials nest two first-derivative stencils."""
    p = np.asarray(p, float)
    if richardson:
        d1 = second_partial(f, p, i, j, h, order, richardson=False)
        d2 = second_partial(f, p, i, j, h / 2.0, order, richardson=False)
        k = 2 ** order
        return (k * d2 - d1) / (k - 1)
    if i == j:
        hi = step_for(p, i, h)
        acc = None
        for s, w in _D2[order]:
            q = p.copy()
            q[i] += s * hi
            val = w * np.asarray(f(q))
            acc = val if acc is None else acc + val
        return acc / hi ** 2
    hj = step_for(p, j, h)
    acc = None
    for s, w in _D1[order]:
        q = p.copy()
        q[j] += s * hj
        val = w * np.asarray(partial(f, q, i, h, order))
        acc = val if acc is None else acc + val
    return acc / hj


def hessian(f: Callable, p: np.ndarray, h: float = DEFAULT_STEP, order: int = DEFAULT_ORDER) -> np.ndarray:
    """Full symmetric Hessian of a scalar-valued f."""
    d = len(p)
    H = np.zeros((d, d))
    for i in range(d):
        H[i, i] = second_partial(f, p, i, i, h, order)
        for j in range(i + 1, d):
            H[i, j] = H[j, i] = second_partial(f, p, i, j, h, order)
    return H


def directional(f: Callable, p: np.ndarray, v: np.ndarray, h: float = DEFAULT_STEP,
                order: int = DEFAULT_ORDER):
    """Derivative along v, complex-linear in v (v may be a complex vector)."""
    parts = gradient(f, p, h, order)
    return np.einsum("i,i...->...", np.asarray(v), parts)


def richardson(coarse, fine, order: int):
    """One extrapolation level for a method of the given order run at h and h/2."""
    k = 2 ** order
    return (k * np.asarray(fine) - np.asarray(coarse)) / (k - 1)
