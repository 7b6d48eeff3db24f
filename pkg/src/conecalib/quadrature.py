"""Quadrature rules: cached Gauss-Legendre nodes and adaptive Simpson."""

from __future__ import annotations

import math
from functools import lru_cache
from typing import Callable

import numpy as np

__all__ = ["gauss_legendre", "gl_integrate", "adaptive_simpson", "QuadratureError"]


class QuadratureError(RuntimeError):
    pass


@lru_cache(maxsize=None)
def gauss_legendre(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights on ``[-1, 1]``."""
    x, w = np.polynomial.legendre.leggauss(int(n))
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def gl_integrate(f: Callable[[np.ndarray], np.ndarray], a, b, n: int = 20):
    """Fixed-order rule, vectorised over arrays of limits ``a`` and ``b``.

    ``f`` receives an array of shape ``(..., n)``.
    """
    x, w = gauss_legendre(n)
    a = np.asarray(a, dtype=float)[..., None]
    b = np.asarray(b, dtype=float)[..., None]
    half = 0.5 * (b - a)
    vals = f(0.5 * (a + b) + half * x)
    return np.sum(vals * w, axis=-1) * half[..., 0]


def adaptive_simpson(f: Callable[[float], float], a: float, b: float, tol: float = 1e-12,
                     max_depth: int = 60) -> float:
    """Adaptive Simpson rule with Richardson correction and absolute tolerance."""
    if a == b:
        return 0.0
    if b < a:
        return -adaptive_simpson(f, b, a, tol, max_depth)
    fa, fb = f(a), f(b)
    m = 0.5 * (a + b)
    fm = f(m)
    whole = (b - a) * (fa + 4.0 * fm + fb) / 6.0
    total = 0.0
    # explicit stack: (a, b, fa, fm, fb, whole, tol, depth)
    stack = [(a, b, fa, fm, fb, whole, tol, 0)]
    while stack:
        a, b, fa, fm, fb, whole, eps, depth = stack.pop()
        m = 0.5 * (a + b)
        lm, rm = 0.5 * (a + m), 0.5 * (m + b)
        flm, frm = f(lm), f(rm)
        left = (m - a) * (fa + 4.0 * flm + fm) / 6.0
        right = (b - m) * (fm + 4.0 * frm + fb) / 6.0
        delta = left + right - whole
        if abs(delta) <= 15.0 * eps or depth >= max_depth:
            if depth >= max_depth and abs(delta) > 15.0 * eps:
                raise QuadratureError(f"adaptive Simpson did not converge near [{a}, {b}]")
            total += left + right + delta / 15.0
        else:
            stack.append((m, b, fm, frm, fb, right, 0.5 * eps, depth + 1))
            stack.append((a, m, fa, flm, fm, left, 0.5 * eps, depth + 1))
    if not math.isfinite(total):
        raise QuadratureError("integral is not finite")
    return total
