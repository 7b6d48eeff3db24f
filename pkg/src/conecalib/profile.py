"""Angular profiles, the mollifier and smooth max/min gluing.

The smooth step ``H`` on ``[-1, 1]`` satisfies ``H(z) + H(-z) = 1``;
``S(z) = int_{-1}^z H`` is convex with ``S(z) >= max(z, 0)``.  The gluing
operators

    smax(u, v) = u + eps * S((v - u) / eps)
    smin(u, v) = u - eps * S((u - v) / eps)

have derivative ``(1 - H) u' + H v'``: a convex combination of the slopes,
which is what makes them safe for differential inequalities of the form
``y^2 + (y'/a)^2 <= E``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Protocol, Sequence

import numpy as np

from .quadrature import adaptive_simpson, gauss_legendre

__all__ = [
    "Smoothness",
    "AngularProfile",
    "PiecewiseFunction",
    "Mollified",
    "bump",
    "bump_mass",
    "smooth_step",
    "smooth_step_integral",
    "smax",
    "smin",
    "mollify",
]


class Smoothness(str, enum.Enum):
    LIPSCHITZ = "Lipschitz"
    SMOOTH = "Smooth"


@dataclass(frozen=True)
class AngularProfile:
    """Ordered samples ``(theta, value, derivative)`` of a function of angle."""

    theta: np.ndarray
    value: np.ndarray
    derivative: np.ndarray
    smoothness: Smoothness = Smoothness.SMOOTH

    def __post_init__(self):
        th = np.asarray(self.theta, dtype=float)
        va = np.asarray(self.value, dtype=float)
        de = np.asarray(self.derivative, dtype=float)
        if th.ndim != 1 or th.shape != va.shape or th.shape != de.shape:
            raise ValueError("theta, value and derivative must be 1-D arrays of equal length")
        if th.size < 2 or np.any(np.diff(th) <= 0):
            raise ValueError("theta must be strictly increasing with at least two samples")
        object.__setattr__(self, "theta", th)
        object.__setattr__(self, "value", va)
        object.__setattr__(self, "derivative", de)

    @classmethod
    def constant(cls, theta: Sequence[float], c: float,
                 smoothness: Smoothness = Smoothness.SMOOTH) -> "AngularProfile":
        th = np.asarray(theta, dtype=float)
        return cls(th, np.full_like(th, float(c)), np.zeros_like(th), smoothness)

    @classmethod
    def from_function(cls, f, df, theta, smoothness=Smoothness.SMOOTH) -> "AngularProfile":
        th = np.asarray(theta, dtype=float)
        return cls(th, np.asarray(f(th), dtype=float), np.asarray(df(th), dtype=float), smoothness)

    def __call__(self, t):
        """Cubic Hermite (smooth) or linear (Lipschitz) interpolation."""
        return self._interp(t, False)

    def slope(self, t):
        return self._interp(t, True)

    def _interp(self, t, deriv):
        th, v, d = self.theta, self.value, self.derivative
        s = np.asarray(t, dtype=float)
        i = np.clip(np.searchsorted(th, s, side="right") - 1, 0, th.size - 2)
        h = th[i + 1] - th[i]
        u = np.clip((s - th[i]) / h, 0.0, 1.0)
        if self.smoothness is Smoothness.LIPSCHITZ:
            out = (v[i + 1] - v[i]) / h if deriv else v[i] + u * (v[i + 1] - v[i])
        elif deriv:
            out = ((6 * u * u - 6 * u) * (v[i] - v[i + 1]) + (3 * u * u - 4 * u + 1) * d[i] * h
                   + (3 * u * u - 2 * u) * d[i + 1] * h) / h
        else:
            out = ((1 + 2 * u) * (1 - u) ** 2 * v[i] + u * (1 - u) ** 2 * h * d[i]
                   + u * u * (3 - 2 * u) * v[i + 1] + u * u * (u - 1) * h * d[i + 1])
        return float(out) if s.ndim == 0 else out

    def fd_mismatch(self) -> float:
        """Largest gap between sampled derivatives and central differences,
        relative to ``1 + max|derivative|``."""
        th, v, d = self.theta, self.value, self.derivative
        if th.size < 3:
            return 0.0
        fd = (v[2:] - v[:-2]) / (th[2:] - th[:-2])
        return float(np.max(np.abs(fd - d[1:-1])) / (1.0 + np.max(np.abs(d))))

    def to_rows(self):
        return list(zip(self.theta.tolist(), self.value.tolist(), self.derivative.tolist()))


class PiecewiseFunction(Protocol):
    """What :class:`Mollified` needs from the function being smoothed."""

    breakpoints: tuple[float, ...]

    def value(self, t: np.ndarray) -> np.ndarray: ...

    def derivative(self, t: np.ndarray) -> np.ndarray: ...


# -- bump kernel ----------------------------------------------------------------

def bump(v):
    """Unnormalised even bump ``exp(-1/(1 - v^2))`` supported on ``(-1, 1)``."""
    v = np.asarray(v, dtype=float)
    inside = np.abs(v) < 1.0
    w = np.where(inside, 1.0 - v * v, 1.0)
    return np.where(inside, np.exp(-1.0 / w), 0.0)


_BUMP_MASS: float | None = None


def bump_mass() -> float:
    global _BUMP_MASS
    if _BUMP_MASS is None:
        _BUMP_MASS = 2.0 * adaptive_simpson(lambda v: float(bump(v)), 0.0, 1.0, 1e-15)
    return _BUMP_MASS


# -- smooth step and gluing -------------------------------------------------------

def _b(z):
    z = np.asarray(z, dtype=float)
    pos = z > -1.0
    return np.where(pos, np.exp(-1.0 / np.where(pos, 1.0 + z, 1.0)), 0.0)


def smooth_step(z):
    """``H``: 0 for ``z <= -1``, 1 for ``z >= 1``, ``H(z) + H(-z) = 1``."""
    z = np.asarray(z, dtype=float)
    a, b = _b(z), _b(-z)
    out = a / (a + b)
    return float(out) if out.ndim == 0 else out


def smooth_step_integral(z):
    """``S(z) = int_{-1}^z H``: 0 below -1 and equal to ``z`` above 1."""
    z = np.asarray(z, dtype=float)
    zc = np.clip(z, -1.0, 1.0)
    x, w = gauss_legendre(48)
    half = 0.5 * (zc + 1.0)
    nodes = -1.0 + half[..., None] * (x + 1.0)
    inner = np.sum(smooth_step(nodes) * w, axis=-1) * half
    out = np.where(z >= 1.0, z, np.where(z <= -1.0, 0.0, inner))
    return float(out) if out.ndim == 0 else out


def smax(u, du, v, dv, eps: float):
    """Smooth maximum of ``u`` and ``v`` and its derivative."""
    z = (np.asarray(v) - u) / eps
    h = smooth_step(z)
    return u + eps * smooth_step_integral(z), (1.0 - h) * du + h * dv


def smin(u, du, v, dv, eps: float):
    """Smooth minimum of ``u`` and ``v`` and its derivative."""
    z = (np.asarray(u) - v) / eps
    h = smooth_step(z)
    return u - eps * smooth_step_integral(z), (1.0 - h) * du + h * dv


# -- mollification ------------------------------------------------------------------

class _Sampled:
    """Adapter so a Lipschitz :class:`AngularProfile` can be mollified."""

    def __init__(self, prof: AngularProfile):
        self.prof = prof
        self.breakpoints = tuple(prof.theta.tolist()) if prof.theta.size <= 1000 else ()
        self.constant_pieces = ()

    def value(self, t):
        return self.prof(t)

    def derivative(self, t):
        return self.prof.slope(t)


class Mollified:
    """Convolution of a piecewise function with the rescaled bump.

    Each evaluation splits the kernel window at the breakpoints of the base
    function and applies a 64-point Gauss-Legendre rule per piece; the
    result is divided by the mass the same rule assigns to the kernel, so
    constants are reproduced exactly.
    """

    NODES = 64

    def __init__(self, base, eps: float):
        if not eps > 0:
            raise ValueError("eps must be positive")
        self.base = base
        self.eps = float(eps)
        self.breakpoints = tuple(sorted(getattr(base, "breakpoints", ())))
        self.constant_pieces = tuple(getattr(base, "constant_pieces", ()))

    def _pieces(self, t):
        eps = self.eps
        t = np.atleast_1d(np.asarray(t, dtype=float))
        # kernel variable y in [-eps, eps]; the base is evaluated at t - y
        cuts = [np.full_like(t, -eps)]
        for bp in self.breakpoints:
            cuts.append(np.clip(t - bp, -eps, eps))
        cuts.append(np.full_like(t, eps))
        cuts = np.sort(np.stack(cuts, axis=-1), axis=-1)
        if isinstance(self.base, _Sampled) and not self.breakpoints:
            # densely sampled input: fixed sub-pieces instead of every knot
            cuts = np.linspace(-eps, eps, 33)[None, :].repeat(t.size, axis=0)
        return t, cuts

    def _convolve(self, t, which):
        t, cuts = self._pieces(t)
        x, w = gauss_legendre(self.NODES)
        a, b = cuts[:, :-1, None], cuts[:, 1:, None]
        half = 0.5 * (b - a)
        y = 0.5 * (a + b) + half * x
        k = bump(y / self.eps) * w * half
        f = self.base.value if which == 0 else self.base.derivative
        vals = f(t[:, None, None] - y)
        return np.sum(vals * k, axis=(1, 2)) / np.sum(k, axis=(1, 2))

    def _eval(self, t, which):
        s = np.asarray(t, dtype=float)
        flat = np.atleast_1d(s)
        out = np.empty_like(flat)
        todo = np.ones(flat.shape, dtype=bool)
        for lo, hi, c in self.constant_pieces:
            sel = (flat - self.eps >= lo) & (flat + self.eps <= hi)
            out[sel] = c if which == 0 else 0.0
            todo &= ~sel
        if todo.any():
            out[todo] = self._convolve(flat[todo], which)
        return float(out[0]) if s.ndim == 0 else out

    def value(self, t):
        return self._eval(t, 0)

    def derivative(self, t):
        return self._eval(t, 1)

    def sample(self, theta) -> AngularProfile:
        th = np.asarray(theta, dtype=float)
        return AngularProfile(th, self.value(th), self.derivative(th), Smoothness.SMOOTH)


def mollify(profile, eps: float, theta: Sequence[float] | None = None) -> AngularProfile:
    """Smooth a Lipschitz profile (or piecewise function) with the even bump.

    ``profile`` is an :class:`AngularProfile` or any object exposing
    ``value``, ``derivative`` and ``breakpoints``.  The result is sampled on
    ``theta`` (default: the input's own samples).
    """
    if isinstance(profile, AngularProfile):
        base = _Sampled(profile)
        theta = profile.theta if theta is None else theta
    else:
        base = profile
        if theta is None:
            raise ValueError("theta is required when mollifying a function object")
    return Mollified(base, eps).sample(theta)

