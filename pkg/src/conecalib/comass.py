"""Closed forms for the trial potential ``f = r^a phi^beta / a``.

With ``m = 2*beta - 1`` and ``g = q cot(t) - p tan(t)`` the squared comass of
``df`` is

    psi = phi^m * (1 + (beta/a)^2 g^2),     phi = cos^p sin^q / tau

and ``psi' = phi^m * g * eta`` where ``eta`` is the bracket returned by
:func:`eta`.  Everything is vectorised over ``theta``.

Type I rows have no cosine factor; they are handled by using a cosine
exponent of zero (``MetricParams.cos_exp``) and ``tau = 1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .catalog import Family, MetricParams

__all__ = [
    "ComassPoint",
    "QuadraticTest",
    "phi",
    "psi",
    "eta",
    "slope_factor",
    "psi_prime",
    "evaluate",
    "endpoint_limit",
    "endpoint_exponents",
    "quadratic_test",
    "sigma_bound",
    "check_beta",
]


def check_beta(beta: float) -> float:
    beta = float(beta)
    if not beta > 0.5:
        raise ValueError(f"beta must exceed 1/2 (got {beta})")
    return beta


def _theta(theta):
    return np.asarray(theta, dtype=float)


def _out(x, scalar):
    return float(x) if scalar else x


def phi(theta, params: MetricParams):
    """Normalised volume ``cos^p sin^q / tau`` (``sin^q`` for type I rows)."""
    t = _theta(theta)
    with np.errstate(divide="ignore"):
        logv = params.qf * np.log(np.sin(t)) - params.log_tau
        if not params.is_type_i:
            logv = logv + params.pf * np.log(np.cos(t))
    return _out(np.exp(logv), t.ndim == 0)


def slope_factor(theta, params: MetricParams):
    """``g = q cot(theta) - p tan(theta)``, the log-derivative of ``phi``."""
    t = _theta(theta)
    with np.errstate(divide="ignore"):
        g = params.qf / np.tan(t) - params.cos_exp * np.tan(t)
    return _out(g, t.ndim == 0)


def endpoint_exponents(params: MetricParams, beta: float) -> tuple[float, float]:
    """Exponents ``(q*m, p*m)`` governing ``psi`` at the left/right ends.

    ``psi`` tends to 0 when the exponent exceeds 2, to a finite positive limit
    when it equals 2 and diverges below 2.  For type I rows both ends are
    governed by ``q``.
    """
    m = 2.0 * check_beta(beta) - 1.0
    left = params.qf * m
    right = left if params.is_type_i else params.pf * m
    return left, right


def endpoint_limit(params: MetricParams, beta: float, side: str) -> float:
    """Limit of ``psi`` at the ``"left"`` or ``"right"`` end of the domain."""
    if side not in ("left", "right"):
        raise ValueError("side must be 'left' or 'right'")
    beta = check_beta(beta)
    m = 2.0 * beta - 1.0
    expo = endpoint_exponents(params, beta)[0 if side == "left" else 1]
    exact = _exact_exponent(params, beta, side)
    if exact is not None:
        if exact > 2:
            return 0.0
        if exact < 2:
            return math.inf
    elif not math.isclose(expo, 2.0, rel_tol=0, abs_tol=1e-12):
        return 0.0 if expo > 2 else math.inf
    n = params.qf if side == "left" or params.is_type_i else params.pf
    return (beta * n / params.af) ** 2 * math.exp(-m * params.log_tau)


def _exact_exponent(params, beta, side):
    try:
        b = Fraction(str(beta))
    except ValueError:
        return None
    n = params.q if side == "left" or params.is_type_i else params.p
    return n * (2 * b - 1)


def psi(theta, params: MetricParams, beta: float):
    """Squared comass of ``df``; exact endpoints return the analytic limit.

    Divergent endpoints come back as ``inf`` rather than raising.
    """
    beta = check_beta(beta)
    t = _theta(theta)
    scalar = t.ndim == 0
    t = np.atleast_1d(t)
    m = 2.0 * beta - 1.0
    kb = (beta / params.af) ** 2
    q = params.qf
    lo, hi = params.domain
    at_lo = t <= lo
    at_hi = t >= hi
    inner = ~(at_lo | at_hi)
    ti = np.where(inner, t, 0.5 * (lo + hi))
    c, s = np.cos(ti), np.sin(ti)
    ls = np.log(s)
    if params.is_type_i:
        val = np.exp((q * m - 2.0) * ls) * (s * s + kb * q * q * c * c)
    else:
        p = params.pf
        lc = np.log(c)
        h = q * c * c - p * s * s
        val = np.exp((q * m - 2.0) * ls - m * params.log_tau) * (
            np.exp(p * m * lc) * s * s + kb * np.exp((p * m - 2.0) * lc) * h * h)
    out = np.where(inner, val, 0.0)
    if at_lo.any():
        out = np.where(at_lo, endpoint_limit(params, beta, "left"), out)
    if at_hi.any():
        out = np.where(at_hi, endpoint_limit(params, beta, "right"), out)
    return float(out[0]) if scalar else out


def eta(theta, params: MetricParams, beta: float):
    """The bracket ``eta_beta`` with ``psi' = phi^m * g * eta``."""
    beta = check_beta(beta)
    t = _theta(theta)
    m = 2.0 * beta - 1.0
    kb = (beta / params.af) ** 2
    p, q = params.cos_exp, params.qf
    const = m - 2.0 * kb * (m * p * q + p + q)
    with np.errstate(divide="ignore"):
        cot2 = 1.0 / np.tan(t) ** 2
    val = const + kb * (m * q * q - 2.0 * q) * cot2
    if p:
        val = val + kb * (m * p * p - 2.0 * p) * np.tan(t) ** 2
    return _out(val, t.ndim == 0)


def psi_prime(theta, params: MetricParams, beta: float):
    m = 2.0 * check_beta(beta) - 1.0
    return phi(theta, params) ** m * slope_factor(theta, params) * eta(theta, params, beta)


@dataclass(frozen=True)
class ComassPoint:
    theta: float
    psi: float
    eta: float
    phi: float


def evaluate(theta: float, params: MetricParams, beta: float) -> ComassPoint:
    return ComassPoint(float(theta), psi(theta, params, beta), eta(theta, params, beta),
                       phi(theta, params))


@dataclass(frozen=True)
class QuadraticTest:
    """``4 a^2 eta tan^2 = A Y^2 + B Y + C`` with ``Y = tan^2``, exact."""

    A: Fraction
    B: Fraction
    C: Fraction
    discriminant: Fraction

    @property
    def certifies_positive(self) -> bool:
        # A > 0 and a negative discriminant force C > 0 as well
        return self.A > 0 and self.discriminant < 0


def _as_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    return Fraction(str(float(x)))


def quadratic_test(params: MetricParams, beta: float = 1) -> QuadraticTest:
    b = _as_fraction(beta)
    if b <= Fraction(1, 2):
        raise ValueError("beta must exceed 1/2")
    m = 2 * b - 1
    p = Fraction(0) if params.family is Family.TYPE_I else params.p
    q, a = params.q, params.alpha
    A = 4 * b * b * (m * p * p - 2 * p)
    B = 4 * a * a * m - 8 * b * b * (m * p * q + p + q)
    C = 4 * b * b * (m * q * q - 2 * q)
    return QuadraticTest(A, B, C, B * B - 4 * A * C)


def sigma_bound(params: MetricParams) -> Fraction:
    """``(S-2)(S-18)`` with ``S = p + q``: a lower bound for ``4 a^2 eta_1``.

    Valid for the product-of-spheres row only, where ``2a = p + q + 2``.
    """
    if params.is_type_i or params.l != params.p + params.q:
        raise ValueError("sigma_bound applies to row-1 metrics (l = p + q) only")
    sig = params.p + params.q
    return (sig - 2) * (sig - 18)
