"""Smooth deformations removing the singular orbits of row-1 calibrations.

The potential ``f = C a^-1 r^a c^k s^t`` (with ``k = beta p``, ``t = beta q``
and ``C = tau^-beta``, so that ``df`` is the calibration ``r^a phi^beta / a``)
is deformed to ``C a^-1 r^a c^(k+mu) s^(t+lam)``.  Near ``theta = 0`` the
exponent of ``s`` is raised to ``N`` through the Lipschitz ramp
``lambda_x``; near ``pi/2`` the exponent of ``c`` is raised the same way in
the reflected variable.  Both ramps are mollified and the comass of the
deformed potential is verified on a dense grid, shrinking the ramp if the
check fails.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import comass
from .catalog import MetricParams
from .certify import Verdict, certify
from .profile import AngularProfile, Mollified, Smoothness
from .quadrature import adaptive_simpson, gl_integrate

__all__ = [
    "Side",
    "DeformationSpec",
    "DeformationReport",
    "Deformation",
    "DeformationError",
    "LambdaRamp",
    "log_sin_integral",
    "lambda_x",
    "deformed_comass_sq",
    "two_sided_comass_sq",
    "vanishing_limit_check",
    "ambient_parity_check",
    "default_target_exponent",
    "build_theorem_c_deformation",
    "COMASS_SLACK",
]

HALF_PI = math.pi / 2
COMASS_SLACK = 1e-6
_LOG_TAIL = 40.0


class DeformationError(RuntimeError):
    """No admissible ramp was found within the shrink budget."""


class Side(str, enum.Enum):
    NEAR_ZERO = "NearZero"
    NEAR_PI_OVER_2 = "NearPiOver2"


def _inv_log_sin(g):
    g = np.asarray(g, dtype=float)
    with np.errstate(divide="ignore"):
        out = 1.0 / np.log(np.sin(g))
    return np.where(g > 0, out, 0.0)


def log_sin_integral(a: float, b: float, tol: float = 1e-12) -> float:
    """``int_a^b d(gamma) / ln sin(gamma)`` for ``0 <= a <= b < pi/2``.

    The integrand tends to 0 at the origin but has unbounded slope there, so
    the part of ``[a, b]`` below ``cut = min(b, 1/2)`` is mapped to a half line
    by ``gamma = cut e^-v``, where the integrand decays exponentially.
    """
    if not 0.0 <= a <= b < HALF_PI:
        raise ValueError(f"need 0 <= a <= b < pi/2 (got a={a}, b={b})")
    if a == b:
        return 0.0
    f = lambda g: float(_inv_log_sin(g))  # noqa: E731
    cut = min(b, 0.5)
    if a >= cut:
        return adaptive_simpson(f, a, b, tol)
    v_end = _LOG_TAIL if a == 0.0 else min(math.log(cut / a), _LOG_TAIL)
    head = adaptive_simpson(lambda v: cut * math.exp(-v) * f(cut * math.exp(-v)),
                            0.0, v_end, tol)
    return head + (adaptive_simpson(f, cut, b, tol) if b > cut else 0.0)


def _partial_integrals(lo: float, theta: np.ndarray) -> np.ndarray:
    """``int_lo^theta`` of the log-sin integrand, vectorised (``theta >= lo > 0``)."""
    return gl_integrate(_inv_log_sin, np.full_like(theta, lo), theta, 20)


class LambdaRamp:
    """The Lipschitz ramp ``lambda_x``: ``N - t`` up to ``x/2``, 0 from ``x`` on.

    In between it falls like the normalised log-sin integral, so its slope is
    ``-(N - t) / (I ln sin(theta))`` with ``I = int_{x/2}^x d(gamma)/ln sin``.
    """

    def __init__(self, x: float, N: float, t: float):
        if not 0.0 < x < HALF_PI:
            raise ValueError("x must lie in (0, pi/2)")
        if not N > t:
            raise ValueError("N must exceed t")
        self.x, self.N, self.t = float(x), float(N), float(t)
        self.height = self.N - self.t
        self.norm = log_sin_integral(0.5 * x, x)
        self.breakpoints = (0.5 * x, self.x)
        self.constant_pieces = ((-math.inf, 0.5 * x, self.height), (self.x, math.inf, 0.0))

    def value(self, theta):
        th = np.asarray(theta, dtype=float)
        flat = np.atleast_1d(th)
        lo, hi = self.breakpoints
        mid = (flat > lo) & (flat < hi)
        out = np.where(flat <= lo, self.height, 0.0)
        if np.any(mid):
            out[mid] = self.height * (1.0 - _partial_integrals(lo, flat[mid]) / self.norm)
        return float(out[0]) if th.ndim == 0 else out

    def derivative(self, theta):
        th = np.asarray(theta, dtype=float)
        lo, hi = self.breakpoints
        mid = (th > lo) & (th < hi)
        safe = np.where(mid, th, 0.5 * (lo + hi))
        out = np.where(mid, -self.height / (self.norm * np.log(np.sin(safe))), 0.0)
        return float(out) if th.ndim == 0 else out


def lambda_x(theta, x: float, N: float, t: float):
    """Value of the ramp ``lambda_x`` at ``theta`` (vectorised)."""
    return LambdaRamp(x, N, t).value(theta)


@dataclass(frozen=True)
class DeformationSpec:
    """Exponents and ramp data for one side of the deformation."""

    k: float
    t: float
    C: float
    N: int
    x0: float
    eps: float
    side: Side

    def validate(self, params: MetricParams) -> None:
        p, q = params.pf, params.qf
        if not (2 * self.k - p > 2 and 2 * self.t - q > 2):
            raise ValueError("need 2k - p > 2 and 2t - q > 2")
        if self.side is Side.NEAR_ZERO:
            check_target_exponent(self.N, params.q, self.t)
        else:
            check_target_exponent(self.N, params.p, self.k)
        if not 0 < self.eps < self.x0 / 5:
            raise ValueError("need 0 < eps < x0/5")
        if not 0 < self.x0 < HALF_PI:
            raise ValueError("x0 must lie in (0, pi/2)")


def check_target_exponent(N: int, dim_exp, base: float) -> None:
    """``N - dim_exp/2 - 1`` must be a positive even integer and ``N > base``."""
    gap = Fraction(N) - Fraction(dim_exp) / 2 - 1
    if int(N) != N or gap.denominator != 1 or gap <= 0 or gap % 2 != 0:
        raise ValueError(f"N={N}: N - {dim_exp}/2 - 1 must be a positive even integer")
    if not N > base:
        raise ValueError(f"N={N} must exceed {base}")


def default_target_exponent(dim_exp, base: float) -> int:
    """Smallest admissible ``N`` for the given sphere exponent and base exponent."""
    n = int(Fraction(dim_exp) / 2 + 3)
    while True:
        try:
            check_target_exponent(n, dim_exp, base)
            return n
        except ValueError:
            n += 1


def _comass(theta, params: MetricParams, k, t, C, lam, dlam, mu, dmu):
    th = np.asarray(theta, dtype=float)
    c, s = np.cos(th), np.sin(th)
    lc, ls = np.log(c), np.log(s)
    p, q, a = params.pf, params.qf, params.af
    logv = (params.log_tau + 2.0 * math.log(C) + (2.0 * (k + mu) - p) * lc
            + (2.0 * (t + lam) - q) * ls)
    slope = dlam * ls + (t + lam) * c / s + dmu * lc - (k + mu) * s / c
    out = np.exp(logv) * (1.0 + (slope / a) ** 2)
    return float(out) if np.ndim(out) == 0 else out


def deformed_comass_sq(theta, params: MetricParams, spec: DeformationSpec, lambda_val,
                       lambda_deriv):
    """Squared comass of the potential deformed on one side.

    ``NearZero`` raises the exponent of ``s`` by ``lambda``; ``NearPiOver2``
    raises the exponent of ``c``.  ``lambda_deriv`` is the derivative in
    ``theta`` in both cases.
    """
    if spec.side is Side.NEAR_ZERO:
        return _comass(theta, params, spec.k, spec.t, spec.C, lambda_val, lambda_deriv, 0.0, 0.0)
    return _comass(theta, params, spec.k, spec.t, spec.C, 0.0, 0.0, lambda_val, lambda_deriv)


def two_sided_comass_sq(theta, params: MetricParams, k, t, C, lam, dlam, mu, dmu):
    """Squared comass with both exponents deformed (``mu`` acts on ``c``)."""
    return _comass(theta, params, k, t, C, lam, dlam, mu, dmu)


def vanishing_limit_check(rho: float, xs: Sequence[float]) -> np.ndarray:
    """``(sin^rho x / int_{x/2}^x d(gamma)/ln sin)^2`` for each ``x``.

    For ``rho > 1`` these tend to 0 as ``x -> 0``, which is what makes a
    small enough ramp admissible.
    """
    if not rho > 1:
        raise ValueError("rho must exceed 1")
    xs = [float(x) for x in xs]
    if any(b >= a for a, b in zip(xs, xs[1:])) or any(not 0 < x < HALF_PI for x in xs):
        raise ValueError("xs must be decreasing and inside (0, pi/2)")
    return np.array([(math.sin(x) ** rho / log_sin_integral(0.5 * x, x)) ** 2 for x in xs])


def ambient_parity_check(r: int, s: int) -> bool:
    """Whether the undeformed potential already gives a form smooth off the origin."""
    if r < 2 or s < 2:
        raise ValueError("r and s must be at least 2")
    return r % 2 == 0 and s % 2 == 0 and r >= 4 and s >= 4


# -- the construction -------------------------------------------------------------

@dataclass(frozen=True)
class DeformationReport:
    max_comass_sq: float
    max_residual: float
    x0: float
    eps: float
    parity_c1: bool
    attempts: int
    beta: float
    N_left: int | None
    N_right: int | None
    sigma_max: float
    grid_points: int
    note: str = ""

    def to_dict(self) -> dict:
        return {
            "max_comass_sq": self.max_comass_sq,
            "max_residual": self.max_residual,
            "x0": self.x0,
            "eps": self.eps,
            "parity_c1": self.parity_c1,
            "attempts": self.attempts,
            "beta": self.beta,
            "N_left": self.N_left,
            "N_right": self.N_right,
            "sigma_max": self.sigma_max,
            "grid_points": self.grid_points,
            "note": self.note,
        }


@dataclass
class Deformation:
    """Mollified ramps on both sides plus the verification report.

    ``lam`` raises the exponent of ``s`` near 0 and ``mu`` the exponent of
    ``c`` near pi/2; either may be ``None`` (no deformation on that side).
    """

    params: MetricParams
    beta: float
    k: float
    t: float
    C: float
    lam: Mollified | None
    mu: Mollified | None
    report: DeformationReport
    specs: tuple[DeformationSpec, ...] = field(default=())

    def lambda_values(self, theta):
        th = np.asarray(theta, dtype=float)
        if self.lam is None:
            return np.zeros_like(th), np.zeros_like(th)
        return self.lam.value(th), self.lam.derivative(th)

    def mu_values(self, theta):
        th = np.asarray(theta, dtype=float)
        if self.mu is None:
            return np.zeros_like(th), np.zeros_like(th)
        u = HALF_PI - th
        return self.mu.value(u), -self.mu.derivative(u)

    def comass_sq(self, theta):
        th = np.asarray(theta, dtype=float)
        lam, dlam = self.lambda_values(th)
        mu, dmu = self.mu_values(th)
        return two_sided_comass_sq(th, self.params, self.k, self.t, self.C, lam, dlam, mu, dmu)

    def profile(self, theta) -> tuple[AngularProfile, AngularProfile]:
        """Sampled ``lambda`` (on ``s``) and ``mu`` (on ``c``) profiles."""
        th = np.asarray(theta, dtype=float)
        lam, dlam = self.lambda_values(th)
        mu, dmu = self.mu_values(th)
        return (AngularProfile(th, lam, dlam, Smoothness.SMOOTH),
                AngularProfile(th, mu, dmu, Smoothness.SMOOTH))


def _verification_grid(x0: float, eps: float, sides: Sequence[Side], n_uniform: int = 100_000,
                       n_cluster: int = 1000) -> np.ndarray:
    h = HALF_PI / n_uniform
    pts = [(np.arange(n_uniform) + 0.5) * h]
    local = []
    for bp in (0.5 * x0, x0):
        local.append(np.linspace(bp - eps, bp + eps, n_cluster))
    local.append(np.linspace(0.5 * x0 - eps, x0 + eps, n_cluster))
    local.append(np.geomspace(1e-3 * x0, x0 + eps, n_cluster))
    local = np.concatenate(local)
    for side in sides:
        pts.append(local if side is Side.NEAR_ZERO else HALF_PI - local)
    g = np.unique(np.concatenate(pts))
    return g[(g > 0) & (g < HALF_PI)]


def _sigma_max(ramp: LambdaRamp, moll: Mollified, x0: float, eps1: float) -> float:
    y = np.linspace(max(0.5 * x0 - eps1, 1e-300), x0 + eps1, 2001)
    d = moll.derivative(y)
    sigma = -d * ramp.norm * np.log(np.sin(y)) / ramp.height
    return float(np.max(sigma))


def build_theorem_c_deformation(params: MetricParams, beta: float, N_left: int | None = None,
                                N_right: int | None = None, x0: float | None = None,
                                eps: float | None = None, *, max_shrink: int = 20,
                                n_uniform: int = 100_000, check_global: bool = True
                                ) -> Deformation:
    """Deform the row-1 calibration so its form is smooth away from the origin.

    The ramps share ``x0`` and ``eps``; while the grid check fails, ``x0`` is
    halved with ``eps`` kept at the same fraction of ``x0``.
    """
    beta = comass.check_beta(beta)
    if params.is_type_i or params.l != params.p + params.q:
        raise ValueError("the deformation is defined for row-1 metrics (l = p + q)")
    shape = dict(params.shape)
    r = shape.get("r", int(params.p / 2 + 1))
    s = shape.get("s", int(params.q / 2 + 1))
    parity = ambient_parity_check(r, s)
    k, t = beta * params.pf, beta * params.qf
    C = math.exp(-beta * params.log_tau)
    if check_global:
        v = certify(params, beta)
        if v.verdict is not Verdict.GLOBAL:
            raise ValueError(f"beta={beta} does not certify a global calibration "
                             f"({v.verdict.value})")
    if parity and beta == 1.0:
        rep = DeformationReport(1.0, 0.0, 0.0, 0.0, True, 0, beta, None, None, 0.0, 0,
                                note="C1 parity applies")
        return Deformation(params, beta, k, t, C, None, None, rep)
    if N_left is None:
        N_left = default_target_exponent(params.q, t)
    if N_right is None:
        N_right = default_target_exponent(params.p, k)
    check_target_exponent(N_left, params.q, t)
    check_target_exponent(N_right, params.p, k)
    x0 = 0.1 if x0 is None else float(x0)
    ratio = 0.1 if eps is None else float(eps) / x0
    if not 0 < ratio < 0.2:
        raise ValueError("need 0 < eps < x0/5")
    if not 0 < x0 < math.pi / 4:
        raise ValueError("x0 must lie in (0, pi/4) so the two ramps do not overlap")
    sides = (Side.NEAR_ZERO, Side.NEAR_PI_OVER_2)
    worst = math.inf
    for attempt in range(1, max_shrink + 2):
        e = ratio * x0
        specs = (DeformationSpec(k, t, C, N_left, x0, e, Side.NEAR_ZERO),
                 DeformationSpec(k, t, C, N_right, x0, e, Side.NEAR_PI_OVER_2))
        for sp in specs:
            sp.validate(params)
        ramp_l, ramp_r = LambdaRamp(x0, N_left, t), LambdaRamp(x0, N_right, k)
        lam, mu = Mollified(ramp_l, e), Mollified(ramp_r, e)
        d = Deformation(params, beta, k, t, C, lam, mu, None, specs)  # type: ignore[arg-type]
        grid = _verification_grid(x0, e, sides, n_uniform)
        vals = d.comass_sq(grid)
        worst = float(np.max(vals))
        if worst <= 1.0 + COMASS_SLACK:
            sig = max(_sigma_max(ramp_l, lam, x0, 2 * e), _sigma_max(ramp_r, mu, x0, 2 * e))
            d.report = DeformationReport(worst, worst - 1.0, x0, e, parity, attempt, beta,
                                         N_left, N_right, sig, int(grid.size))
            return d
        x0 *= 0.5
    raise DeformationError(f"no admissible (x0, eps) found after {max_shrink} halvings "
                           f"(last max comass {worst:.12g})")
