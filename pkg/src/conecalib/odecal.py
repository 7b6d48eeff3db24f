"""ODE constructions: the exponent ODE for SU(2)xSU(4) and the profile Phi0.

Part one works with the row-3, ``k = 4`` metric (``p = 4``, ``q = 10``,
``a = 15/2``), where no power ``phi^beta`` calibrates.  The potential
``C r^a c^(4+lam) s^10`` has squared comass given by :func:`star_comass_sq`;
solving ``star_comass_sq = 1`` for ``lam'`` gives the exponent ODE.  Its
solution is glued to 0 at both ends with the smooth max/min operators.

Part two builds a solution ``Phi0`` of ``y^2 + (y'/a)^2 <= E`` that equals 1
at ``theta0`` and vanishes near both ends of the domain, by splicing the
extremal integral curves ``y' = +-a sqrt(E - y^2)`` into a seed ``phi^beta``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import comass
from .catalog import MetricParams, derive_params
from .certify import Verdict, certified_sup, certify
from .profile import AngularProfile, Smoothness, smax, smin
from .rk import IntegrationError, OdeResult, dopri5

__all__ = [
    "BudgetExhausted",
    "GlueInfeasible",
    "Phi0Error",
    "OdeSolution",
    "GluedLambda",
    "Phi0Profile",
    "PowerSeed",
    "ROW3_K4",
    "star_comass_sq",
    "lambda1_rhs",
    "solve_lambda1",
    "halving_check",
    "glue_lambda1",
    "envelope",
    "choose_seed_beta",
    "build_phi0",
    "slope_field_monotonicity_check",
    "extremal_slope_check",
]

HALF_PI = math.pi / 2

ROW3_K4 = derive_params(3, k=4)
_A = 7.5
_INV_TAU = (14 / 4) ** 2 * (14 / 10) ** 5
_LOG_INV_TAU = math.log(_INV_TAU)
_CLAMP = -1e-12


class BudgetExhausted(RuntimeError):
    """The comass budget ``1/E - 1`` went negative along the solution."""

    def __init__(self, theta: float):
        super().__init__(f"comass budget exhausted at theta={theta:.12g}")
        self.theta = theta


class GlueInfeasible(RuntimeError):
    pass


class Phi0Error(RuntimeError):
    pass


# -- the exponent ODE -------------------------------------------------------------

def _log_e(theta, lam):
    return _LOG_INV_TAU + (4.0 + 2.0 * lam) * np.log(np.cos(theta)) + 10.0 * np.log(np.sin(theta))


def star_comass_sq(theta, lambda_val, lambda_deriv):
    """Squared comass of ``d(C r^a c^(4+lam) s^10)`` on the row-3, k=4 orbit space."""
    th = np.asarray(theta, dtype=float)
    c, s = np.cos(th), np.sin(th)
    slope = lambda_deriv * np.log(c) + 10.0 * c / s - (4.0 + lambda_val) * s / c
    out = np.exp(_log_e(th, lambda_val)) * (1.0 + (slope / _A) ** 2)
    return float(out) if out.ndim == 0 else out


def _budget(theta, lam):
    return math.exp(-float(_log_e(theta, lam))) - 1.0


def lambda1_rhs(theta: float, lam: float) -> float:
    """``lam'`` on the comass-one level set (budget clamped at 0)."""
    arg = max(_budget(theta, lam), 0.0)
    c, s = math.cos(theta), math.sin(theta)
    return (_A * math.sqrt(arg) + 10.0 * c / s - (4.0 + lam) * s / c) / (-math.log(c))


@dataclass
class OdeSolution:
    """Dense solution of the exponent ODE starting from ``lam(theta_start) = 0``."""

    result: OdeResult
    theta_start: float
    theta_end: float
    theta1: float
    peak: float
    peak_theta: float
    trough: float
    trough_theta: float
    zeros: tuple[float, ...]
    rtol: float
    atol: float

    @property
    def knots(self) -> np.ndarray:
        return self.result.t

    @property
    def values(self) -> np.ndarray:
        return self.result.y

    @property
    def derivatives(self) -> np.ndarray:
        return self.result.dy

    @property
    def steps(self) -> int:
        return self.result.steps

    @property
    def max_error_estimate(self) -> float:
        return self.result.max_error_estimate

    def __call__(self, theta):
        return self.result(theta)

    def derivative(self, theta):
        return self.result(theta, derivative=True)

    def star_residual(self, n: int = 100_001) -> float:
        """Largest ``|star_comass_sq - 1|`` along the dense output.

        Values and slopes come from the interpolant, so points between the
        knots are tested too, not only the accepted steps.
        """
        th = np.linspace(self.theta_start, self.theta_end, n)
        v = star_comass_sq(th, self(th), self.derivative(th))
        return float(np.max(np.abs(v - 1.0)))

    def to_rows(self):
        v = star_comass_sq(self.knots, self.values, self.derivatives)
        return list(zip(self.knots.tolist(), self.values.tolist(), v.tolist()))


def _zeros(res: OdeResult) -> list[float]:
    t, y = res.t, res.y
    out = []
    for i in np.nonzero(np.sign(y[:-1]) * np.sign(y[1:]) < 0)[0]:
        a, b = float(t[i]), float(t[i + 1])
        ya = float(y[i])
        for _ in range(100):
            m = 0.5 * (a + b)
            ym = res(m)
            if (ym > 0) == (ya > 0):
                a, ya = m, ym
            else:
                b = m
            if b - a < 1e-15:
                break
        out.append(0.5 * (a + b))
    return out


def solve_lambda1(theta_start: float = 1.007, theta_end: float = 1.25, *, rtol: float = 1e-10,
                  atol: float = 1e-15, max_step: float = 5e-4) -> OdeSolution:
    """Integrate the exponent ODE from ``lam(theta_start) = 0``.

    Close to the start the solution is of size 1e-5 and the right-hand side
    has a square-root profile (the budget vanishes at ``theta0``), and errors
    made there grow by two orders of magnitude downstream; hence the small
    absolute tolerance.  The step cap keeps the cubic Hermite dense output
    (values and slopes between knots) on the comass-1 level set to about
    1e-9.  ``theta1`` is the zero closest to 1.2 and
    ``peak``/``trough`` are the extremes on ``[theta_start, theta1]``.  Raises
    :class:`BudgetExhausted` if the square-root argument dips below
    ``-1e-12`` before ``theta_end``.
    """
    theta0 = ROW3_K4.theta0
    if not theta0 < theta_start < theta_end < HALF_PI:
        raise ValueError(f"need theta0={theta0:.9f} < theta_start < theta_end < pi/2")
    try:
        res = dopri5(lambda1_rhs, theta_start, 0.0, theta_end, rtol=rtol, atol=atol,
                     max_step=max_step)
    except IntegrationError as e:
        # the step size collapses where the square-root argument runs out
        if _budget(e.t, e.y) < 1e-6:
            raise BudgetExhausted(e.t) from e
        raise
    for t, y in zip(res.t, res.y):
        if _budget(t, y) < _CLAMP:
            raise BudgetExhausted(float(t))
    res.y[0] = 0.0
    zs = [z for z in _zeros(res) if z > theta_start]
    if not zs:
        raise ValueError("the solution has no zero in the integration range")
    theta1 = min(zs, key=lambda z: abs(z - 1.2))
    fine = np.linspace(theta_start, theta1, 20001)
    vals = res(fine)
    ip, it = int(np.argmax(vals)), int(np.argmin(vals))
    return OdeSolution(res, theta_start, theta_end, theta1, float(vals[ip]), float(fine[ip]),
                       float(vals[it]), float(fine[it]), tuple(zs), rtol, atol)



def halving_check(sol: OdeSolution) -> dict:
    """Re-solve with tolerances divided by 32 (halving the fifth-order step)
    and report the change in ``theta1``, the peak and the end value."""
    fine = solve_lambda1(sol.theta_start, sol.theta_end, rtol=sol.rtol / 32, atol=sol.atol / 32,
                         max_step=2.5e-4)
    grid = np.linspace(sol.theta_start, sol.theta_end, 2001)
    return {
        "theta1": abs(fine.theta1 - sol.theta1),
        "peak": abs(fine.peak - sol.peak),
        "trough": abs(fine.trough - sol.trough),
        "max_value": float(np.max(np.abs(fine(grid) - sol(grid)))),
    }


# -- gluing -------------------------------------------------------------------------

@dataclass
class GluedLambda:
    """Smooth exponent: 0, then the ODE solution, then 0.

    Near ``theta_start`` it is ``smax(0, lam1)`` (``lam1`` continued slightly
    backwards), near ``theta1`` it is ``smin(lam1, 0)`` and in between it is
    ``lam1`` itself.
    """

    sol: OdeSolution
    ext: OdeResult
    eps_left: float
    eps_right: float
    switch_left: float
    switch_right: float
    support: tuple[float, float]
    width: float
    max_comass_sq: float = math.nan
    outside_sup: tuple[float, float] = (math.nan, math.nan)
    attempts: int = 0

    def _lam1(self, th):
        out = np.empty_like(th)
        back = th < self.sol.theta_start
        out[back] = self.ext(th[back])
        out[~back] = self.sol(th[~back])
        d = np.empty_like(th)
        d[back] = [lambda1_rhs(t, y) for t, y in zip(th[back], out[back])]
        d[~back] = [lambda1_rhs(t, y) for t, y in zip(th[~back], out[~back])]
        return out, d

    def evaluate(self, theta):
        th = np.atleast_1d(np.asarray(theta, dtype=float))
        val = np.zeros_like(th)
        der = np.zeros_like(th)
        lo, hi = self.support
        inside = (th > lo) & (th < hi)
        if inside.any():
            t = th[inside]
            lam, dlam = self._lam1(t)
            v, d = lam.copy(), dlam.copy()
            left = t < self.switch_left
            if left.any():
                v[left], d[left] = smax(0.0, 0.0, lam[left], dlam[left], self.eps_left)
            right = t > self.switch_right
            if right.any():
                v[right], d[right] = smin(lam[right], dlam[right], 0.0, 0.0, self.eps_right)
            val[inside], der[inside] = v, d
        if np.ndim(theta) == 0:
            return float(val[0]), float(der[0])
        return val, der

    def value(self, theta):
        return self.evaluate(theta)[0]

    def derivative(self, theta):
        return self.evaluate(theta)[1]

    def profile(self, theta) -> AngularProfile:
        th = np.asarray(theta, dtype=float)
        v, d = self.evaluate(th)
        return AngularProfile(th, v, d, Smoothness.SMOOTH)


def _verify_glue(g: GluedLambda, n: int = 100_000) -> float:
    lo, hi = g.support
    grid = np.concatenate([
        0.9 + (np.arange(n) + 0.5) * (0.4 / n),
        np.linspace(lo, g.switch_left + 1e-4, 1000),
        np.linspace(g.switch_right - 1e-3, hi, 1000),
    ])
    v, d = g.evaluate(grid)
    return float(np.max(star_comass_sq(grid, v, d)))


def glue_lambda1(sol: OdeSolution, left_window: float = 0.01, right_window: float = 0.01, *,
                 retries: int = 10, tol: float = 1e-9) -> GluedLambda:
    """Glue the ODE solution to 0 on both sides and verify the full domain.

    Between 0.9 and 1.3 the squared comass is checked on a 10^5-point grid
    (plus the glue windows); outside, where the exponent vanishes, ``psi <= 1``
    is certified with :func:`certified_sup`.
    """
    theta0 = ROW3_K4.theta0
    up_lo = certified_sup(ROW3_K4, 1.0, (0.0, 0.9), tol).upper
    up_hi = certified_sup(ROW3_K4, 1.0, (1.3, HALF_PI), tol).upper
    wl, wr = float(left_window), float(right_window)
    if not (wl > 0 and wr > 0):
        raise ValueError("windows must be positive")
    last = math.inf
    for attempt in range(1, retries + 1):
        # the backward continuation must stay to the right of theta0
        w_eff = min(wl, 0.5 * (sol.theta_start - theta0))
        ext = dopri5(lambda1_rhs, sol.theta_start, 0.0, sol.theta_start - w_eff,
                     rtol=sol.rtol, atol=sol.atol)
        eps_l = abs(float(ext.y[-1]))
        if sol.theta1 + 0.5 * wr >= sol.theta_end:
            raise GlueInfeasible("the solution does not extend past the right window")
        eps_r = float(sol(sol.theta1 + 0.5 * wr))
        if not (eps_l > 0 and eps_r > 0 and sol.peak > eps_l and -sol.trough > eps_r):
            wl *= 0.5
            wr *= 0.5
            continue
        grid = np.linspace(sol.theta_start, sol.theta1, 200001)
        vals = sol(grid)
        above = np.nonzero(vals >= 2 * eps_l)[0]
        below = np.nonzero(vals <= -2 * eps_r)[0]
        g = GluedLambda(sol, ext, eps_l, eps_r, float(grid[above[0]]), float(grid[below[-1]]),
                        (sol.theta_start - w_eff, sol.theta1 + 0.5 * wr), wl, attempts=attempt)
        last = _verify_glue(g)
        if last <= 1.0 + 1e-6 and up_lo <= 1.0 + tol and up_hi <= 1.0 + tol:
            g.max_comass_sq = max(last, up_lo, up_hi)
            g.outside_sup = (up_lo, up_hi)
            return g
        wl *= 0.5
        wr *= 0.5
    raise GlueInfeasible(f"glue window infeasible after {retries} retries "
                         f"(max comass {last:.12g})")


# -- Phi0 -----------------------------------------------------------------------

def envelope(theta, params: MetricParams):
    """Right-hand side ``c^p s^q / tau`` (type II) or ``s^q`` (type I)."""
    return comass.phi(theta, params)


@dataclass(frozen=True)
class PowerSeed:
    """The seed ``phi^beta``; admissible exactly where ``psi <= 1``."""

    params: MetricParams
    beta: float

    def value(self, theta):
        return comass.phi(theta, self.params) ** self.beta

    def derivative(self, theta):
        return self.beta * self.value(theta) * comass.slope_factor(theta, self.params)

    def residual(self, theta):
        return _residual(self.params, self.value(theta), self.derivative(theta), theta)


def _residual(params, y, dy, theta):
    return y * y + (dy / params.af) ** 2 - envelope(theta, params)


_BETA_SCAN = (1.0, 1.2) + tuple(round(0.8 + 0.05 * i, 2) for i in range(25))


def choose_seed_beta(params: MetricParams, betas: Sequence[float] = _BETA_SCAN) -> float:
    """First ``beta`` giving a global certificate with ``psi -> 0`` at both ends."""
    for b in betas:
        if b <= 0.5:
            continue
        left, right = comass.endpoint_exponents(params, b)
        if not (left > 2 and right > 2):
            continue
        if certify(params, b).verdict is Verdict.GLOBAL:
            return float(b)
    raise Phi0Error(f"no seed exponent in the scan certifies {params.label}")


@dataclass
class _Splice:
    """One extremal curve and the window where it replaces the seed."""

    curve: OdeResult
    sign: float  # +1: rising curve left of theta0, -1: falling curve right of it
    zero: float  # where the curve reaches 0
    far: float  # end of the smooth-min transition
    support_edge: float  # curve == eps there; Phi0 vanishes beyond it
    eps: float
    anchor: float

    def contains(self, th):
        lo, hi = sorted((self.zero, self.far))
        return (th >= lo) & (th <= hi)


@dataclass
class Phi0Profile:
    """``Phi0``: zero near the ends, the seed around ``theta0``.

    ``profile`` samples the function on the verification grid.
    """

    params: MetricParams
    seed: PowerSeed
    left: _Splice
    right: _Splice
    support: tuple[float, float]
    glue_windows: tuple[tuple[float, float], tuple[float, float]]
    residual_max: float = math.nan
    value_at_theta0: float = math.nan
    profile: AngularProfile | None = field(default=None, repr=False)
    attempts: int = 0

    @property
    def theta0(self) -> float:
        return HALF_PI if self.params.is_type_i else self.params.theta0

    def evaluate(self, theta):
        th = np.atleast_1d(np.asarray(theta, dtype=float))
        a = self.params.af
        val = np.zeros_like(th)
        der = np.zeros_like(th)
        lo, hi = self.left.zero, self.right.zero
        mid = (th > self.left.far) & (th < self.right.far)
        val[mid] = self.seed.value(th[mid])
        der[mid] = self.seed.derivative(th[mid])
        for sp in (self.left, self.right):
            sel = sp.contains(th) & (th > lo) & (th < hi)
            if not sel.any():
                continue
            t = th[sel]
            g = sp.curve(t)
            e = envelope(t, self.params)
            dg = sp.sign * a * np.sqrt(np.maximum(e - g * g, 0.0))
            u, du = g - 2.0 * sp.eps, dg
            w, dw = smin(u, du, self.seed.value(t), self.seed.derivative(t), sp.eps)
            v, dv = smax(0.0, 0.0, w, dw, sp.eps)
            val[sel], der[sel] = v, dv
        if np.ndim(theta) == 0:
            return float(val[0]), float(der[0])
        return val, der

    def value(self, theta):
        return self.evaluate(theta)[0]

    def derivative(self, theta):
        return self.evaluate(theta)[1]

    def residual(self, theta):
        v, d = self.evaluate(theta)
        return _residual(self.params, v, d, theta)


def _splice(params, seed, anchor, sign, eps_rel):
    lo, hi = params.domain
    a = params.af
    t0 = HALF_PI if params.is_type_i else params.theta0
    y0 = float(seed.value(anchor))
    eps = eps_rel * y0

    def rhs(t, y):
        return sign * a * math.sqrt(max(float(envelope(t, params)) - y * y, 0.0))

    outward = lo if sign > 0 else hi
    margin = 1e-9 * (hi - lo)
    down = dopri5(rhs, anchor, y0, outward + (margin if sign > 0 else -margin),
                  rtol=1e-11, atol=1e-13, max_step=0.01, event=lambda t, y: y)
    if down.event_t is None:
        raise IntegrationError("extremal curve did not reach 0 inside the domain")
    gap = lambda t, y: y - float(seed.value(t)) - 4.0 * eps  # noqa: E731
    up = dopri5(rhs, anchor, y0, t0, rtol=1e-11, atol=1e-13, max_step=0.01, event=gap)
    if up.event_t is None:
        raise IntegrationError("extremal curve did not separate from the seed before theta0")
    # one result ordered from the zero to the far end
    t = np.concatenate([down.t[::-1], up.t[1:]])
    y = np.concatenate([down.y[::-1], up.y[1:]])
    dy = np.concatenate([down.dy[::-1], up.dy[1:]])
    if sign < 0:
        t, y, dy = t[::-1], y[::-1], dy[::-1]
    curve = OdeResult(t, y, dy, down.steps + up.steps, down.rejected + up.rejected,
                      max(down.max_error_estimate, up.max_error_estimate))
    # support edge: curve == eps, found by bisection between the zero and the anchor
    x0, x1 = down.event_t, anchor
    for _ in range(200):
        m = 0.5 * (x0 + x1)
        if curve(m) <= eps:
            x0 = m
        else:
            x1 = m
        if abs(x1 - x0) < 1e-15:
            break
    return _Splice(curve, sign, down.event_t, up.event_t, x0, eps, anchor)


def build_phi0(params: MetricParams, beta: float | None = None, *, eps_rel: float = 1e-3,
               retries: int = 10, n_verify: int = 100_000, residual_tol: float = 1e-9
               ) -> Phi0Profile:
    """Splice extremal curves into the seed ``phi^beta`` and verify the result."""
    if beta is None:
        beta = choose_seed_beta(params)
    else:
        beta = comass.check_beta(beta)
        if certify(params, beta).verdict is not Verdict.GLOBAL:
            raise Phi0Error(f"seed phi^{beta} is not a certified solution")
    seed = PowerSeed(params, beta)
    lo, hi = params.domain
    t0 = HALF_PI if params.is_type_i else params.theta0
    tc, td = 0.5 * (lo + t0), 0.5 * (t0 + hi)
    err = None
    for attempt in range(1, retries + 1):
        try:
            left = _splice(params, seed, tc, +1.0, eps_rel)
            right = _splice(params, seed, td, -1.0, eps_rel)
        except IntegrationError as e:
            err = e
            tc, td = 0.5 * (tc + t0), 0.5 * (td + t0)
            continue
        prof = Phi0Profile(params, seed, left, right, (left.support_edge, right.support_edge),
                           ((left.zero, left.far), (right.far, right.zero)), attempts=attempt)
        grid = np.concatenate([
            lo + (np.arange(n_verify) + 0.5) * ((hi - lo) / n_verify),
            np.linspace(left.zero, left.far, 2000),
            np.linspace(right.far, right.zero, 2000),
            [t0],
        ])
        grid = np.unique(grid[(grid > lo) & (grid < hi)])
        v, d = prof.evaluate(grid)
        res = _residual(params, v, d, grid)
        prof.residual_max = float(np.max(res))
        prof.value_at_theta0 = prof.value(t0)
        prof.profile = AngularProfile(grid, v, d, Smoothness.SMOOTH)
        if prof.residual_max > residual_tol or np.any(v < 0):
            raise Phi0Error(f"residual {prof.residual_max:.3g} exceeds {residual_tol:g}")
        return prof
    raise Phi0Error(f"extremal curves failed after {retries} retries: {err}")


def slope_field_monotonicity_check(params: MetricParams, grid) -> bool:
    """``a sqrt(E - y^2)`` strictly decreases in ``y`` at every grid angle.

    ``grid`` is an iterable of ``(theta, ys)`` pairs with ``0 <= y <= sqrt(E)``.
    """
    for theta, ys in grid:
        e = float(envelope(theta, params))
        ys = np.sort(np.asarray(ys, dtype=float))
        if np.any(ys < 0) or np.any(ys * ys > e * (1 + 1e-12)):
            raise ValueError("grid values must satisfy 0 <= y <= sqrt(E)")
        slopes = params.af * np.sqrt(np.maximum(e - ys * ys, 0.0))
        if np.any(np.diff(slopes) >= 0):
            return False
    return True


def extremal_slope_check(params: MetricParams, beta: float, n: int = 100) -> bool:
    """Along the seed graph the rising curve is at least as steep as the seed
    left of ``theta0`` and the falling curve at most as steep right of it."""
    seed = PowerSeed(params, beta)
    lo, hi = params.domain
    t0 = HALF_PI if params.is_type_i else params.theta0
    a = params.af
    ok = True
    for ts, sign in ((np.linspace(lo, t0, n + 2)[1:-1], 1.0), (np.linspace(t0, hi, n + 2)[1:-1], -1.0)):
        y = seed.value(ts)
        field_slope = sign * a * np.sqrt(np.maximum(envelope(ts, params) - y * y, 0.0))
        dphi = seed.derivative(ts)
        tol = 1e-12 * (1 + np.abs(dphi))
        ok &= bool(np.all(field_slope >= dphi - tol) if sign > 0 else np.all(field_slope <= dphi + tol))
    return ok
