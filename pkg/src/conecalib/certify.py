"""Certified verdicts for the comass inequality ``psi <= 1``.

The supremum of ``psi`` over an interval is bounded by branch and bound.
Each box gets an enclosure of ``eta``; when ``eta`` has a definite sign the
box is monotone on each side of ``theta0`` and its supremum is an endpoint
value (or exactly 1 when the box straddles ``theta0`` with ``eta > 0``).
Other boxes use the better of a natural enclosure and a mean-value form.

Rounding: libm results are faithfully rounded, so instead of switching the
FPU rounding mode every bound is widened by a relative pad that dominates
the accumulated error of the short evaluation chains used here.
"""

from __future__ import annotations

import enum
import heapq
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from . import comass
from .catalog import MetricParams, derive_params, get_entry

__all__ = [
    "Verdict",
    "Method",
    "ComassVerdict",
    "SupBound",
    "SweepRow",
    "UnboundedComassError",
    "find_eta_roots",
    "certified_sup",
    "local_interval",
    "certify",
    "best_verdict",
    "sweep_row1",
    "DEFAULT_TOL",
    "DEFAULT_BETAS",
]

DEFAULT_TOL = 1e-9
DEFAULT_BETAS = (1.0, 1.2)
HALF_PI = math.pi / 2

_REL_PAD = 1e-13
_TINY = 1e-300


class UnboundedComassError(ValueError):
    """The interval reaches an endpoint where ``psi`` diverges."""


class Verdict(str, enum.Enum):
    GLOBAL = "Global"
    LOCAL = "Local"
    NONE = "NoCertificate"


class Method(str, enum.Enum):
    DISCRIMINANT = "AnalyticDiscriminant"
    SIGMA = "AnalyticSigmaBound"
    SUP = "CertifiedSup"


_RANK = {Verdict.GLOBAL: 2, Verdict.LOCAL: 1, Verdict.NONE: 0}


@dataclass(frozen=True)
class ComassVerdict:
    verdict: Verdict
    sup_psi: float
    sup_location: float
    local_interval: tuple[float, float] | None
    eta_roots: tuple[float, ...]
    beta: float
    tol: float
    method: Method
    params: MetricParams | None = field(default=None, compare=False, repr=False)

    @property
    def local_width(self) -> float:
        if self.local_interval is None:
            return 0.0
        return self.local_interval[1] - self.local_interval[0]


class SupBound(NamedTuple):
    upper: float
    argmax: float
    lower: float
    boxes: int
    converged: bool


# -- scalar bounds -----------------------------------------------------------

def _pow(x: float, e: float) -> float:
    if x == 0.0:
        if e > 0:
            return 0.0
        return 1.0 if e == 0 else math.inf
    return x ** e


def _pow_range(lo: float, hi: float, e: float) -> tuple[float, float]:
    if e >= 0:
        return _pow(lo, e), _pow(hi, e)
    return _pow(hi, e), _pow(lo, e)


def _sq_range(lo: float, hi: float) -> tuple[float, float]:
    if lo >= 0:
        return lo * lo, hi * hi
    if hi <= 0:
        return hi * hi, lo * lo
    return 0.0, max(lo * lo, hi * hi)


def _mul(x: tuple[float, float], y: tuple[float, float]) -> tuple[float, float]:
    # nonnegative intervals only
    return x[0] * y[0], x[1] * y[1]


def _down(x: float) -> float:
    return x * (1.0 - _REL_PAD) if x > 0 else x * (1.0 + _REL_PAD) - _TINY


def _up(x: float) -> float:
    return x * (1.0 + _REL_PAD) + _TINY if x >= 0 else x * (1.0 - _REL_PAD)


class _Bounds:
    """Scalar enclosures of psi and eta on ``[0, theta0-side end]``.

    Type I rows are symmetric about pi/2 and are folded onto ``[0, pi/2]``,
    where the right end is ``theta0`` itself (not a domain end).
    """

    def __init__(self, params: MetricParams, beta: float):
        self.params = params
        self.type_i = params.is_type_i
        self.beta = beta
        m = 2.0 * beta - 1.0
        self.m = m
        self.kb = (beta / params.af) ** 2
        self.p = params.cos_exp
        self.q = params.qf
        self.qm = self.q * m
        self.pm = self.p * m
        self.tau_m = math.exp(-m * params.log_tau)
        p, q = self.p, self.q
        self.k0 = m - 2.0 * self.kb * (m * p * q + p + q)
        self.kq = m * q * q - 2.0 * q
        self.kp = m * p * p - 2.0 * p
        self.theta0 = HALF_PI if self.type_i else params.theta0
        self.left_limit = comass.endpoint_limit(params, beta, "left")
        self.right_limit = comass.endpoint_limit(params, beta, "right")

    # trig values with the exact domain end treated symbolically
    def _cs(self, t: float) -> tuple[float, float]:
        if t == 0.0:
            return 1.0, 0.0
        if t == HALF_PI and not self.type_i:
            return 0.0, 1.0
        return math.cos(t), math.sin(t)

    def point(self, t: float) -> tuple[float, float]:
        """Padded enclosure of psi at a single point."""
        if t == 0.0:
            v = self.left_limit
            return v, v
        if t == HALF_PI and not self.type_i:
            v = self.right_limit
            return v, v
        c, s = math.cos(t), math.sin(t)
        q, kb = self.q, self.kb
        if self.type_i:
            v = s ** (self.qm - 2.0) * (s * s + kb * q * q * c * c)
        else:
            h = q * c * c - self.p * s * s
            v = self.tau_m * (c ** self.pm * s ** self.qm
                              + kb * c ** (self.pm - 2.0) * s ** (self.qm - 2.0) * h * h)
        return _down(v), _up(v)

    def box(self, a: float, b: float) -> tuple[float, float]:
        """Natural enclosure of psi over ``[a, b]``."""
        ca, sa = self._cs(a)
        cb, sb = self._cs(b)
        q, kb = self.q, self.kb
        if self.type_i:
            sp = _pow_range(sa, sb, self.qm - 2.0)
            inner = (sa * sa + kb * q * q * cb * cb, sb * sb + kb * q * q * ca * ca)
            lo, hi = _mul(sp, inner)
        else:
            p = self.p
            t1 = _mul(_pow_range(cb, ca, self.pm), _pow_range(sa, sb, self.qm))
            t2 = _mul(_pow_range(cb, ca, self.pm - 2.0), _pow_range(sa, sb, self.qm - 2.0))
            pad = 8e-16 * (p + q)
            h2 = _sq_range(q * cb * cb - p * sb * sb - pad, q * ca * ca - p * sa * sa + pad)
            t2 = _mul(t2, h2)
            lo = self.tau_m * (t1[0] + kb * t2[0])
            hi = self.tau_m * (t1[1] + kb * t2[1])
        return _down(lo), _up(hi)

    def eta_box(self, a: float, b: float) -> tuple[float, float]:
        ca, sa = self._cs(a)
        cb, sb = self._cs(b)
        cot2 = (math.inf if sa == 0.0 else (ca / sa) ** 2, (cb / sb) ** 2)  # (at a, at b)
        lo = hi = self.k0
        mag = abs(self.k0)
        if self.kq:
            lo_t, hi_t = sorted((self.kq * cot2[0], self.kq * cot2[1]))
            lo += self.kb * lo_t
            hi += self.kb * hi_t
            mag += self.kb * abs(self.kq) * cot2[0]
        if self.kp and not self.type_i:
            tan2 = ((sa / ca) ** 2, math.inf if cb == 0.0 else (sb / cb) ** 2)
            lo_t, hi_t = sorted((self.kp * tan2[0], self.kp * tan2[1]))
            lo += self.kb * lo_t
            hi += self.kb * hi_t
            mag += self.kb * abs(self.kp) * tan2[1]
        pad = 1e-13 * mag + _TINY
        return lo - pad, hi + pad

    def dpsi_abs_max(self, a: float, b: float) -> float:
        """Upper bound of ``|psi'|`` on an interior box (mean-value form)."""
        ca, sa = self._cs(a)
        cb, sb = self._cs(b)
        if self.type_i:
            phim = _pow_range(sa, sb, self.qm)
            g = (self.q * cb / sb, self.q * ca / sa)
        else:
            phim = _mul(_pow_range(cb, ca, self.pm), _pow_range(sa, sb, self.qm))
            phim = (self.tau_m * phim[0], self.tau_m * phim[1])
            g = (self.q * cb / sb - self.p * sb / cb, self.q * ca / sa - self.p * sa / ca)
        e = self.eta_box(a, b)
        gmax = max(abs(g[0]), abs(g[1]))
        emax = max(abs(e[0]), abs(e[1]))
        return _up(phim[1] * gmax * emax)

    def resolve(self, a: float, b: float):
        """Exact supremum of a monotone box, or ``None`` if undecided."""
        elo, ehi = self.eta_box(a, b)
        t0 = self.theta0
        straddles = a < t0 < b
        if elo > 0:
            if straddles:
                return 1.0, 1.0, t0
            t = b if b <= t0 else a
        elif ehi < 0:
            if straddles:
                pa, pb = self.point(a), self.point(b)
                return (pa[0], pa[1], a) if pa[1] >= pb[1] else (pb[0], pb[1], b)
            t = a if b <= t0 else b
        else:
            return None
        lo, hi = self.point(t)
        return lo, hi, t


def _check_interval(params: MetricParams, beta: float, interval):
    lo, hi = params.domain
    if interval is None:
        interval = (lo, hi)
    a, b = float(interval[0]), float(interval[1])
    if not (lo <= a < b <= hi):
        raise ValueError(f"interval {interval!r} is not inside the closed domain [{lo}, {hi}]")
    left_e, right_e = comass.endpoint_exponents(params, beta)
    if a == lo and math.isinf(comass.endpoint_limit(params, beta, "left")):
        raise UnboundedComassError(f"unbounded comass: psi diverges at theta={lo} "
                                   f"(exponent {left_e:.6g} < 2)")
    if b == hi and math.isinf(comass.endpoint_limit(params, beta, "right")):
        raise UnboundedComassError(f"unbounded comass: psi diverges at theta={hi} "
                                   f"(exponent {right_e:.6g} < 2)")
    return a, b


def _fold(params: MetricParams, a: float, b: float):
    """Boxes on the monotone half-domain, with a flag for mirrored pieces."""
    if not params.is_type_i:
        return [(a, b, False)]
    pieces = []
    if a < HALF_PI:
        pieces.append((a, min(b, HALF_PI), False))
    if b > HALF_PI:
        lo = max(a, HALF_PI)
        pieces.append((0.0 if b == math.pi else math.pi - b, math.pi - lo if lo > HALF_PI else HALF_PI, True))
    return pieces


def certified_sup(params: MetricParams, beta: float, interval=None, tol: float = DEFAULT_TOL, *,
                  stop_above: float | None = None, max_boxes: int = 400_000,
                  initial_boxes: int = 32) -> SupBound:
    """Rigorous upper bound ``U`` for ``sup psi`` over ``interval``.

    On convergence ``U - sup <= tol``.  ``stop_above`` ends the search as soon
    as a point value above it has been certified (the returned ``upper`` is
    still a valid bound, just not tight).
    """
    beta = comass.check_beta(beta)
    if not tol > 0:
        raise ValueError("tol must be positive")
    a, b = _check_interval(params, beta, interval)
    ev = _Bounds(params, beta)
    heap: list = []
    best_lo, best_t = -math.inf, a
    pruned_hi = -math.inf
    counter = 0

    def consider(lo, hi, t, mirrored):
        nonlocal best_lo, best_t
        if lo > best_lo:
            best_lo, best_t = lo, (math.pi - t if mirrored else t)

    def push(x, y, mirrored):
        nonlocal counter, pruned_hi
        counter += 1
        res = ev.resolve(x, y)
        if res is not None:
            lo, hi, t = res
            consider(lo, hi, t, mirrored)
            heapq.heappush(heap, (-hi, counter, x, y, mirrored, True))
            return
        mid = 0.5 * (x + y)
        mlo, mhi = ev.point(mid)
        consider(mlo, mhi, mid, mirrored)
        hi = ev.box(x, y)[1]
        if x > 0.0 and (ev.type_i or y < HALF_PI):
            hi = min(hi, mhi + ev.dpsi_abs_max(x, y) * 0.5 * (y - x))
        if hi <= best_lo:
            pruned_hi = max(pruned_hi, hi)
            return
        heapq.heappush(heap, (-hi, counter, x, y, mirrored, False))

    for x, y, mirrored in _fold(params, a, b):
        edges = np.linspace(x, y, initial_boxes + 1)
        edges[0], edges[-1] = x, y
        for i in range(initial_boxes):
            push(float(edges[i]), float(edges[i + 1]), mirrored)

    converged = True
    while True:
        neg_hi, _, x, y, mirrored, resolved = heap[0]
        top = -neg_hi
        if resolved or top - best_lo <= tol:
            break
        if stop_above is not None and best_lo > stop_above:
            break
        mid = 0.5 * (x + y)
        if not (x < mid < y) or counter >= max_boxes:
            converged = False
            break
        heapq.heappop(heap)
        push(x, mid, mirrored)
        push(mid, y, mirrored)
    upper = max(-heap[0][0], pruned_hi)
    return SupBound(upper, best_t, best_lo, counter, converged)


# -- roots of eta ------------------------------------------------------------

def find_eta_roots(params: MetricParams, beta: float, scan_points: int = 10_000,
                   xtol: float = 1e-12) -> tuple[float, ...]:
    """Sign changes of ``eta`` on a uniform scan, refined by bisection."""
    if scan_points < 1000:
        raise ValueError("scan_points must be at least 1000")
    beta = comass.check_beta(beta)
    lo, hi = params.domain
    t = lo + (np.arange(scan_points) + 0.5) * ((hi - lo) / scan_points)
    e = comass.eta(t, params, beta)
    roots = [float(x) for x in t[e == 0.0]]
    sgn = np.sign(e)
    idx = np.nonzero(sgn[:-1] * sgn[1:] < 0)[0]
    f = lambda x: comass.eta(x, params, beta)  # noqa: E731
    for i in idx:
        x0, x1 = float(t[i]), float(t[i + 1])
        f0 = f(x0)
        while x1 - x0 > xtol:
            xm = 0.5 * (x0 + x1)
            if not x0 < xm < x1:
                break
            fm = f(xm)
            if fm == 0.0:
                x0 = x1 = xm
                break
            if (fm > 0) == (f0 > 0):
                x0, f0 = xm, fm
            else:
                x1 = xm
        roots.append(x0 if abs(f(x0)) <= abs(f(x1)) else x1)
    return tuple(sorted(roots))


# -- local calibration interval ------------------------------------------------

_LEVEL = 1.0 + 1e-12


def _first_exceed(params, beta, start, stop, n):
    """First crossing of ``psi`` above 1 moving from ``start`` toward ``stop``."""
    ts = start + (stop - start) * np.arange(1, n + 1) / n
    ts[-1] = stop
    vals = comass.psi(ts, params, beta)
    bad = np.nonzero(~(vals <= _LEVEL))[0]
    if bad.size == 0:
        return stop
    j = int(bad[0])
    good = start if j == 0 else float(ts[j - 1])
    badt = float(ts[j])
    for _ in range(200):
        mid = 0.5 * (good + badt)
        if mid in (good, badt):
            break
        if comass.psi(mid, params, beta) <= _LEVEL:
            good = mid
        else:
            badt = mid
        if abs(badt - good) < 1e-13:
            break
    return good


def local_interval(params: MetricParams, beta: float, tol: float = DEFAULT_TOL,
                   scan_points: int = 10_000, retries: int = 10):
    """Maximal interval around ``theta0`` on which ``psi <= 1 + tol`` is certified."""
    beta = comass.check_beta(beta)
    t0 = HALF_PI if params.is_type_i else params.theta0
    if not comass.eta(t0, params, beta) > 0:
        return None
    lo, hi = params.domain
    left = _first_exceed(params, beta, t0, lo, scan_points)
    right = _first_exceed(params, beta, t0, hi, scan_points)
    for _ in range(retries):
        if not left < t0 < right:
            return None
        res = certified_sup(params, beta, (left, right), tol, stop_above=1.0 + tol)
        if res.upper <= 1.0 + tol:
            return left, right
        x = res.argmax
        if x > t0:
            right = _first_exceed(params, beta, t0, x, scan_points)
        else:
            left = _first_exceed(params, beta, t0, x, scan_points)
    return None


# -- verdicts ------------------------------------------------------------------

def _endpoints_ok(params: MetricParams, beta: float) -> bool:
    return all(comass.endpoint_limit(params, beta, side) <= 1.0 for side in ("left", "right"))


def certify(params: MetricParams, beta: float, tol: float = DEFAULT_TOL) -> ComassVerdict:
    """Global, local or no calibration certificate for ``f = r^a phi^beta / a``.

    Analytic tests are tried first, then the certified supremum over the whole
    domain, then a local interval around ``theta0``.  A divergent endpoint
    rules out a global certificate but still permits a local one.
    """
    beta = comass.check_beta(beta)
    if not 0 < tol <= 1e-3:
        raise ValueError("tol must lie in (0, 1e-3]")
    roots = find_eta_roots(params, beta)
    t0 = HALF_PI if params.is_type_i else params.theta0

    def verdict(kind, sup, loc, interval, method):
        return ComassVerdict(kind, sup, loc, interval, roots, beta, tol, method, params)

    if _endpoints_ok(params, beta):
        if not params.is_type_i and params.l == params.p + params.q and beta == 1.0:
            if comass.sigma_bound(params) >= 0:
                return verdict(Verdict.GLOBAL, 1.0, t0, None, Method.SIGMA)
        if comass.quadratic_test(params, beta).certifies_positive:
            return verdict(Verdict.GLOBAL, 1.0, t0, None, Method.DISCRIMINANT)
    divergent = any(math.isinf(comass.endpoint_limit(params, beta, side))
                    for side in ("left", "right"))
    if divergent:
        sup, loc = math.inf, (params.domain[0]
                              if math.isinf(comass.endpoint_limit(params, beta, "left"))
                              else params.domain[1])
    else:
        res = certified_sup(params, beta, None, tol, stop_above=1.0 + tol)
        if res.upper <= 1.0 + tol:
            return verdict(Verdict.GLOBAL, res.upper, res.argmax, None, Method.SUP)
        sup, loc = res.upper, res.argmax
    interval = local_interval(params, beta, tol)
    if interval is not None:
        return verdict(Verdict.LOCAL, sup, loc, interval, Method.SUP)
    return verdict(Verdict.NONE, sup, loc, None, Method.SUP)


def best_verdict(verdicts: Sequence[ComassVerdict]) -> ComassVerdict:
    """Global beats Local beats NoCertificate; among Local the widest interval."""
    best = None
    for v in verdicts:
        if best is None or _RANK[v.verdict] > _RANK[best.verdict]:
            best = v
        elif v.verdict is Verdict.LOCAL and best.verdict is Verdict.LOCAL \
                and v.local_width > best.local_width:
            best = v
    if best is None:
        raise ValueError("no verdicts to compare")
    return best


@dataclass(frozen=True)
class SweepRow:
    r: int
    s: int
    best: ComassVerdict
    all_verdicts: tuple[ComassVerdict, ...] = field(repr=False, default=())


def _sweep_one(args):
    r, s, betas, tol = args
    params = derive_params(get_entry(1), r=r, s=s)
    vs = tuple(certify(params, b, tol) for b in betas)
    return SweepRow(r, s, best_verdict(vs), vs)


def default_workers() -> int:
    try:
        return max(1, int(os.environ.get("CONECALIB_THREADS", "1")))
    except ValueError:
        return 1


def sweep_row1(r_max: int, s_max: int, betas: Sequence[float] = DEFAULT_BETAS,
               tol: float = DEFAULT_TOL, workers: int | None = None) -> list[SweepRow]:
    """Best verdict for every ``2 <= r <= r_max``, ``2 <= s <= s_max``."""
    for name, v in (("r_max", r_max), ("s_max", s_max)):
        if not 2 <= v <= 12:
            raise ValueError(f"{name} must lie in [2, 12] (got {v})")
    betas = tuple(comass.check_beta(b) for b in betas)
    if not betas:
        raise ValueError("at least one beta is required")
    jobs = [(r, s, betas, tol) for r in range(2, r_max + 1) for s in range(2, s_max + 1)]
    workers = default_workers() if workers is None else max(1, int(workers))
    if workers == 1:
        return [_sweep_one(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_sweep_one, jobs))
