"""Adaptive Dormand-Prince 5(4) integrator for scalar ODEs.

Dense output is cubic Hermite on each accepted step, using the exact
slopes at the step ends.  Terminal events are located by bisection on the
dense output.  Integration runs forward or backward depending on the sign
of ``t_end - t0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

__all__ = ["OdeResult", "dopri5", "IntegrationError"]


class IntegrationError(RuntimeError):
    """The integrator gave up; ``t`` and ``y`` are the last accepted state."""

    def __init__(self, message: str, t: float = math.nan, y: float = math.nan):
        super().__init__(message)
        self.t, self.y = t, y


_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_B = (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0)
_E = (71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40)


@dataclass
class OdeResult:
    """Accepted knots with values and slopes; callable via Hermite interpolation."""

    t: np.ndarray
    y: np.ndarray
    dy: np.ndarray
    steps: int
    rejected: int
    max_error_estimate: float
    event_t: float | None = None
    status: str = "ok"
    meta: dict = field(default_factory=dict)

    def _sorted(self):
        if self.t[-1] < self.t[0]:
            return self.t[::-1], self.y[::-1], self.dy[::-1]
        return self.t, self.y, self.dy

    def __call__(self, s, derivative: bool = False):
        t, y, dy = self._sorted()
        s_arr = np.asarray(s, dtype=float)
        if np.any(s_arr < t[0] - 1e-15) or np.any(s_arr > t[-1] + 1e-15):
            raise ValueError("evaluation point outside the integrated range")
        i = np.clip(np.searchsorted(t, s_arr, side="right") - 1, 0, len(t) - 2)
        h = t[i + 1] - t[i]
        u = (s_arr - t[i]) / h
        y0, y1, d0, d1 = y[i], y[i + 1], dy[i] * h, dy[i + 1] * h
        if derivative:
            out = ((6 * u * u - 6 * u) * (y0 - y1) + (3 * u * u - 4 * u + 1) * d0
                   + (3 * u * u - 2 * u) * d1) / h
        else:
            h00 = (1 + 2 * u) * (1 - u) ** 2
            h10 = u * (1 - u) ** 2
            h01 = u * u * (3 - 2 * u)
            h11 = u * u * (u - 1)
            out = h00 * y0 + h10 * d0 + h01 * y1 + h11 * d1
        return float(out) if s_arr.ndim == 0 else out

    @property
    def t_final(self) -> float:
        return float(self.t[-1])


def _hermite(t0, t1, y0, y1, f0, f1, s):
    h = t1 - t0
    u = (s - t0) / h
    return ((1 + 2 * u) * (1 - u) ** 2 * y0 + u * (1 - u) ** 2 * h * f0
            + u * u * (3 - 2 * u) * y1 + u * u * (u - 1) * h * f1)


def dopri5(f: Callable[[float, float], float], t0: float, y0: float, t_end: float, *,
           rtol: float = 1e-10, atol: float = 1e-10, h0: float | None = None,
           max_step: float | None = None, event: Callable[[float, float], float] | None = None,
           max_steps: int = 200_000) -> OdeResult:
    """Integrate ``y' = f(t, y)`` from ``t0`` to ``t_end``.

    ``event(t, y)`` is watched for a sign change; on the first one the
    integration stops at the located root and ``event_t`` is set.
    """
    if not (rtol > 0 and atol > 0):
        raise ValueError("tolerances must be positive")
    span = t_end - t0
    if span == 0:
        raise ValueError("empty integration range")
    direction = 1.0 if span > 0 else -1.0
    max_step = abs(span) if max_step is None else float(max_step)
    h = min(abs(h0) if h0 else 1e-3 * abs(span), max_step)
    t, y = float(t0), float(y0)
    fy = f(t, y)
    ts, ys, dys = [t], [y], [fy]
    ev_prev = event(t, y) if event else None
    steps = rejected = 0
    max_err = 0.0
    while direction * (t_end - t) > 0:
        if steps + rejected >= max_steps:
            raise IntegrationError(f"step budget exhausted at t={t}", t, y)
        if h < 1e-14 * max(1.0, abs(t)):
            raise IntegrationError(f"step size underflow at t={t}", t, y)
        h = min(h, abs(t_end - t))
        hs = direction * h
        k = [fy]
        for i in range(1, 7):
            yi = y + hs * sum(a * kk for a, kk in zip(_A[i], k))
            k.append(f(t + _C[i] * hs, yi))
        y_new = y + hs * sum(b * kk for b, kk in zip(_B, k))
        err = abs(hs * sum(e * kk for e, kk in zip(_E, k)))
        sc = atol + rtol * max(abs(y), abs(y_new))
        ratio = err / sc
        if not math.isfinite(ratio):
            h *= 0.25
            rejected += 1
            continue
        if ratio <= 1.0:
            t_new = t + hs if h < abs(t_end - t) else t_end
            f_new = k[6]
            steps += 1
            max_err = max(max_err, err)
            if event is not None:
                ev_new = event(t_new, y_new)
                if ev_prev != 0 and (ev_new == 0 or (ev_new > 0) != (ev_prev > 0)):
                    a_, b_ = t, t_new
                    ga = ev_prev
                    for _ in range(100):
                        mid = 0.5 * (a_ + b_)
                        gm = event(mid, _hermite(t, t_new, y, y_new, fy, f_new, mid))
                        if gm == 0:
                            a_ = b_ = mid
                            break
                        if (gm > 0) == (ga > 0):
                            a_, ga = mid, gm
                        else:
                            b_ = mid
                        if abs(b_ - a_) <= 1e-15 * max(1.0, abs(mid)):
                            break
                    te = b_
                    ye = _hermite(t, t_new, y, y_new, fy, f_new, te)
                    ts.append(te)
                    ys.append(ye)
                    dys.append(f(te, ye))
                    return OdeResult(np.array(ts), np.array(ys), np.array(dys), steps, rejected,
                                     max_err, event_t=te, status="event")
                ev_prev = ev_new
            t, y, fy = t_new, y_new, f_new
            ts.append(t)
            ys.append(y)
            dys.append(fy)
        else:
            rejected += 1
        fac = 0.9 * ratio ** -0.2 if ratio > 0 else 5.0
        h = min(max_step, h * min(5.0, max(0.2, fac)))
    return OdeResult(np.array(ts), np.array(ys), np.array(dys), steps, rejected, max_err)

