"""Homogeneous cohomogeneity-two families and their orbit-space metrics.

Each row of the classification is a :class:`ConeEntry`.  Group and link
labels are opaque strings; nothing here does representation theory.  The
only computation is :func:`derive_params`, which turns a row (plus its shape
parameters) into the exponents of the orbit-space metric

    type II:  ds^2 = r^l cos^p(t) sin^q(t) (r^2 dt^2 + dr^2)   on 0 < t < pi/2
    type I:   ds^2 = r^(2a-2) sin^q(t)   (r^2 dt^2 + dr^2)     on 0 < t < pi

together with the critical angle and the normalising constant ``tau``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Mapping

__all__ = [
    "Family",
    "ConeEntry",
    "MetricParams",
    "DomainError",
    "list_catalog",
    "get_entry",
    "derive_params",
    "is_area_minimizing",
    "AREA_MINIMIZING_ROWS",
]


class DomainError(ValueError):
    """Shape parameters outside the range the classification table allows."""


class Family(str, enum.Enum):
    TYPE_II = "TypeII_Stretchable"
    TYPE_I = "TypeI_Im"


@dataclass(frozen=True)
class ConeEntry:
    row_id: int
    group_label: str
    link_label: str
    angle_over_pi: Fraction
    family: Family
    volume_descriptor: str
    shape_kind: str | None = None  # "rs", "k" or None
    exponents: Mapping[str, object] = field(default_factory=dict)
    note: str = ""

    @property
    def cone_angle(self) -> float:
        return float(self.angle_over_pi) * math.pi

    @property
    def angle_label(self) -> str:
        return f"pi/{self.angle_over_pi.denominator}"

    def to_dict(self) -> dict:
        return {
            "row_id": self.row_id,
            "group": self.group_label,
            "link": self.link_label,
            "angle": self.angle_label,
            "family": self.family.value,
            "exponents": {k: str(v) for k, v in self.exponents.items()},
        }


_F = Fraction

_CATALOG: tuple[ConeEntry, ...] = (
    ConeEntry(1, "SO(r)xSO(s)", "S^(r-1) x S^(s-1), r,s>=2", _F(1, 2), Family.TYPE_II,
              "c*x^(2r-2)*y^(2s-2)", "rs", {"p": "2r-2", "q": "2s-2", "l": "p+q"}),
    ConeEntry(2, "SO(2)xSO(k)", "SO(2)xSO(k)/Z2xSO(k-2), k>=3", _F(1, 4), Family.TYPE_II,
              "c*(xy)^(2k-4)*(x^2-y^2)^2", "k", {"p": 2, "q": "2k-4", "l": "2k-3"}),
    ConeEntry(3, "SU(2)xSU(k)", "SU(2)xSU(k)/T1xSU(k-2), k>=2", _F(1, 4), Family.TYPE_II,
              "c*(xy)^(4k-6)*(x^2-y^2)^4", "k", {"p": 4, "q": "4k-6", "l": "4k-3"}),
    ConeEntry(4, "Sp(2)xSp(k)", "Sp(2)xSp(k)/Sp(1)^2xSp(k-2), k>=2", _F(1, 4), Family.TYPE_II,
              "c*(xy)^(8k-10)*(x^2-y^2)^8", "k", {"p": 8, "q": "8k-10", "l": "8k-3"}),
    ConeEntry(5, "U(5)", "U(5)/SU(2)xSU(2)xT1", _F(1, 4), Family.TYPE_II,
              "c*(xy)^2*Im{(x+iy)^4}^8", None, {"p": 8, "q": 10, "l": 17},
              note="listed as SU(5)/SU(2)xSU(2) in the minimality statement"),
    ConeEntry(6, "U(1).Spin(10)", "U(1).Spin(10)/T1.SU(4)", _F(1, 4), Family.TYPE_II,
              "c*(xy)^6*Im{(x+iy)^4}^12", None, {"p": 12, "q": 18, "l": 29}),
    ConeEntry(7, "SO(3)", "SO(3)/Z2+Z2", _F(1, 3), Family.TYPE_I,
              "c*Im{(x+iy)^3}^2", None, {"p": 3, "q": 2}),
    ConeEntry(8, "SU(3)", "SU(3)/T2", _F(1, 3), Family.TYPE_I,
              "c*Im{(x+iy)^3}^4", None, {"p": 3, "q": 4}),
    ConeEntry(9, "Sp(3)", "Sp(3)/Sp(1)^3", _F(1, 3), Family.TYPE_I,
              "c*Im{(x+iy)^3}^8", None, {"p": 3, "q": 8}),
    ConeEntry(10, "F4", "F4/Spin(8)", _F(1, 3), Family.TYPE_I,
              "c*Im{(x+iy)^3}^16", None, {"p": 3, "q": 16}),
    ConeEntry(11, "Sp(2)", "Sp(2)/T2", _F(1, 4), Family.TYPE_I,
              "c*Im{(x+iy)^4}^4", None, {"p": 4, "q": 4}),
    ConeEntry(12, "G2", "G2/T2", _F(1, 6), Family.TYPE_I,
              "c*Im{(x+iy)^6}^4", None, {"p": 6, "q": 4}),
    ConeEntry(13, "SO(4)", "SO(4)/Z2+Z2", _F(1, 6), Family.TYPE_I,
              "c*Im{(x+iy)^6}^2", None, {"p": 6, "q": 2}),
)

# rows whose cones are asserted area-minimizing (for some shapes)
AREA_MINIMIZING_ROWS = (1, 2, 3, 4, 5, 6, 9, 10)


def list_catalog() -> tuple[ConeEntry, ...]:
    return _CATALOG


def get_entry(row_id: int) -> ConeEntry:
    if not 1 <= int(row_id) <= len(_CATALOG):
        raise DomainError(f"unknown row {row_id!r}; rows are 1..{len(_CATALOG)}")
    return _CATALOG[int(row_id) - 1]


@dataclass(frozen=True)
class MetricParams:
    """Orbit-space metric data consumed by every evaluation routine.

    ``p`` is the cosine exponent for type II rows.  For type I rows it is the
    degree in ``Im{(x+iy)^p}^q``; those rows carry no cosine factor, which is
    what :attr:`cos_exp` reports.
    """

    family: Family
    l: Fraction
    p: Fraction
    q: Fraction
    alpha: Fraction
    row_id: int | None = None
    shape: tuple[tuple[str, int], ...] = ()

    def __post_init__(self):
        if self.p <= 0 or self.q <= 0 or self.alpha <= 0:
            raise DomainError("p, q and alpha must be positive")

    @property
    def is_type_i(self) -> bool:
        return self.family is Family.TYPE_I

    @cached_property
    def cos_exp(self) -> float:
        return 0.0 if self.is_type_i else float(self.p)

    @cached_property
    def pf(self) -> float:
        return float(self.p)

    @cached_property
    def qf(self) -> float:
        return float(self.q)

    @cached_property
    def af(self) -> float:
        return float(self.alpha)

    @cached_property
    def theta0(self) -> float:
        if self.is_type_i:
            return math.pi / 2
        return math.atan(math.sqrt(self.qf / self.pf))

    @cached_property
    def log_tau(self) -> float:
        if self.is_type_i:
            return 0.0
        p, q = self.pf, self.qf
        return 0.5 * p * math.log(p / (p + q)) + 0.5 * q * math.log(q / (p + q))

    @cached_property
    def tau(self) -> float:
        return math.exp(self.log_tau)

    @property
    def domain(self) -> tuple[float, float]:
        return (0.0, math.pi) if self.is_type_i else (0.0, math.pi / 2)

    @property
    def label(self) -> str:
        extra = ",".join(f"{k}={v}" for k, v in self.shape)
        if self.row_id is None:
            return f"p={self.p},q={self.q}"
        return f"row{self.row_id}" + (f"({extra})" if extra else "")

    def to_dict(self) -> dict:
        return {
            "l": float(self.l),
            "p": float(self.p),
            "q": float(self.q),
            "alpha": float(self.alpha),
            "theta0": self.theta0,
            "tau": self.tau,
        }

    @classmethod
    def type_ii(cls, p, q, l=None, **kw) -> "MetricParams":
        """Generic stretched type II metric; ``l`` defaults to ``p + q``."""
        p, q = Fraction(p), Fraction(q)
        l = p + q if l is None else Fraction(l)
        return cls(Family.TYPE_II, l, p, q, (l + 2) / 2, **kw)

    @classmethod
    def type_i(cls, p, q, **kw) -> "MetricParams":
        p, q = Fraction(p), Fraction(q)
        alpha = (q - (2 * p - 2) / p + 2) / 2
        return cls(Family.TYPE_I, 2 * alpha - 2, p, q, alpha, **kw)


def _need(cond: bool, msg: str) -> None:
    if not cond:
        raise DomainError(msg)


def derive_params(entry: ConeEntry | int, r: int | None = None, s: int | None = None,
                  k: int | None = None) -> MetricParams:
    """Metric exponents for one row of the table and its shape parameters."""
    if not isinstance(entry, ConeEntry):
        entry = get_entry(entry)
    rid = entry.row_id
    if entry.shape_kind == "rs":
        _need(r is not None and s is not None, f"row {rid} needs shape parameters r and s")
        _need(int(r) == r and int(s) == s, "r and s must be integers")
        _need(r >= 2 and s >= 2, f"row {rid} requires r,s >= 2 (got r={r}, s={s})")
        p, q = 2 * r - 2, 2 * s - 2
        return MetricParams.type_ii(p, q, p + q, row_id=rid, shape=(("r", int(r)), ("s", int(s))))
    if entry.shape_kind == "k":
        _need(k is not None, f"row {rid} needs shape parameter k")
        _need(int(k) == k, "k must be an integer")
        kmin = 3 if rid == 2 else 2
        _need(k >= kmin, f"row {rid} requires k >= {kmin} (got k={k})")
        p, q, l = {2: (2, 2 * k - 4, 2 * k - 3),
                   3: (4, 4 * k - 6, 4 * k - 3),
                   4: (8, 8 * k - 10, 8 * k - 3)}[rid]
        return MetricParams.type_ii(p, q, l, row_id=rid, shape=(("k", int(k)),))
    _need(r is None and s is None and k is None, f"row {rid} takes no shape parameters")
    ex = entry.exponents
    if entry.family is Family.TYPE_II:
        return MetricParams.type_ii(ex["p"], ex["q"], ex["l"], row_id=rid)
    return MetricParams.type_i(ex["p"], ex["q"], row_id=rid)


def is_area_minimizing(row_id: int, r: int | None = None, s: int | None = None,
                       k: int | None = None) -> bool:
    """Whether the cone is in the affirmative part of the classification."""
    if row_id == 1:
        if r is None or s is None or r < 2 or s < 2:
            return False
        return r + s >= 9 or (r, s) in {(4, 4), (3, 5), (5, 3)}
    if row_id == 2:
        return k is not None and k >= 9
    if row_id == 3:
        return k is not None and k >= 4
    if row_id == 4:
        return k is not None and k >= 2
    return row_id in (5, 6, 9, 10)
