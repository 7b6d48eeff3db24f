"""Calibration certificates for homogeneous cohomogeneity-two cones.

Modules: ``catalog`` (classification rows and metric exponents), ``comass``
(closed forms of the squared comass), ``certify`` (rigorous verdicts and the
row-1 sweep), ``deform`` (smooth deformations near singular orbits),
``odecal`` (ODE and slope-field constructions) and ``cli``.
"""

from .catalog import DomainError, MetricParams, derive_params, get_entry, list_catalog
from .certify import ComassVerdict, Method, Verdict, certified_sup, certify, sweep_row1
from .report import TOOL_VERSION as __version__

__all__ = [
    "DomainError",
    "MetricParams",
    "derive_params",
    "get_entry",
    "list_catalog",
    "ComassVerdict",
    "Method",
    "Verdict",
    "certified_sup",
    "certify",
    "sweep_row1",
    "__version__",
]
