"""Reports, run configuration and file output (CSV, JSON, SVG)."""

from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from dataclasses import dataclass, fields
from typing import Any, Iterable, Sequence

from .catalog import MetricParams
from .certify import ComassVerdict

__all__ = [
    "SCHEMA_VERSION",
    "TOOL_VERSION",
    "CertReport",
    "RunConfig",
    "read_config",
    "parse_betas",
    "atomic_write",
    "to_json",
    "csv_text",
    "fmt_num",
    "svg_line_chart",
]

SCHEMA_VERSION = 1
TOOL_VERSION = "0.1.0"


def fmt_num(x) -> str:
    """17 significant digits; non-finite values as ``inf``/``-inf``/``nan``."""
    if isinstance(x, bool) or x is None:
        return "" if x is None else str(x).lower()
    if isinstance(x, int):
        return str(x)
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return "%.17g" % x


def _jsonable(obj):
    if isinstance(obj, float):
        if math.isnan(obj):
            return "nan"
        if math.isinf(obj):
            return "inf" if obj > 0 else "-inf"
        return obj
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if hasattr(obj, "item") and callable(obj.item):  # numpy scalars
        return _jsonable(obj.item())
    return obj


def _from_json_float(x):
    # float() also parses the "inf"/"nan" strings written by _jsonable
    return float(x)


def to_json(obj) -> str:
    return json.dumps(_jsonable(obj), indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def csv_text(header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([v if isinstance(v, str) else fmt_num(v) for v in row])
    return buf.getvalue()


def atomic_write(path: str, text: str) -> None:
    """Write UTF-8 text via a temporary file in the target directory."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".tmp-", dir=directory)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


@dataclass(frozen=True)
class CertReport:
    """Serializable summary of one certification run."""

    cone: dict
    params: dict
    beta: float
    verdict: str
    sup_psi: float
    local_interval: tuple[float, float] | None
    eta_roots: tuple[float, ...]
    method: str
    tol: float
    version: str = TOOL_VERSION
    wall_time: float | None = None

    @classmethod
    def from_verdict(cls, v: ComassVerdict, params: MetricParams,
                     wall_time: float | None = None) -> "CertReport":
        cone = {"row_id": params.row_id, "shape": {k: val for k, val in params.shape}}
        return cls(cone, params.to_dict(), v.beta, v.verdict.value, v.sup_psi, v.local_interval,
                   tuple(v.eta_roots), v.method.value, v.tol, TOOL_VERSION, wall_time)

    def to_dict(self, stable: bool = False) -> dict:
        d = {"schema": SCHEMA_VERSION}
        for f in fields(self):
            val = getattr(self, f.name)
            if f.name == "wall_time" and (stable or val is None):
                continue
            d[f.name] = list(val) if isinstance(val, tuple) else val
        return d

    def to_json(self, stable: bool = False) -> str:
        return to_json(self.to_dict(stable))

    @classmethod
    def from_json(cls, text: str) -> "CertReport":
        d = json.loads(text)
        if d.pop("schema", None) != SCHEMA_VERSION:
            raise ValueError("unsupported report schema")
        li = d.get("local_interval")
        return cls(
            cone=d["cone"],
            params={k: _from_json_float(v) for k, v in d["params"].items()},
            beta=float(d["beta"]),
            verdict=d["verdict"],
            sup_psi=_from_json_float(d["sup_psi"]),
            local_interval=None if li is None else (float(li[0]), float(li[1])),
            eta_roots=tuple(float(x) for x in d["eta_roots"]),
            method=d["method"],
            tol=float(d["tol"]),
            version=d.get("version", TOOL_VERSION),
            wall_time=d.get("wall_time"),
        )


@dataclass
class RunConfig:
    """Tolerances, grid sizes and output settings shared by the commands."""

    tol: float = 1e-9
    ode_rtol: float = 1e-10
    ode_atol: float = 1e-15
    glue_tol: float = 1e-6
    scan_points: int = 10_000
    verify_points: int = 100_000
    plot_points: int = 2001
    betas: tuple[float, ...] = (1.0, 1.2)
    outdir: str = "."
    stable: bool = False

    def validate(self) -> "RunConfig":
        for name in ("tol", "ode_rtol", "ode_atol", "glue_tol"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        for name in ("scan_points", "verify_points", "plot_points"):
            if getattr(self, name) < 1000:
                raise ValueError(f"{name} must be at least 1000")
        if not self.betas:
            raise ValueError("betas must not be empty")
        return self

    def merged(self, values: dict) -> "RunConfig":
        """Copy with ``values`` (strings or typed) applied over the fields."""
        kw = {f.name: getattr(self, f.name) for f in fields(self)}
        for key, raw in values.items():
            if raw is None:
                continue
            if key not in kw:
                raise ValueError(f"unknown configuration key {key!r}")
            cur = kw[key]
            if key == "betas":
                kw[key] = parse_betas(raw) if isinstance(raw, str) else tuple(float(b) for b in raw)
            elif isinstance(cur, bool):
                kw[key] = raw if isinstance(raw, bool) else str(raw).lower() in ("1", "true", "yes")
            elif isinstance(cur, int):
                kw[key] = int(raw)
            elif isinstance(cur, float):
                kw[key] = float(raw)
            else:
                kw[key] = raw
        return RunConfig(**kw).validate()


def parse_betas(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError as e:
        raise ValueError(f"malformed beta list {text!r}") from e


def read_config(path: str) -> dict:
    """``key = value`` lines; ``#`` starts a comment."""
    out = {}
    with open(path, encoding="utf-8") as fh:
        for n, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{n}: expected key=value")
            k, v = line.split("=", 1)
            out[k.strip().replace("-", "_")] = v.strip()
    return out


def svg_line_chart(xs: Sequence[float], ys: Sequence[float], *, title: str = "",
                   x_label: str = "theta", y_label: str = "psi", ref_y: float | None = 1.0,
                   width: int = 640, height: int = 400, y_cap: float = 3.0) -> str:
    """A small self-contained SVG: axes, one polyline, optional reference line."""
    pts = [(float(x), float(y)) for x, y in zip(xs, ys) if math.isfinite(y)]
    if len(pts) < 2:
        raise ValueError("need at least two finite points")
    x0, x1 = min(p[0] for p in pts), max(p[0] for p in pts)
    ymax = min(max(max(p[1] for p in pts), ref_y or 0.0) * 1.05, y_cap)
    ymin = 0.0
    ml, mr, mt, mb = 60, 20, 30, 45
    pw, ph = width - ml - mr, height - mt - mb

    def sx(x):
        return ml + (x - x0) / (x1 - x0) * pw

    def sy(y):
        return mt + ph - (min(y, ymax) - ymin) / (ymax - ymin) * ph

    poly = " ".join(f"{sx(x):.3f},{sy(y):.3f}" for x, y in pts)
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
        f'<line x1="{ml}" y1="{mt + ph}" x2="{ml + pw}" y2="{mt + ph}" stroke="black"/>',
        f'<line x1="{ml}" y1="{mt}" x2="{ml}" y2="{mt + ph}" stroke="black"/>',
    ]
    for i in range(5):
        xv = x0 + (x1 - x0) * i / 4
        yv = ymin + (ymax - ymin) * i / 4
        out.append(f'<text x="{sx(xv):.3f}" y="{mt + ph + 16}" font-size="11" '
                   f'text-anchor="middle">{xv:.4g}</text>')
        out.append(f'<text x="{ml - 6}" y="{sy(yv) + 4:.3f}" font-size="11" '
                   f'text-anchor="end">{yv:.4g}</text>')
    if ref_y is not None and ymin <= ref_y <= ymax:
        out.append(f'<line x1="{ml}" y1="{sy(ref_y):.3f}" x2="{ml + pw}" y2="{sy(ref_y):.3f}" '
                   f'stroke="gray" stroke-dasharray="4,3"/>')
    out.append(f'<polyline fill="none" stroke="steelblue" stroke-width="1.5" points="{poly}"/>')
    out.append(f'<text x="{ml + pw / 2}" y="{height - 8}" font-size="12" '
               f'text-anchor="middle">{x_label}</text>')
    out.append(f'<text x="14" y="{mt + ph / 2}" font-size="12" text-anchor="middle" '
               f'transform="rotate(-90 14 {mt + ph / 2})">{y_label}</text>')
    if title:
        out.append(f'<text x="{ml + pw / 2}" y="18" font-size="13" '
                   f'text-anchor="middle">{title}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
