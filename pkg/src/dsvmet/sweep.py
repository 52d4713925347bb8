"""Parameter sweeps, (|alpha|, r) density grids and their optima.

Phase-dependent runs realize ``phi - theta/2 = x`` as ``phi = x, theta = 0``.
Nothing is lost by this, since the closed forms only see ``phi - theta/2``.

Cells are independent. With more than one worker they are evaluated on a
thread pool, and results are always assembled in sequential order, so the
output does not depend on the worker count.
"""
from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .closedform import limits
from .core import DsvParams, phase_sensitive_param

THREADS_ENV = "DSVMET_THREADS"
MAX_GRID_CELLS = 10**7
ENVELOPE_POINTS = 400

PHASE_COLUMNS = ("x", "cramer_rao", "shot_noise", "heisenberg", "hofmann")
NBAR_COLUMNS = ("n_bar", "r", "cramer_rao", "envelope_min", "envelope_max")
GRID_CSV_COLUMNS = ("alpha_mag", "r", "cramer_rao", "delta")


@dataclass(frozen=True)
class SweepSpec:
    axis: str
    start: float
    stop: float
    points: int
    fixed: DsvParams = field(default_factory=lambda: DsvParams(0.0))
    measurements: int = 1

    def __post_init__(self):
        if self.axis not in ("phase", "n_bar"):
            raise ValueError(f"axis must be 'phase' or 'n_bar', got {self.axis!r}")
        if not (math.isfinite(self.start) and math.isfinite(self.stop)) or self.start >= self.stop:
            raise ValueError(f"need finite start < stop, got {self.start}, {self.stop}")
        if self.axis == "n_bar" and self.start < 0:
            raise ValueError(f"n_bar sweep must start at >= 0, got {self.start}")
        if int(self.points) != self.points or self.points < 2:
            raise ValueError(f"points must be an integer >= 2, got {self.points!r}")
        _check_measurements(self.measurements)

    def values(self) -> np.ndarray:
        return np.linspace(self.start, self.stop, int(self.points))


@dataclass(frozen=True)
class GridSpec:
    alpha_max: float
    r_max: float
    alpha_points: int = 201
    r_points: int = 201
    phase: float = math.pi / 2
    measurements: int = 1

    def __post_init__(self):
        if not (self.alpha_max > 0 and math.isfinite(self.alpha_max)):
            raise ValueError(f"alpha_max must be positive, got {self.alpha_max}")
        if not (self.r_max > 0 and math.isfinite(self.r_max)):
            raise ValueError(f"r_max must be positive, got {self.r_max}")
        for name in ("alpha_points", "r_points"):
            v = getattr(self, name)
            if int(v) != v or v < 2:
                raise ValueError(f"{name} must be an integer >= 2, got {v!r}")
        if self.alpha_points * self.r_points > MAX_GRID_CELLS:
            raise ValueError(
                f"grid of {self.alpha_points}x{self.r_points} cells exceeds {MAX_GRID_CELLS}"
            )
        if not math.isfinite(self.phase):
            raise ValueError("phase must be finite")
        _check_measurements(self.measurements)

    def alpha_values(self) -> np.ndarray:
        return np.linspace(0.0, self.alpha_max, int(self.alpha_points))

    def r_values(self) -> np.ndarray:
        return np.linspace(0.0, self.r_max, int(self.r_points))


@dataclass(frozen=True)
class Optimum:
    alpha_mag: float
    r: float
    delta: float


@dataclass
class GridResult:
    """Density grids indexed ``[i_alpha][i_r]``."""

    spec: GridSpec
    delta_grid: np.ndarray
    cr_grid: np.ndarray
    optimum: Optimum

    def to_dict(self) -> dict:
        return {
            "spec": asdict(self.spec),
            "delta_grid": self.delta_grid.tolist(),
            "cr_grid": self.cr_grid.tolist(),
            "optimum": asdict(self.optimum),
        }


@dataclass
class Table:
    columns: tuple[str, ...]
    rows: list[tuple[float, ...]] = field(default_factory=list)

    def column(self, name: str) -> np.ndarray:
        i = self.columns.index(name)
        return np.array([row[i] for row in self.rows], dtype=float)

    def to_dict(self) -> dict:
        return {"columns": list(self.columns), "rows": [list(r) for r in self.rows]}


def _check_measurements(m) -> None:
    if int(m) != m or m < 1:
        raise ValueError(f"measurements must be a positive integer, got {m!r}")


def default_threads() -> int:
    raw = os.environ.get(THREADS_ENV)
    if raw is None or raw == "":
        return min(8, os.cpu_count() or 1)
    try:
        n = int(raw)
    except ValueError:
        raise ValueError(f"{THREADS_ENV} must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise ValueError(f"{THREADS_ENV} must be a positive integer, got {raw!r}")
    return n


def _ordered_map(fn: Callable, items: Sequence, threads: int | None) -> list:
    threads = default_threads() if threads is None else threads
    if threads <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def sweep_phase(spec: SweepSpec, threads: int | None = None) -> Table:
    """Accuracy limits against the phase-sensitive parameter, with |alpha| and r from ``spec.fixed``."""
    if spec.axis != "phase":
        raise ValueError(f"sweep_phase needs axis='phase', got {spec.axis!r}")

    def row(x: float) -> tuple[float, ...]:
        rep = limits(DsvParams.from_phase(spec.fixed.alpha_mag, spec.fixed.r, x), spec.measurements)
        return (x, rep.cramer_rao, rep.shot_noise, rep.heisenberg, rep.hofmann)

    return Table(PHASE_COLUMNS, _ordered_map(row, [float(x) for x in spec.values()], threads))


def _cr_at_nbar(n_bar: float, r: float, phase: float, measurements: int) -> float:
    alpha_sq = max(n_bar - math.sinh(r) ** 2, 0.0)
    p = DsvParams.from_phase(math.sqrt(alpha_sq), r, phase)
    return limits(p, measurements).cramer_rao


def envelope(n_bar: float, phase: float, measurements: int = 1,
             points: int = ENVELOPE_POINTS, extra_r: Sequence[float] = ()) -> tuple[float, float]:
    """Min and max Cramer-Rao limit over all (|alpha|, r) with mean photon number ``n_bar``.

    ``r`` is sampled on ``points`` values in ``[0, asinh(sqrt(n_bar))]``; any
    ``extra_r`` inside that range are sampled as well.
    """
    r_top = math.asinh(math.sqrt(n_bar))
    rs = list(np.linspace(0.0, r_top, points))
    rs += [r for r in extra_r if r <= r_top]
    crs = [_cr_at_nbar(n_bar, float(r), phase, measurements) for r in rs]
    return min(crs), max(crs)


def sweep_nbar(spec: SweepSpec, r_values: Sequence[float], threads: int | None = None,
               envelope_points: int = ENVELOPE_POINTS) -> Table:
    """Cramer-Rao limit along lines of constant r as the mean photon number grows.

    The phase comes from ``spec.fixed``. Each row also carries the min/max
    envelope over every squeezing strength at the same mean photon number.
    """
    if spec.axis != "n_bar":
        raise ValueError(f"sweep_nbar needs axis='n_bar', got {spec.axis!r}")
    r_values = [float(r) for r in r_values]
    for r in r_values:
        if r < 0 or not math.isfinite(r):
            raise ValueError(f"r values must be finite and >= 0, got {r}")
        if math.sinh(r) ** 2 > spec.stop:
            raise ValueError(f"r={r} needs n_bar >= {math.sinh(r) ** 2:.6g}, beyond stop={spec.stop}")
    phase = phase_sensitive_param(spec.fixed)
    n_values = [float(n) for n in spec.values()]

    def env(n: float) -> tuple[float, float]:
        return envelope(n, phase, spec.measurements, envelope_points, r_values)

    envelopes = dict(zip(n_values, _ordered_map(env, n_values, threads)))
    rows = []
    for r in r_values:
        floor = math.sinh(r) ** 2
        for n in n_values:
            if n < floor:
                continue
            lo, hi = envelopes[n]
            rows.append((n, r, _cr_at_nbar(n, r, phase, spec.measurements), lo, hi))
    return Table(NBAR_COLUMNS, rows)


def grid_density(spec: GridSpec, threads: int | None = None, tie_tol: float = 0.0) -> GridResult:
    """Cramer-Rao limit and ``delta = CR - Hofmann`` on an inclusive (|alpha|, r) grid.

    The optimum is the cell with the smallest finite delta; cells within
    ``tie_tol`` of it are broken towards smaller |alpha|, then smaller r. The
    vacuum cell has no finite delta and is never selected.
    """
    alphas = spec.alpha_values()
    rs = spec.r_values()

    def row(alpha: float) -> tuple[list[float], list[float]]:
        cr_row, delta_row = [], []
        for r in rs:
            rep = limits(DsvParams.from_phase(float(alpha), float(r), spec.phase), spec.measurements)
            cr_row.append(rep.cramer_rao)
            delta_row.append(rep.delta)
        return cr_row, delta_row

    rows = _ordered_map(row, [float(a) for a in alphas], threads)
    cr_grid = np.array([cr for cr, _ in rows], dtype=float)
    delta_grid = np.array([d for _, d in rows], dtype=float)

    finite = np.isfinite(delta_grid)
    if not finite.any():
        raise ValueError("grid has no cell with a finite delta")
    best = delta_grid[finite].min()
    # row-major order already is (smaller alpha, then smaller r)
    i, j = np.argwhere(finite & (delta_grid <= best + tie_tol))[0]
    optimum = Optimum(alpha_mag=float(alphas[i]), r=float(rs[j]), delta=float(delta_grid[i, j]))
    return GridResult(spec=spec, delta_grid=delta_grid, cr_grid=cr_grid, optimum=optimum)


def phase_regime(x: float) -> str:
    """Classify ``phi - theta/2`` as ``'favorable'``, ``'boundary'`` or ``'unfavorable'``.

    The value is folded into ``[pi/2, pi]`` using ``cos 2x = cos 2(pi - x)``.
    ``[pi/2, 3pi/4)`` is favorable (large |alpha| and r win), ``3pi/4`` is the
    boundary and ``(3pi/4, pi]`` is unfavorable (squeezed vacuum wins).
    """
    y = math.fmod(x, math.pi)
    if y < 0:
        y += math.pi
    if y < math.pi / 2:
        y = math.pi - y
    if math.isclose(y, 0.75 * math.pi, rel_tol=0.0, abs_tol=1e-12):
        return "boundary"
    return "favorable" if y < 0.75 * math.pi else "unfavorable"


# -- output ---------------------------------------------------------------

def format_float(v: float) -> str:
    """Shortest round-trip decimal; non-finite values as ``inf``, ``-inf``, ``nan``."""
    v = float(v)
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return repr(v)


def _json_safe(obj):
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else format_float(obj)
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, np.generic):
        return _json_safe(obj.item())
    return obj


def to_json(obj) -> str:
    """Deterministic JSON text; non-finite floats become the strings ``"inf"``/``"nan"``."""
    return json.dumps(_json_safe(obj), indent=2, allow_nan=False) + "\n"


def table_to_csv(columns: Sequence[str], rows: Sequence[Sequence[float]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([format_float(v) for v in row])
    return buf.getvalue()


def grid_to_rows(result: GridResult) -> list[tuple[float, ...]]:
    alphas = result.spec.alpha_values()
    rs = result.spec.r_values()
    return [
        (float(a), float(r), float(result.cr_grid[i, j]), float(result.delta_grid[i, j]))
        for i, a in enumerate(alphas)
        for j, r in enumerate(rs)
    ]


def render(obj: Table | GridResult, fmt: str) -> str:
    if fmt not in ("csv", "json"):
        raise ValueError(f"format must be 'csv' or 'json', got {fmt!r}")
    if isinstance(obj, GridResult):
        if fmt == "json":
            return to_json(obj.to_dict())
        return table_to_csv(GRID_CSV_COLUMNS, grid_to_rows(obj))
    if fmt == "json":
        return to_json(obj.to_dict())
    return table_to_csv(obj.columns, obj.rows)


def emit(obj: Table | GridResult, fmt: str, destination: str | os.PathLike) -> None:
    """Write a table or grid result to ``destination`` as CSV or JSON."""
    text = render(obj, fmt)
    path = Path(destination)
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"cannot write {fmt} output to {path}: {exc.strerror or exc}") from exc
