"""Analysis drivers: 2-D grid scans of the compression quotient and boundary search."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from .derivative import NeighborhoodSpec, NoNeighborError, QuotientResult, cdq_distances, pd_approx, pdq
from .distance import Compressor
from .sut import SutAdapter
from .values import ErrorOutput, Real, Sequence, numeric_coords

DEFAULT_SEED = 20190
DEFAULT_RANGE = (-2.0, 8.0)
DEFAULT_RESOLUTION = 100
DEFAULT_SAMPLES = 32


class GeometryMismatchError(ValueError):
    """Two grids do not cover the same cells, or were made with incompatible settings."""


class NoBoundaryFoundError(RuntimeError):
    """A search ended without any input pair whose outputs differ."""


# --- grid scan ----------------------------------------------------------------

@dataclass(frozen=True)
class GridScanConfig:
    """Grid over a rectangle, ``resolution`` cells per axis.

    ``window`` = (ix0, ix1, iy0, iy1) restricts the scan to a half-open block
    of cell indices of the same lattice; per-cell seeds depend only on the
    global seed and absolute cell indices, so a window reproduces the
    matching block of the full scan exactly. ``radius`` defaults to three
    quarters of the smaller cell side: a neighbourhood confined to its own
    cell cannot see a boundary lying on a cell edge.
    """

    x_range: tuple = DEFAULT_RANGE
    y_range: tuple = DEFAULT_RANGE
    resolution: int = DEFAULT_RESOLUTION
    samples: int = DEFAULT_SAMPLES
    radius: Optional[float] = None
    compressor: Compressor = field(default_factory=Compressor)
    seed: int = DEFAULT_SEED
    window: Optional[tuple] = None

    def __post_init__(self):
        for lo, hi in (self.x_range, self.y_range):
            if not (math.isfinite(lo) and math.isfinite(hi) and hi > lo):
                raise ValueError(f"range must be non-empty and finite, got ({lo}, {hi})")
        if self.resolution < 2:
            raise ValueError("resolution must be >= 2")
        if self.samples < 1:
            raise ValueError("samples must be >= 1")
        if self.radius is not None and not self.radius > 0:
            raise ValueError("radius must be > 0")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")
        if self.window is not None:
            ix0, ix1, iy0, iy1 = self.window
            if not (0 <= ix0 < ix1 <= self.resolution and 0 <= iy0 < iy1 <= self.resolution):
                raise ValueError(f"window {self.window} outside 0..{self.resolution}")

    @property
    def cell_radius(self) -> float:
        if self.radius is not None:
            return self.radius
        side = min(self.x_range[1] - self.x_range[0], self.y_range[1] - self.y_range[0])
        return 3 * side / (4 * self.resolution)

    def index_window(self) -> tuple:
        return self.window or (0, self.resolution, 0, self.resolution)

    def to_dict(self) -> dict:
        return {
            "x_range": list(self.x_range),
            "y_range": list(self.y_range),
            "resolution": self.resolution,
            "samples": self.samples,
            "radius": self.cell_radius,
            "compressor": self.compressor.name,
            "level": self.compressor.level,
            "seed": self.seed,
            "window": list(self.window) if self.window else None,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GridScanConfig":
        return cls(
            x_range=tuple(d["x_range"]),
            y_range=tuple(d["y_range"]),
            resolution=int(d["resolution"]),
            samples=int(d["samples"]),
            radius=float(d["radius"]) if d.get("radius") is not None else None,
            compressor=Compressor(d["compressor"], int(d["level"])),
            seed=int(d["seed"]),
            window=tuple(d["window"]) if d.get("window") else None,
        )


def cell_centers(lo: float, hi: float, resolution: int) -> list:
    """Centers of ``resolution`` equal cells on [lo, hi], each correctly rounded."""
    # one division per center keeps values like -1.95 exact-decimal in repr
    return [(lo * 2 * resolution + (2 * i + 1) * (hi - lo)) / (2 * resolution) for i in range(resolution)]


@dataclass
class HeatGrid:
    """Quotient per cell; ``quotients[j, i]`` is the cell at x index i, y index j.

    Undefined cells hold NaN and have no witness. Indices are relative to the
    scanned window; ``origin`` gives the absolute index of the first cell.
    """

    x_centers: list
    y_centers: list
    quotients: np.ndarray
    witnesses: list
    config: GridScanConfig
    sut: dict

    @property
    def shape(self):
        return self.quotients.shape

    @property
    def origin(self) -> tuple:
        ix0, _, iy0, _ = self.config.index_window()
        return ix0, iy0

    @property
    def defined(self) -> np.ndarray:
        return ~np.isnan(self.quotients)

    def undefined_count(self) -> int:
        return int(np.isnan(self.quotients).sum())

    def argmax_cells(self) -> list:
        """(i, j) of every cell holding the maximal defined quotient, row-major."""
        if not self.defined.any():
            return []
        top = np.nanmax(self.quotients)
        return [(int(i), int(j)) for j, i in zip(*np.nonzero(self.quotients == top))]

    def provenance(self) -> dict:
        return {"sut": self.sut, "scan": self.config.to_dict(),
                "compressor": self.config.compressor.describe()}


def _scan_cell(sut, d_out, d_in, cfg, x, y, ix, iy):
    a = Sequence([Real(x), Real(y)])
    nbhd = NeighborhoodSpec(cfg.samples, cfg.cell_radius, (cfg.seed, ix, iy))
    try:
        r = pd_approx(sut, d_out, d_in, a, nbhd)
    except NoNeighborError:
        return math.nan, None
    return r.quotient, r


def grid_scan(sut: SutAdapter, cfg: GridScanConfig, jobs: int = 1) -> HeatGrid:
    """Sampled compression-quotient derivative at every cell center.

    ``jobs`` > 1 scans rows on a thread pool, unless the program under test
    declares itself serial-only.
    """
    if sut.arity != 2:
        raise ValueError(f"grid scans need a program of arity 2, {sut.name} has {sut.arity}")
    xs_all = cell_centers(*cfg.x_range, cfg.resolution)
    ys_all = cell_centers(*cfg.y_range, cfg.resolution)
    ix0, ix1, iy0, iy1 = cfg.index_window()
    xs, ys = xs_all[ix0:ix1], ys_all[iy0:iy1]
    d_out, d_in = cdq_distances(cfg.compressor)

    def row(jy):
        iy = iy0 + jy
        return [_scan_cell(sut, d_out, d_in, cfg, x, ys[jy], ix0 + jx, iy) for jx, x in enumerate(xs)]

    if jobs > 1 and sut.parallel_safe:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(row, range(len(ys))))
    else:
        rows = [row(j) for j in range(len(ys))]
    q = np.array([[c[0] for c in r] for r in rows], dtype=float)
    witnesses = [[c[1] for c in r] for r in rows]
    return HeatGrid(xs, ys, q, witnesses, cfg, sut.describe())


@dataclass
class GridDiff:
    """Cell-wise |q1 - q2|; NaN where exactly one grid is undefined, 0 where both are."""

    abs_diff: np.ndarray
    status_mismatch: int
    x_centers: list
    y_centers: list

    @property
    def is_zero(self) -> bool:
        return self.status_mismatch == 0 and not np.any(np.nan_to_num(self.abs_diff, nan=1.0))

    def top_fraction_cells(self, fraction: float = 0.1, nonzero_only: bool = True) -> list:
        """(i, j) of the top ``fraction`` of cells by difference, largest first."""
        d = self.abs_diff
        flat = [(float(d[j, i]), j, i) for j in range(d.shape[0]) for i in range(d.shape[1])
                if not np.isnan(d[j, i]) and (d[j, i] > 0 or not nonzero_only)]
        flat.sort(key=lambda t: (-t[0], t[1], t[2]))
        k = max(1, int(math.ceil(fraction * len(flat)))) if flat else 0
        return [(i, j) for _, j, i in flat[:k]]

    def summary(self) -> dict:
        d = self.abs_diff
        finite = d[~np.isnan(d)]
        return {
            "cells": int(d.size),
            "status_mismatch": self.status_mismatch,
            "nonzero_cells": int((finite > 0).sum()),
            "max_abs_diff": float(finite.max()) if finite.size else 0.0,
            "mean_abs_diff": float(finite.mean()) if finite.size else 0.0,
        }


def heatgrid_diff(g1: HeatGrid, g2: HeatGrid) -> GridDiff:
    c1, c2 = g1.config, g2.config
    if (g1.shape != g2.shape or g1.x_centers != g2.x_centers or g1.y_centers != g2.y_centers):
        raise GeometryMismatchError("grids cover different cells")
    for key in ("samples", "seed"):
        if getattr(c1, key) != getattr(c2, key):
            raise GeometryMismatchError(f"grids differ in {key}: {getattr(c1, key)} vs {getattr(c2, key)}")
    if c1.cell_radius != c2.cell_radius or c1.compressor != c2.compressor:
        raise GeometryMismatchError("grids were made with different neighbourhoods or compressors")
    q1, q2 = g1.quotients, g2.quotients
    u1, u2 = np.isnan(q1), np.isnan(q2)
    mismatch = u1 ^ u2
    diff = np.abs(np.where(u1 | u2, 0.0, q1) - np.where(u1 | u2, 0.0, q2))
    diff[mismatch] = np.nan
    return GridDiff(diff, int(mismatch.sum()), list(g1.x_centers), list(g1.y_centers))


# --- boundary search ------------------------------------------------------------

@dataclass(frozen=True)
class SearchConfig:
    """(1+1)-ES over input pairs.

    The first ``init_fraction`` of the budget draws random pairs in the
    program's domain (a point and a nearby second point) and keeps the best.
    After that the location step of the first point follows a geometric
    schedule, ``step * decay ** (t / period)`` for evaluation ``t``, never
    below ``floor``. The offset of the second point has its own scale,
    multiplied by ``decay`` on every accepted pair with a positive quotient.
    ``pressure`` weights closeness in the fitness: a defined positive
    quotient ``q`` at Euclidean gap ``g`` scores ``q * (step / g) ** pressure``.
    With ``pressure = 0`` the fitness is the quotient itself.
    """

    budget: int = 2000
    step: float = 0.5
    decay: float = 0.9
    floor: float = 1e-6
    period: int = 50
    pressure: float = 0.5
    init_fraction: float = 0.1
    seed: int = DEFAULT_SEED
    d_out_floor: float = 0.2

    def __post_init__(self):
        if self.budget < 1:
            raise ValueError("budget must be >= 1")
        if not 0 < self.decay <= 1:
            raise ValueError("decay must be in (0, 1]")
        if not self.floor > 0:
            raise ValueError("floor must be > 0")
        if not self.step > 0:
            raise ValueError("step must be > 0")
        if self.period < 1:
            raise ValueError("period must be >= 1")
        if self.pressure < 0:
            raise ValueError("pressure must be >= 0")
        if not 0 <= self.init_fraction <= 1:
            raise ValueError("init_fraction must be in [0, 1]")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class BoundaryPair:
    result: QuotientResult
    midpoint: tuple
    euclidean_gap: float
    evaluations: int
    seed: int
    fitness_trace: tuple = ()

    @property
    def quotient(self) -> float:
        return self.result.quotient

    def straddles(self, d_out_floor: float = 0.2) -> bool:
        """One side errors and the other does not, with outputs at least ``d_out_floor`` apart."""
        ea = isinstance(self.result.output_a, ErrorOutput)
        eb = isinstance(self.result.output_b, ErrorOutput)
        return ea != eb and self.result.d_out >= d_out_floor


def _as_point(coords) -> Sequence:
    return Sequence([Real(float(c)) for c in coords])


def _quantize(v, scale: float) -> np.ndarray:
    # one more decimal than the scale resolves keeps renderings short
    digits = max(0, math.ceil(-math.log10(scale))) + 1
    return np.array([round(float(x), digits) for x in v])


def boundary_search(sut: SutAdapter, cfg: SearchConfig, c: Compressor) -> BoundaryPair:
    """Search for a close input pair with a large compression quotient.

    Every evaluation is one candidate pair, i.e. two program runs, and the
    incumbent is replaced whenever a candidate's fitness is not worse, so the
    fitness trace never decreases. Pairs with an undefined quotient score
    -inf. Raises :class:`NoBoundaryFoundError` if no pair with a positive
    quotient turns up within the budget.
    """
    lo, hi = (np.asarray(v, dtype=float) for v in sut.numeric_bounds())
    rng = np.random.default_rng(cfg.seed)
    d_out, d_in = cdq_distances(c)

    def evaluate(pa, pb):
        r = pdq(sut, d_out, d_in, _as_point(pa), _as_point(pb))
        if not r.defined:
            return r, -math.inf
        if r.quotient <= 0:
            return r, r.quotient
        gap = max(float(np.linalg.norm(pa - pb)), cfg.floor)
        return r, r.quotient * (cfg.step / gap) ** cfg.pressure

    def propose(centre, loc_scale, off_scale):
        q = min(loc_scale, off_scale)
        a2 = _quantize(np.clip(centre + loc_scale * rng.standard_normal(lo.size), lo, hi), q)
        b2 = _quantize(np.clip(a2 + off_scale * rng.standard_normal(lo.size), lo, hi), q)
        return a2, b2

    sigma = shrink = cfg.step
    n_init = max(1, int(cfg.init_fraction * cfg.budget))
    best, f_best, a, trace = None, -math.inf, None, []
    for _ in range(n_init):
        a2 = _quantize(rng.uniform(lo, hi), shrink)
        b2 = _quantize(np.clip(a2 + shrink * rng.standard_normal(lo.size), lo, hi), shrink)
        r, f = evaluate(a2, b2)
        if best is None or f >= f_best:
            a, best, f_best = a2, r, f
        trace.append(f_best)
    for t in range(cfg.budget - n_init):
        sigma = max(cfg.step * cfg.decay ** ((t + 1) / cfg.period), cfg.floor)
        a2, b2 = propose(a, sigma, min(shrink, sigma))
        r, f = evaluate(a2, b2)
        if f >= f_best:
            a, best, f_best = a2, r, f
            if r.defined and r.quotient > 0:
                shrink = max(shrink * cfg.decay, cfg.floor)
        trace.append(f_best)
    if not (best.defined and best.quotient > 0):
        raise NoBoundaryFoundError(
            f"no input pair with differing outputs found in {cfg.budget} evaluations")
    pa = np.asarray(numeric_coords(best.input_a))
    pb = np.asarray(numeric_coords(best.input_b))
    return BoundaryPair(best, tuple(((pa + pb) / 2).tolist()), float(np.linalg.norm(pa - pb)),
                        cfg.budget, cfg.seed, tuple(trace))
