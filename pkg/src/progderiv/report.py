"""File exports: heat grids as CSV and PGM, boundary pairs as JSON.

CSV layout: ``#``-prefixed provenance lines, a header row of x centers, then
one row per y center from the top (largest y) down. Undefined cells are
written as ``NA``. Numbers use the shortest decimal that round-trips, with
integral values written without a fraction (``0``, not ``0.0``).

PGM images use the same orientation, one pixel per cell; larger quotients
are darker and undefined cells are mid-gray (128).
"""

from __future__ import annotations

import datetime as _dt
import json
import math
from pathlib import Path

import numpy as np

from . import __version__
from .explore import GridDiff, GridScanConfig, HeatGrid
from .values import render

SCHEMA_VERSION = 1
UNDEFINED_TOKEN = "NA"
UNDEFINED_GRAY = 128


def fmt_number(q: float) -> str:
    if math.isnan(q):
        return UNDEFINED_TOKEN
    if q.is_integer() and abs(q) < 1e16:
        return str(int(q))
    return repr(q)


def base_provenance(timestamp: bool = True) -> dict:
    prov = {"tool": "progderiv", "tool_version": __version__, "schema_version": SCHEMA_VERSION}
    if timestamp:
        prov["created"] = _dt.datetime.now(_dt.timezone.utc).replace(microsecond=0).isoformat()
    return prov


def _dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False)


def _header_lines(title: str, sections: dict, timestamp: bool) -> list:
    lines = [f"# {title}"]
    for key, value in base_provenance(timestamp).items():
        lines.append(f"# {key}: {value}")
    for key, value in sections.items():
        lines.append(f"# {key}: {_dumps(value)}")
    return lines


def _write_matrix_csv(path, xs, ys, m, comment_lines):
    out = list(comment_lines)
    out.append("y\\x," + ",".join(fmt_number(float(x)) for x in xs))
    for j in reversed(range(len(ys))):
        out.append(",".join([fmt_number(float(ys[j]))] + [fmt_number(float(v)) for v in m[j]]))
    Path(path).write_text("\n".join(out) + "\n", encoding="utf-8")


def export_grid_csv(g: HeatGrid, path, timestamp: bool = True) -> Path:
    lines = _header_lines("progderiv heat grid (sampled compression quotient per cell)",
                          g.provenance(), timestamp)
    _write_matrix_csv(path, g.x_centers, g.y_centers, g.quotients, lines)
    return Path(path)


def export_diff_csv(d: GridDiff, path, provenance: dict, timestamp: bool = True) -> Path:
    lines = _header_lines("progderiv heat grid difference (|q1 - q2|, NA where definedness differs)",
                          {**provenance, "summary": d.summary()}, timestamp)
    _write_matrix_csv(path, d.x_centers, d.y_centers, d.abs_diff, lines)
    return Path(path)


def read_csv_matrix(path):
    """Parse a grid CSV: (provenance dict, x centers, y centers ascending, matrix[j, i])."""
    prov, rows = {}, []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line.startswith("#"):
            key, sep, value = line[1:].strip().partition(": ")
            if sep:
                try:
                    prov[key] = json.loads(value)
                except json.JSONDecodeError:
                    prov[key] = value
            continue
        if line:
            rows.append(line.split(","))
    if not rows:
        raise ValueError(f"{path}: no grid rows")
    xs = [float(v) for v in rows[0][1:]]
    body = rows[1:][::-1]
    ys = [float(r[0]) for r in body]
    m = np.array([[math.nan if v == UNDEFINED_TOKEN else float(v) for v in r[1:]] for r in body],
                 dtype=float).reshape(len(ys), len(xs))
    return prov, xs, ys, m


def read_grid_csv(path) -> HeatGrid:
    """Re-import a grid written by :func:`export_grid_csv` (witnesses are not stored)."""
    prov, xs, ys, m = read_csv_matrix(path)
    if "scan" not in prov:
        raise ValueError(f"{path}: missing scan provenance")
    cfg = GridScanConfig.from_dict(prov["scan"])
    witnesses = [[None] * len(xs) for _ in ys]
    return HeatGrid(xs, ys, m, witnesses, cfg, prov.get("sut", {}))


def _pixels(m: np.ndarray):
    """Map a matrix to gray levels; returns (pixels, lo, hi) with lo/hi None if nothing is defined."""
    defined = ~np.isnan(m)
    pix = np.full(m.shape, UNDEFINED_GRAY, dtype=int)
    if not defined.any():
        return pix, None, None
    lo, hi = float(m[defined].min()), float(m[defined].max())
    if hi == lo:
        pix[defined] = 255
    else:
        scaled = 255.0 * (hi - m[defined]) / (hi - lo)
        pix[defined] = np.rint(scaled).astype(int)
    return pix, lo, hi


def _write_pgm(path, m, comments):
    pix, lo, hi = _pixels(m)
    lines = ["P2"] + [f"# {c}" for c in comments]
    if lo is None:
        lines.append("# warning: no defined cells; image is uniform 128")
    else:
        lines.append(f"# normalization: min={fmt_number(lo)} max={fmt_number(hi)} (max -> 0, min -> 255)")
    lines.append(f"# undefined cells: {UNDEFINED_GRAY}")
    ny, nx = m.shape
    lines.append(f"{nx} {ny}")
    lines.append("255")
    for j in reversed(range(ny)):
        lines.append(" ".join(str(int(v)) for v in pix[j]))
    Path(path).write_text("\n".join(lines) + "\n", encoding="ascii")
    return Path(path)


def export_grid_image(g: HeatGrid, path, timestamp: bool = True) -> Path:
    comments = [f"progderiv heat grid: {g.sut.get('name', '?')}, darker = larger quotient"]
    if timestamp:
        comments.append(f"created: {base_provenance(True)['created']}")
    comments.append(f"scan: {_dumps(g.config.to_dict())}")
    return _write_pgm(path, g.quotients, comments)


def export_diff_image(d: GridDiff, path) -> Path:
    return _write_pgm(path, d.abs_diff, ["progderiv heat grid difference, darker = larger |q1 - q2|"])


def read_pgm(path):
    """Parse a P2 PGM written by this module into an array, top row first."""
    tokens = []
    for line in Path(path).read_text(encoding="ascii").splitlines():
        if not line.startswith("#"):
            tokens.extend(line.split())
    if tokens[0] != "P2":
        raise ValueError("not a P2 PGM")
    nx, ny = int(tokens[1]), int(tokens[2])
    return np.array([int(t) for t in tokens[4:]], dtype=int).reshape(ny, nx)


def pair_record(p, d_out_floor: float = 0.2) -> dict:
    r = p.result
    return {
        "seed": p.seed,
        "evaluations": p.evaluations,
        "input_a": render(r.input_a),
        "input_b": render(r.input_b),
        "output_a": render(r.output_a),
        "output_b": render(r.output_b),
        "d_in": r.d_in,
        "d_out": r.d_out,
        "quotient": r.quotient,
        "midpoint": list(p.midpoint),
        "euclidean_gap": p.euclidean_gap,
        "straddles_boundary": p.straddles(d_out_floor),
    }


def export_pairs_json(pairs, path, provenance: dict = None, failures=(), timestamp: bool = True,
                      d_out_floor: float = 0.2) -> Path:
    doc = {
        "schema_version": SCHEMA_VERSION,
        "provenance": {**base_provenance(timestamp), **(provenance or {})},
        "pairs": [pair_record(p, d_out_floor) for p in pairs],
        "failures": list(failures),
    }
    Path(path).write_text(json.dumps(doc, sort_keys=True, indent=2, allow_nan=False) + "\n",
                          encoding="utf-8")
    return Path(path)
