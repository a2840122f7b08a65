"""Program difference quotients and the sampled program derivative.

For a program P, an input pair (a, b), an input distance d_in and an output
distance d_out, the program difference quotient is

    PDQ(a, b) = d_out(P(a), P(b)) / d_in(a, b)

and the compression difference quotient is PDQ with NCD on both sides. The
program derivative at ``a`` takes ``b`` as the nearest distinct input; since
no such neighbour exists on a continuum, :func:`pd_approx` samples a
neighbourhood and keeps the neighbour with the largest quotient.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .distance import Compressor, DistanceFn, ncd_distance
from .sut import SutAdapter
from .values import Real, Sequence, Value, numeric_coords

ZERO_INPUT_DISTANCE = "zero-input-distance"
INDISTINGUISHABLE_OUTPUTS = "indistinguishable-outputs"

OUTPUT_MEMO_SIZE = 1 << 16


class NoNeighborError(RuntimeError):
    """Every sampled neighbour was degenerate, so no quotient is defined."""


@dataclass(frozen=True)
class QuotientResult:
    input_a: Value
    input_b: Value
    output_a: Value
    output_b: Value
    d_in: float
    d_out: float
    quotient: Optional[float]
    d_in_name: str
    d_out_name: str
    undefined_reason: Optional[str] = None

    @property
    def defined(self) -> bool:
        return self.quotient is not None


@dataclass(frozen=True)
class NeighborhoodSpec:
    """Uniform sampling in a hypercube of half-width ``radius`` around a point."""

    n: int = 32
    radius: float = 0.05
    seed: Union[int, tuple] = 0

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("neighbourhood sample count must be >= 1")
        if not self.radius > 0:
            raise ValueError("neighbourhood radius must be > 0")


def _result(a, b, out_a, out_b, d_in, d_out, d_in_fn, d_out_fn) -> QuotientResult:
    reason = None
    if not d_in > 0:
        reason = ZERO_INPUT_DISTANCE
    elif d_out == 0 and out_a.canonical != out_b.canonical:
        # distinct outputs the distance cannot tell apart
        reason = INDISTINGUISHABLE_OUTPUTS
    q = None if reason else d_out / d_in
    return QuotientResult(a, b, out_a, out_b, d_in, d_out, q, d_in_fn.name, d_out_fn.name, reason)


def pdq(sut: SutAdapter, d_out: DistanceFn, d_in: DistanceFn, a: Value, b: Value,
        output_a: Optional[Value] = None) -> QuotientResult:
    """Evaluate the program difference quotient for one input pair.

    ``output_a`` may be passed when P(a) is already known.
    """
    out_a = sut(a) if output_a is None else output_a
    out_b = sut(b)
    return _result(a, b, out_a, out_b, d_in(a, b), d_out(out_a, out_b), d_in, d_out)


def cdq_distances(c: Compressor):
    """(d_out, d_in) NCD pair used by the compression quotient.

    The output side is memoised: outputs repeat heavily, inputs almost never.
    """
    return ncd_distance(c, memo_size=OUTPUT_MEMO_SIZE), ncd_distance(c)


def cdq(sut: SutAdapter, c: Compressor, a: Value, b: Value) -> QuotientResult:
    d_out, d_in = cdq_distances(c)
    return pdq(sut, d_out, d_in, a, b)


def _point_maker(a: Value):
    if isinstance(a, Sequence):
        return lambda xs: Sequence([Real(x) for x in xs])
    return lambda xs: Real(xs[0])


def sample_neighbors(a: Value, nbhd: NeighborhoodSpec, rng=None, count: Optional[int] = None) -> list:
    """Draw ``count`` (default ``nbhd.n``) uniform neighbours of a numeric value."""
    coords = np.asarray(numeric_coords(a), dtype=float)
    rng = np.random.default_rng(nbhd.seed) if rng is None else rng
    count = nbhd.n if count is None else count
    make = _point_maker(a)
    offsets = rng.uniform(-nbhd.radius, nbhd.radius, size=(count, coords.size))
    return [make(row) for row in (coords + offsets).tolist()]


def pd_approx(sut: SutAdapter, d_out: DistanceFn, d_in: DistanceFn, a: Value,
              nbhd: NeighborhoodSpec, trace: Optional[list] = None) -> QuotientResult:
    """Approximate the program derivative at ``a`` by its best sampled neighbour.

    ``nbhd.n`` neighbours are drawn; each one that equals ``a`` or yields an
    undefined quotient is replaced by a fresh draw from the same stream, at
    most ``nbhd.n`` replacements in total. The neighbour with the largest
    quotient wins, ties going to the smaller input distance and then to the
    earlier draw. Every evaluated result is appended to ``trace`` if given.
    """
    rng = np.random.default_rng(nbhd.seed)
    out_a = sut(a)
    best = None
    pending = nbhd.n
    replacements_left = nbhd.n
    while pending:
        degenerate = 0
        fresh = []
        for b in sample_neighbors(a, nbhd, rng, pending):
            if b.canonical == a.canonical:
                degenerate += 1
            else:
                fresh.append(b)
        for b, din in zip(fresh, d_in.one_to_many(a, fresh)):
            out_b = sut(b)
            r = _result(a, b, out_a, out_b, din, d_out(out_a, out_b), d_in, d_out)
            if trace is not None:
                trace.append(r)
            if not r.defined:
                degenerate += 1
            elif (best is None or r.quotient > best.quotient
                  or (r.quotient == best.quotient and r.d_in < best.d_in)):
                best = r
        pending = min(degenerate, replacements_left)
        replacements_left -= pending
    if best is None:
        raise NoNeighborError(f"no neighbour of {a!r} gave a defined quotient")
    return best
