"""Distance functions over Values.

``ncd`` is the normalized compression distance on canonical bytes,

    NCD(x, y) = (min(C(xy), C(yx)) - min(C(x), C(y))) / max(C(x), C(y))

with a byte-equality short-circuit to exactly 0 and clamping below at 0.
Values above 1 are reported as computed. ``abs_diff`` and ``euclidean`` are
the numeric distances used for reference checks.
"""

from __future__ import annotations

import bz2
import lzma
import math
import os
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Optional

from . import kernels
from .values import Integer, Real, Sequence, Value

DEFAULT_COMPRESSOR = "gzip"
DEFAULT_LEVEL = 9
LEVEL_ENV_VAR = "PROGDERIV_LEVEL"

# deflate-family compressors handled by the kernels: name -> zlib wbits
_DEFLATE_WBITS = {"zlib": 15, "deflate": -15, "gzip": 31}
_LEVELS = {"zlib": range(0, 10), "deflate": range(0, 10), "gzip": range(0, 10),
           "bz2": range(1, 10), "lzma": range(0, 10)}
COMPRESSORS = tuple(_LEVELS)


class DistanceTypeError(TypeError):
    """A distance was applied to values of the wrong shape or type."""


def default_level() -> int:
    raw = os.environ.get(LEVEL_ENV_VAR)
    return int(raw) if raw else DEFAULT_LEVEL


@dataclass(frozen=True)
class Compressor:
    """A lossless compressor used as a stand-in for Kolmogorov complexity."""

    name: str = DEFAULT_COMPRESSOR
    level: int = field(default_factory=default_level)

    def __post_init__(self):
        if self.name not in _LEVELS:
            raise ValueError(f"unknown compressor {self.name!r}; choose from {', '.join(COMPRESSORS)}")
        if self.level not in _LEVELS[self.name]:
            lv = _LEVELS[self.name]
            raise ValueError(f"{self.name} level must be in [{lv.start}, {lv.stop - 1}], got {self.level}")

    @property
    def wbits(self) -> Optional[int]:
        return _DEFLATE_WBITS.get(self.name)

    def size(self, data: bytes) -> int:
        """Compressed length of ``data`` in bytes."""
        if self.wbits is not None:
            return kernels.compressed_size(data, self.level, self.wbits)
        if self.name == "bz2":
            return len(bz2.compress(data, self.level))
        return len(lzma.compress(data, format=lzma.FORMAT_XZ, preset=self.level))

    @property
    def empty_size(self) -> int:
        return self.size(b"")

    def describe(self) -> dict:
        return {"name": self.name, "level": self.level, "empty_size": self.empty_size}


def ncd_bytes(c: Compressor, x: bytes, y: bytes) -> float:
    if x == y:
        return 0.0
    if c.wbits is not None:
        return kernels.ncd_pair(x, y, c.level, c.wbits)
    cx, cy = c.size(x), c.size(y)
    joint = min(c.size(x + y), c.size(y + x))
    r = (joint - min(cx, cy)) / max(cx, cy)
    return r if r > 0.0 else 0.0


def ncd_bytes_many(c: Compressor, x: bytes, ys: list) -> list:
    if c.wbits is not None:
        return kernels.ncd_one_to_many(x, list(ys), c.level, c.wbits)
    return [ncd_bytes(c, x, y) for y in ys]


def ncd(c: Compressor, a: Value, b: Value) -> float:
    return ncd_bytes(c, a.canonical, b.canonical)


def _number(v: Value) -> float:
    if isinstance(v, (Real, Integer)):
        return float(v.value)
    raise DistanceTypeError(f"expected Real or Integer, got {type(v).__name__}")


def abs_diff(a: Value, b: Value) -> float:
    return abs(_number(a) - _number(b))


def euclidean(a: Value, b: Value) -> float:
    if not (isinstance(a, Sequence) and isinstance(b, Sequence)):
        raise DistanceTypeError("euclidean distance needs two Sequences of numbers")
    if len(a) != len(b):
        raise DistanceTypeError(f"length mismatch: {len(a)} vs {len(b)}")
    return math.sqrt(sum((_number(p) - _number(q)) ** 2 for p, q in zip(a, b)))


@dataclass(frozen=True, eq=False)
class DistanceFn:
    """A named, pure distance over Values.

    ``kind`` is one of ``"ncd"``, ``"abs_diff"``, ``"euclidean"``. NCD
    instances may carry a memo keyed on canonical byte pairs, which pays off
    for program outputs (few distinct values) and not for inputs.
    """

    name: str
    kind: str
    fn: Callable[[Value, Value], float]
    compressor: Optional[Compressor] = None
    memo_size: int = 0

    def __post_init__(self):
        if self.kind == "ncd" and self.memo_size:
            c = self.compressor
            cached = lru_cache(maxsize=self.memo_size)(lambda x, y: ncd_bytes(c, x, y))

            def memo_fn(a, b, _cached=cached):
                x, y = a.canonical, b.canonical
                if x == y:
                    return 0.0
                return _cached(x, y) if x < y else _cached(y, x)

            object.__setattr__(self, "fn", memo_fn)

    def __call__(self, a: Value, b: Value) -> float:
        return self.fn(a, b)

    def one_to_many(self, a: Value, bs: list) -> list:
        """Distances from ``a`` to each of ``bs``; batched for NCD."""
        if self.kind == "ncd" and not self.memo_size:
            return ncd_bytes_many(self.compressor, a.canonical, [b.canonical for b in bs])
        return [self.fn(a, b) for b in bs]

    def describe(self) -> dict:
        d = {"name": self.name, "kind": self.kind}
        if self.compressor is not None:
            d["compressor"] = self.compressor.describe()
        return d


def ncd_distance(c: Optional[Compressor] = None, memo_size: int = 0) -> DistanceFn:
    c = c or Compressor()
    return DistanceFn(f"ncd[{c.name}:{c.level}]", "ncd", lambda a, b: ncd(c, a, b), c, memo_size)


ABS_DIFF = DistanceFn("abs_diff", "abs_diff", abs_diff)
EUCLIDEAN = DistanceFn("euclidean", "euclidean", euclidean)


def get_distance(name: str, c: Optional[Compressor] = None) -> DistanceFn:
    if name == "ncd":
        return ncd_distance(c)
    if name in ("abs", "abs_diff"):
        return ABS_DIFF
    if name in ("euclid", "euclidean"):
        return EUCLIDEAN
    raise ValueError(f"unknown distance {name!r}")
