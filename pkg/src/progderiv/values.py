"""Canonical value model for program inputs and outputs.

Every input handed to a program under test, and every output it produces
(including errors), is a :class:`Value`. Values are immutable and have a
single canonical byte rendering, which is what compressors see and what the
subprocess wire protocol transmits. See ``docs/canonical-format.md``.

Equality and hashing of values are defined on the canonical bytes, so
``Real(1.0) != Integer(1)``, while ``Real(-0.0) == Real(0.0)`` because
negative zero is stored as zero.
"""

from __future__ import annotations

import math
from functools import cached_property
from typing import Iterable, Mapping, Union

__all__ = [
    "Value",
    "Real",
    "Integer",
    "Text",
    "Bytes",
    "Sequence",
    "Record",
    "ErrorOutput",
    "canonicalize",
    "render",
    "parse",
    "values_equal",
    "as_value",
    "numeric_coords",
    "CanonicalFormatError",
]


class CanonicalFormatError(ValueError):
    """Raised when text cannot be parsed as a canonical value rendering."""


def _text_field(s: str) -> bytes:
    raw = s.encode("utf-8")
    return b"T%d:%s" % (len(raw), raw)


class Value:
    """Base class of all value variants."""

    tag: bytes = b""

    def _encode(self) -> bytes:  # pragma: no cover - abstract
        raise NotImplementedError

    @cached_property
    def canonical(self) -> bytes:
        return self._encode()

    def __eq__(self, other):
        if not isinstance(other, Value):
            return NotImplemented
        return self.canonical == other.canonical

    def __hash__(self):
        return hash(self.canonical)

    def __repr__(self):
        return f"{type(self).__name__}<{self.canonical.decode('utf-8', 'replace')}>"

    def __setattr__(self, name, value):
        raise AttributeError(f"{type(self).__name__} is immutable")


def _init(obj, **fields):
    for k, v in fields.items():
        object.__setattr__(obj, k, v)


class Real(Value):
    tag = b"R"

    def __init__(self, value: float):
        if isinstance(value, bool):
            raise TypeError("bool is not a Real")
        value = float(value)
        if not math.isfinite(value):
            raise ValueError(f"Real payload must be finite, got {value!r}")
        # -0.0 equals 0.0 numerically, so it gets the same bytes
        _init(self, value=value + 0.0)

    def _encode(self) -> bytes:
        # repr() of a float is the shortest string that round-trips.
        return b"R:" + repr(self.value).encode("ascii")


class Integer(Value):
    tag = b"I"

    def __init__(self, value: int):
        if isinstance(value, bool) or not isinstance(value, int):
            raise TypeError(f"Integer payload must be int, got {type(value).__name__}")
        _init(self, value=value)

    def _encode(self) -> bytes:
        return b"I:%d" % self.value


class Text(Value):
    tag = b"T"

    def __init__(self, value: str):
        if not isinstance(value, str):
            raise TypeError("Text payload must be str")
        _init(self, value=value)

    def _encode(self) -> bytes:
        return _text_field(self.value)


class Bytes(Value):
    tag = b"X"

    def __init__(self, value: bytes):
        _init(self, value=bytes(value))

    def _encode(self) -> bytes:
        return b"X:" + self.value.hex().encode("ascii")


class Sequence(Value):
    tag = b"S"

    def __init__(self, items: Iterable[Value]):
        items = tuple(items)
        for it in items:
            if not isinstance(it, Value):
                raise TypeError(f"Sequence items must be Values, got {type(it).__name__}")
        _init(self, items=items)

    def __len__(self):
        return len(self.items)

    def __iter__(self):
        return iter(self.items)

    def __getitem__(self, i):
        return self.items[i]

    def _encode(self) -> bytes:
        return b"S[" + b",".join(it.canonical for it in self.items) + b"]"


class Record(Value):
    tag = b"M"

    def __init__(self, fields: Union[Mapping[str, Value], Iterable[tuple]]):
        pairs = list(fields.items()) if isinstance(fields, Mapping) else list(fields)
        names = [name for name, _ in pairs]
        if len(set(names)) != len(names):
            raise ValueError("Record field names must be unique")
        for name, v in pairs:
            if not isinstance(name, str):
                raise TypeError("Record field names must be str")
            if not isinstance(v, Value):
                raise TypeError(f"Record field {name!r} is not a Value")
        _init(self, fields=tuple(sorted(pairs, key=lambda p: p[0])))

    def __getitem__(self, name):
        for k, v in self.fields:
            if k == name:
                return v
        raise KeyError(name)

    def _encode(self) -> bytes:
        body = b",".join(_text_field(k) + b"=" + v.canonical for k, v in self.fields)
        return b"M{" + body + b"}"


class ErrorOutput(Value):
    """An error produced by the program under test, carried as ordinary data."""

    tag = b"E"

    def __init__(self, kind: str, message: str = ""):
        if not isinstance(kind, str) or not isinstance(message, str):
            raise TypeError("ErrorOutput kind and message must be str")
        _init(self, kind=kind, message=message)

    def _encode(self) -> bytes:
        return b"E(" + _text_field(self.kind) + b"," + _text_field(self.message) + b")"


def canonicalize(v: Value) -> bytes:
    return v.canonical


def render(v: Value) -> str:
    """Canonical rendering as UTF-8 text."""
    return v.canonical.decode("utf-8")


def values_equal(a: Value, b: Value) -> bool:
    return a.canonical == b.canonical


def as_value(x) -> Value:
    """Lift plain Python data into a Value (floats, ints, str, bytes, lists, dicts)."""
    if isinstance(x, Value):
        return x
    if isinstance(x, bool):
        raise TypeError("bool has no Value variant")
    if isinstance(x, int):
        return Integer(x)
    if isinstance(x, float):
        return Real(x)
    if isinstance(x, str):
        return Text(x)
    if isinstance(x, (bytes, bytearray)):
        return Bytes(x)
    if isinstance(x, Mapping):
        return Record({k: as_value(v) for k, v in x.items()})
    if isinstance(x, (list, tuple)):
        return Sequence(as_value(it) for it in x)
    # numpy scalars and similar
    if hasattr(x, "__float__"):
        return Real(float(x))
    raise TypeError(f"cannot convert {type(x).__name__} to a Value")


def numeric_coords(v: Value) -> tuple:
    """Coordinates of a numeric value: a Real/Integer or a Sequence of them."""
    if isinstance(v, (Real, Integer)):
        return (float(v.value),)
    if isinstance(v, Sequence) and all(isinstance(it, (Real, Integer)) for it in v.items):
        return tuple(float(it.value) for it in v.items)
    raise TypeError(f"not a numeric value: {v!r}")


# --- parsing ---------------------------------------------------------------

_NUM_CHARS = frozenset(b"0123456789+-.eE")
_HEX_CHARS = frozenset(b"0123456789abcdef")


class _Parser:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def fail(self, msg):
        raise CanonicalFormatError(f"{msg} at offset {self.pos}")

    def expect(self, token: bytes):
        if not self.data.startswith(token, self.pos):
            self.fail(f"expected {token!r}")
        self.pos += len(token)

    def peek(self) -> bytes:
        return self.data[self.pos : self.pos + 1]

    def take_while(self, allowed) -> bytes:
        start = self.pos
        data = self.data
        while self.pos < len(data) and data[self.pos] in allowed:
            self.pos += 1
        return data[start : self.pos]

    def text_field(self) -> str:
        self.expect(b"T")
        digits = self.take_while(b"0123456789")
        if not digits:
            self.fail("expected length")
        self.expect(b":")
        n = int(digits)
        end = self.pos + n
        if end > len(self.data):
            self.fail("truncated text")
        raw = self.data[self.pos : end]
        self.pos = end
        try:
            return raw.decode("utf-8")
        except UnicodeDecodeError:
            self.fail("invalid UTF-8 in text")

    def value(self) -> Value:
        tag = self.peek()
        if tag == b"R":
            self.expect(b"R:")
            s = self.take_while(_NUM_CHARS)
            try:
                x = float(s)
            except ValueError:
                self.fail("bad real")
            if not math.isfinite(x):
                self.fail("non-finite real")
            v = Real(x)
            if v.canonical[2:] != s:
                self.fail("real not in shortest round-trip form")
            return v
        if tag == b"I":
            self.expect(b"I:")
            s = self.take_while(b"+-0123456789")
            try:
                v = Integer(int(s))
            except ValueError:
                self.fail("bad integer")
            if v.canonical[2:] != s:
                self.fail("integer not in canonical form")
            return v
        if tag == b"T":
            return Text(self.text_field())
        if tag == b"X":
            self.expect(b"X:")
            s = self.take_while(_HEX_CHARS)
            if len(s) % 2:
                self.fail("odd-length hex")
            return Bytes(bytes.fromhex(s.decode("ascii")))
        if tag == b"S":
            self.expect(b"S[")
            items = []
            if self.peek() != b"]":
                items.append(self.value())
                while self.peek() == b",":
                    self.pos += 1
                    items.append(self.value())
            self.expect(b"]")
            return Sequence(items)
        if tag == b"M":
            self.expect(b"M{")
            fields = []
            if self.peek() != b"}":
                while True:
                    name = self.text_field()
                    self.expect(b"=")
                    fields.append((name, self.value()))
                    if self.peek() != b",":
                        break
                    self.pos += 1
            self.expect(b"}")
            rec = Record(fields)
            if [k for k, _ in rec.fields] != [k for k, _ in fields]:
                self.fail("record fields not in lexicographic order")
            return rec
        if tag == b"E":
            self.expect(b"E(")
            kind = self.text_field()
            self.expect(b",")
            msg = self.text_field()
            self.expect(b")")
            return ErrorOutput(kind, msg)
        self.fail(f"unknown tag {tag!r}")


def parse(data: Union[bytes, str]) -> Value:
    """Parse one canonical rendering back into a Value."""
    if isinstance(data, str):
        data = data.encode("utf-8")
    p = _Parser(data)
    v = p.value()
    if p.pos != len(data):
        p.fail("trailing data")
    return v


def parse_many(data: Union[bytes, str]) -> list:
    """Parse a comma-separated list of canonical renderings (a wire input line)."""
    if isinstance(data, str):
        data = data.encode("utf-8")
    if not data:
        return []
    p = _Parser(data)
    out = [p.value()]
    while p.pos < len(data):
        p.expect(b",")
        out.append(p.value())
    return out
