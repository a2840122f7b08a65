"""Programs under test, seen as black boxes from Value tuples to a Value.

Two kinds of adapter are provided: :class:`InProcessSut` wraps a Python
callable, :class:`SubprocessSut` runs an external executable once per call
using the line protocol described in ``docs/canonical-format.md``. Either
way, invocation is total: failures of the program become
:class:`~progderiv.values.ErrorOutput` values. Only harness-side problems
(the executable cannot be spawned) raise :class:`SutInvocationError`.
"""

from __future__ import annotations

import math
import os
import re
import selectors
import shlex
import subprocess
import threading
import time
from dataclasses import dataclass, field
from typing import Callable, Optional

from .values import (
    CanonicalFormatError,
    ErrorOutput,
    Real,
    Sequence,
    Text,
    Value,
    as_value,
    parse,
    render,
)


class SutInvocationError(RuntimeError):
    """The harness could not run the program at all (not a program error)."""


@dataclass(frozen=True)
class Domain:
    """Declared domain of one input slot."""

    kind: str = "numeric"  # numeric | text | opaque
    lo: float = -math.inf
    hi: float = math.inf

    def bounded(self) -> bool:
        return self.kind == "numeric" and math.isfinite(self.lo) and math.isfinite(self.hi)


class SutAdapter:
    """Base adapter. Subclasses implement :meth:`invoke`."""

    def __init__(self, name: str, arity: int, domains=None, parallel_safe: bool = True):
        if arity < 1:
            raise ValueError("arity must be >= 1")
        self.name = name
        self.arity = arity
        self.domains = tuple(domains) if domains is not None else (Domain(),) * arity
        if len(self.domains) != arity:
            raise ValueError("one domain per input slot is required")
        self.parallel_safe = parallel_safe
        self.deterministic: Optional[bool] = None

    def invoke(self, args: tuple) -> Value:
        raise NotImplementedError

    def __call__(self, x: Value) -> Value:
        """Run on one input Value; arity > 1 expects a Sequence of that length."""
        if self.arity == 1:
            return self.invoke((x,))
        if not isinstance(x, Sequence) or len(x) != self.arity:
            raise ValueError(f"{self.name} takes a Sequence of {self.arity} values, got {x!r}")
        return self.invoke(x.items)

    def numeric_bounds(self):
        """(lows, highs) of the declared numeric domains; raises if any slot is unbounded."""
        if not all(d.bounded() for d in self.domains):
            raise ValueError(f"{self.name} does not declare bounded numeric domains")
        return [d.lo for d in self.domains], [d.hi for d in self.domains]

    def self_check(self, probes) -> bool:
        """Run each probe twice; record and return whether outputs were byte-equal."""
        ok = all(self(p).canonical == self(p).canonical for p in probes)
        self.deterministic = ok
        return ok

    def describe(self) -> dict:
        return {
            "name": self.name,
            "arity": self.arity,
            "domains": [[d.kind, d.lo, d.hi] for d in self.domains],
            "parallel_safe": self.parallel_safe,
        }


class InProcessSut(SutAdapter):
    """Wraps a Python callable. With ``numeric=True`` arguments arrive as floats."""

    def __init__(self, name, func: Callable, arity: int, domains=None,
                 parallel_safe: bool = True, numeric: bool = True):
        super().__init__(name, arity, domains, parallel_safe)
        self.func = func
        self.numeric = numeric

    def invoke(self, args: tuple) -> Value:
        if len(args) != self.arity:
            raise ValueError(f"{self.name} takes {self.arity} arguments, got {len(args)}")
        try:
            if self.numeric:
                args = tuple(float(a.value) for a in args)
            return as_value(self.func(*args))
        except Exception as exc:  # the program failed; that is an output
            return ErrorOutput(type(exc).__name__, str(exc))


# --- the constrained-sum reference programs ---------------------------------

def _round_one_decimal(s: float) -> float:
    # round half up at the first decimal place
    return math.floor(s * 10.0 + 0.5) / 10.0


def _constrained_sum(x: float, y: float, limit: float) -> Value:
    if x < 0:
        return ErrorOutput("InvalidInput", "x must be non-negative")
    if y < 0:
        return ErrorOutput("InvalidInput", "y must be non-negative")
    if x >= 6:
        return ErrorOutput("InvalidInput", "x must be less than 6")
    if y >= 6:
        return ErrorOutput("InvalidInput", "y must be less than 6")
    s = x + y
    if s >= limit:
        # program two keeps program one's message; only its threshold is wrong
        return ErrorOutput("InvalidOutput", "sum must be less than 6")
    return Real(_round_one_decimal(s))


def constrained_sum_one(x: float, y: float) -> Value:
    """Sum of two non-negative inputs below 6, to one decimal; the sum must stay below 6."""
    return _constrained_sum(x, y, 6.0)


def constrained_sum_two(x: float, y: float) -> Value:
    """Faulty variant of :func:`constrained_sum_one` that only rejects sums of 7 or more."""
    return _constrained_sum(x, y, 7.0)


SCAN_DOMAIN = Domain("numeric", -2.0, 8.0)


def builtin(name: str) -> SutAdapter:
    """Look up a built-in program by name (``sum1``, ``sum2``, ``constant``, ``square``, ``linear:K``)."""
    if name == "sum1":
        return InProcessSut("sum1", constrained_sum_one, 2, (SCAN_DOMAIN, SCAN_DOMAIN))
    if name == "sum2":
        return InProcessSut("sum2", constrained_sum_two, 2, (SCAN_DOMAIN, SCAN_DOMAIN))
    if name == "constant":
        return InProcessSut("constant", lambda x, y: Real(0.0), 2, (SCAN_DOMAIN, SCAN_DOMAIN))
    if name == "square":
        return InProcessSut("square", lambda x: x * x, 1, (Domain("numeric", -10.0, 10.0),))
    if name.startswith("linear:"):
        k = float(name.split(":", 1)[1])
        return InProcessSut(name, lambda x: k * x, 1, (Domain("numeric", -10.0, 10.0),))
    raise KeyError(name)


BUILTIN_NAMES = ("sum1", "sum2", "constant", "square", "linear:K")


# --- subprocess adapter ------------------------------------------------------

@dataclass(frozen=True)
class SubprocessSpec:
    """How to run an external program under test.

    ``args`` is an argument template; the token ``{line}`` in any argument is
    replaced by the encoded input line (without its newline). The line is
    always also written to standard input.
    """

    executable: str
    args: tuple = ()
    timeout_ms: int = 5000
    max_concurrency: int = 4
    serial_only: bool = False
    env: Optional[dict] = field(default=None, hash=False)

    def __post_init__(self):
        if self.timeout_ms <= 0:
            raise ValueError("timeout_ms must be positive")
        if self.max_concurrency < 1:
            raise ValueError("max_concurrency must be >= 1")

    @classmethod
    def from_command(cls, command: str, **kw) -> "SubprocessSpec":
        parts = shlex.split(command)
        if not parts:
            raise ValueError("empty command")
        return cls(parts[0], tuple(parts[1:]), **kw)


def encode_inputs(inputs) -> bytes:
    """One line of comma-separated canonical renderings, newline-terminated."""
    return (",".join(render(v) for v in inputs) + "\n").encode("utf-8")


_NUMBER = re.compile(r"[+-]?(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?")


def decode_output(returncode: int, stdout: bytes, stderr: bytes) -> Value:
    """Map a finished child's exit status and streams to a Value."""
    err = stderr.decode("utf-8", "replace")
    if returncode != 0 or err:
        return ErrorOutput(f"Exit:{returncode}", err[:-1] if err.endswith("\n") else err)
    text = stdout.decode("utf-8", "replace")
    if text.endswith("\n"):
        text = text[:-1]
    try:
        return parse(text)
    except CanonicalFormatError:
        pass
    if _NUMBER.fullmatch(text):
        x = float(text)
        if math.isfinite(x):
            return Real(x)
    return Text(text)


def _communicate(proc, data: bytes, timeout: float):
    """Feed stdin, drain stdout/stderr and wait for exit, all under one deadline.

    Returns (stdout, stderr, timed_out). Exit is awaited through a pidfd where
    available so short-lived children are not subject to polling delays.
    """
    deadline = time.monotonic() + timeout
    chunks = {proc.stdout.fileno(): [], proc.stderr.fileno(): []}
    view = memoryview(data)
    with selectors.DefaultSelector() as sel:
        for fd in chunks:
            sel.register(fd, selectors.EVENT_READ)
        in_fd = proc.stdin.fileno()
        os.set_blocking(in_fd, False)
        sel.register(in_fd, selectors.EVENT_WRITE)
        while sel.get_map():
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                return b"", b"", True
            for key, _ in sel.select(remaining):
                fd = key.fd
                if fd == in_fd:
                    try:
                        n = os.write(fd, view)
                    except BlockingIOError:
                        continue
                    except BrokenPipeError:
                        n = len(view)
                    view = view[n:]
                    if not view:
                        sel.unregister(fd)
                        proc.stdin.close()
                else:
                    buf = os.read(fd, 65536)
                    if buf:
                        chunks[fd].append(buf)
                    else:
                        sel.unregister(fd)
    remaining = deadline - time.monotonic()
    if proc.poll() is None:
        if hasattr(os, "pidfd_open"):
            pidfd = os.pidfd_open(proc.pid)
            try:
                with selectors.DefaultSelector() as sel:
                    sel.register(pidfd, selectors.EVENT_READ)
                    if remaining <= 0 or not sel.select(remaining):
                        return b"", b"", True
            finally:
                os.close(pidfd)
            proc.wait()
        else:
            try:
                proc.wait(max(remaining, 0))
            except subprocess.TimeoutExpired:
                return b"", b"", True
    out = b"".join(chunks[proc.stdout.fileno()])
    err = b"".join(chunks[proc.stderr.fileno()])
    return out, err, False


def run_subprocess(spec: SubprocessSpec, inputs) -> Value:
    """Run the external program once on ``inputs`` (a tuple of Values)."""
    line = encode_inputs(inputs)
    text_line = line[:-1].decode("utf-8")
    argv = [spec.executable] + [a.replace("{line}", text_line) for a in spec.args]
    try:
        proc = subprocess.Popen(argv, stdin=subprocess.PIPE, stdout=subprocess.PIPE,
                                stderr=subprocess.PIPE, env=spec.env)
    except OSError as exc:
        raise SutInvocationError(f"cannot spawn {spec.executable!r}: {exc}") from exc
    try:
        out, err, timed_out = _communicate(proc, line, spec.timeout_ms / 1000.0)
        if timed_out:
            proc.kill()
            proc.wait()
            return ErrorOutput("Timeout", f"no result within {spec.timeout_ms} ms")
        return decode_output(proc.returncode, out, err)
    finally:
        for stream in (proc.stdin, proc.stdout, proc.stderr):
            if not stream.closed:
                stream.close()
        if proc.returncode is None:
            proc.kill()
            proc.wait()


class SubprocessSut(SutAdapter):
    """Adapter for an external executable, one process per call."""

    def __init__(self, spec: SubprocessSpec, arity: int, domains=None, name: Optional[str] = None):
        super().__init__(name or os.path.basename(spec.executable), arity, domains,
                         parallel_safe=not spec.serial_only)
        self.spec = spec
        self._slots = threading.BoundedSemaphore(spec.max_concurrency)

    def invoke(self, args: tuple) -> Value:
        if len(args) != self.arity:
            raise ValueError(f"{self.name} takes {self.arity} arguments, got {len(args)}")
        with self._slots:
            return run_subprocess(self.spec, args)

    def describe(self) -> dict:
        d = super().describe()
        d["command"] = [self.spec.executable, *self.spec.args]
        d["timeout_ms"] = self.spec.timeout_ms
        return d


__all__ = [
    "SutInvocationError",
    "Domain",
    "SutAdapter",
    "InProcessSut",
    "SubprocessSut",
    "SubprocessSpec",
    "constrained_sum_one",
    "constrained_sum_two",
    "builtin",
    "run_subprocess",
    "encode_inputs",
    "decode_output",
]
