import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from progderiv.values import (
    Bytes,
    CanonicalFormatError,
    ErrorOutput,
    Integer,
    Real,
    Record,
    Sequence,
    Text,
    as_value,
    canonicalize,
    numeric_coords,
    parse,
    parse_many,
    render,
    values_equal,
)

finite = st.floats(allow_nan=False, allow_infinity=False)
texts = st.text(max_size=12)

scalars = st.one_of(
    finite.map(Real),
    st.integers(-10**30, 10**30).map(Integer),
    texts.map(Text),
    st.binary(max_size=12).map(Bytes),
    st.tuples(texts, texts).map(lambda t: ErrorOutput(*t)),
)
values = st.recursive(
    scalars,
    lambda inner: st.one_of(
        st.lists(inner, max_size=4).map(Sequence),
        st.dictionaries(texts, inner, max_size=4).map(Record),
    ),
    max_leaves=10,
)


def test_real_rendering():
    assert render(Real(5.0)) == "R:5.0"
    assert render(Real(-0.1)) == "R:-0.1"
    assert render(Integer(5)) == "I:5"


def test_canonical_examples():
    assert canonicalize(Real(5.0)) == canonicalize(Real(5.0))
    assert canonicalize(ErrorOutput("InvalidInput", "negative")) != canonicalize(Real(5.0))
    one, two = Integer(1), Integer(2)
    assert canonicalize(Record({"a": one, "b": two})) == canonicalize(Record({"b": two, "a": one}))


def test_values_equal_examples():
    assert values_equal(Real(1.0), Real(1.0))
    assert not values_equal(Real(1.0), Integer(1))
    assert values_equal(ErrorOutput("E", "x"), ErrorOutput("E", "x"))


def test_error_output_includes_kind_and_message():
    a = ErrorOutput("InvalidInput", "x must be non-negative")
    assert b"InvalidInput" in a.canonical and b"x must be non-negative" in a.canonical
    assert a != ErrorOutput("InvalidInput", "y must be non-negative")
    assert a != ErrorOutput("InvalidOutput", "x must be non-negative")


@pytest.mark.parametrize("bad", [math.nan, math.inf, -math.inf])
def test_real_rejects_non_finite(bad):
    with pytest.raises(ValueError):
        Real(bad)


def test_real_rejects_bool():
    with pytest.raises(TypeError):
        Real(True)


def test_record_names_unique_and_sorted():
    r = Record({"b": Real(1.0), "a": Text("x")})
    assert render(r).index("a=") < render(r).index("b=")
    with pytest.raises(ValueError):
        Record([("a", Real(1.0)), ("a", Real(2.0))])


def test_values_are_immutable():
    v = Real(1.5)
    with pytest.raises(AttributeError):
        v.value = 2.0


def test_delimiters_in_text_do_not_collide():
    # length prefixes keep embedded delimiters unambiguous
    a = Sequence([Text("a,b")])
    b = Sequence([Text("a"), Text("b")])
    assert a.canonical != b.canonical
    assert parse(render(a)) == a
    assert parse(render(b)) == b


@given(values)
@settings(max_examples=300, deadline=None)
def test_canonicalize_deterministic_and_round_trips(v):
    assert canonicalize(v) == canonicalize(v)
    assert parse(canonicalize(v)) == v
    assert canonicalize(parse(canonicalize(v))) == canonicalize(v)


@given(values, values)
@settings(max_examples=300, deadline=None)
def test_values_equal_iff_bytes_equal(a, b):
    assert values_equal(a, b) == (canonicalize(a) == canonicalize(b))
    assert values_equal(a, b) == values_equal(b, a)


def test_injective_on_10k_generated_values():
    # distinct structures must give distinct bytes: compare against a structural key
    rng = np.random.default_rng(5)

    def gen(depth=0):
        k = rng.integers(0, 7 if depth < 2 else 5)
        if k == 0:
            x = float(rng.choice([rng.normal(), rng.integers(-3, 3), rng.normal() * 1e12]))
            return Real(x), ("R", x)
        if k == 1:
            n = int(rng.integers(-50, 50))
            return Integer(n), ("I", n)
        if k == 2:
            s = "".join(rng.choice(list("ab,:[]{}=()xé"), size=rng.integers(0, 4)))
            return Text(s), ("T", s)
        if k == 3:
            b = rng.bytes(int(rng.integers(0, 3)))
            return Bytes(b), ("X", b)
        if k == 4:
            kind, msg = ("E", "F")[rng.integers(0, 2)], ("", "m", "m,n")[rng.integers(0, 3)]
            return ErrorOutput(kind, msg), ("E", kind, msg)
        if k == 5:
            items = [gen(depth + 1) for _ in range(rng.integers(0, 3))]
            return Sequence([v for v, _ in items]), ("S", tuple(key for _, key in items))
        names = sorted(set(rng.choice(list("abc"), size=rng.integers(0, 3))))
        items = {n: gen(depth + 1) for n in names}
        return Record({n: v for n, (v, _) in items.items()}), ("M", tuple((n, key) for n, (_, key) in items.items()))

    seen = {}
    for _ in range(10_000):
        v, key = gen()
        b = canonicalize(v)
        if b in seen:
            assert seen[b] == key
        seen[b] = key
    keys = {}
    for b, key in seen.items():
        assert keys.setdefault(key, b) == b


def test_equivalence_relation_on_samples():
    vs = [Real(1.0), Real(1.0), Integer(1), Text("1"), Sequence([Real(1.0)]), Sequence([Real(1.0)])]
    for a in vs:
        assert values_equal(a, a)
        for b in vs:
            assert values_equal(a, b) == values_equal(b, a)
            for c in vs:
                if values_equal(a, b) and values_equal(b, c):
                    assert values_equal(a, c)


@pytest.mark.parametrize("text", ["R:5", "R:05.0", "I:+1", "I:01", "T3:ab", "M{T1:b=I:1,T1:a=I:2}",
                                  "S[I:1", "R:nan", "R:1e400", "Q:1", "S[I:1]x"])
def test_parse_rejects_non_canonical(text):
    with pytest.raises(CanonicalFormatError):
        parse(text)


def test_parse_many_wire_line():
    assert parse_many("R:2.9,R:3.1") == [Real(2.9), Real(3.1)]
    assert parse_many("") == []


def test_as_value_and_numeric_coords():
    assert as_value(2.5) == Real(2.5)
    assert as_value([1, "a"]) == Sequence([Integer(1), Text("a")])
    assert numeric_coords(Sequence([Real(1.0), Integer(2)])) == (1.0, 2.0)
    with pytest.raises(TypeError):
        numeric_coords(Text("x"))


def test_negative_zero_is_zero():
    assert Real(-0.0) == Real(0.0)
    assert render(Real(-0.0)) == "R:0.0"
    with pytest.raises(CanonicalFormatError):
        parse("R:-0.0")
