import numpy as np
import pytest

from progderiv.sut import (
    Domain,
    InProcessSut,
    SubprocessSpec,
    SubprocessSut,
    SutInvocationError,
    builtin,
    constrained_sum_one,
    constrained_sum_two,
    decode_output,
    encode_inputs,
    run_subprocess,
)
from progderiv.values import ErrorOutput, Real, Sequence, Text


def kind(v):
    return v.kind if isinstance(v, ErrorOutput) else None


def test_program_one_examples():
    assert constrained_sum_one(2.0, 3.0) == Real(5.0)
    assert kind(constrained_sum_one(-1.0, 2.0)) == "InvalidInput"
    assert kind(constrained_sum_one(3.0, 3.0)) == "InvalidOutput"
    assert constrained_sum_one(1.23, 1.0) == Real(2.2)


def test_program_two_examples():
    assert constrained_sum_two(3.0, 3.5) == Real(6.5)
    assert kind(constrained_sum_one(3.0, 3.5)) == "InvalidOutput"
    assert kind(constrained_sum_two(3.5, 3.5)) == "InvalidOutput"
    assert kind(constrained_sum_two(-0.5, 1.0)) == "InvalidInput"


def test_check_order():
    # input checks before the output check, negative before >= 6
    assert constrained_sum_one(-1.0, 7.0) == ErrorOutput("InvalidInput", "x must be non-negative")
    assert constrained_sum_one(7.0, -1.0) == ErrorOutput("InvalidInput", "y must be non-negative")
    assert constrained_sum_one(6.0, 7.0) == ErrorOutput("InvalidInput", "x must be less than 6")
    assert constrained_sum_one(5.0, 6.0) == ErrorOutput("InvalidInput", "y must be less than 6")


def test_rounding_is_half_up_on_raw_sum():
    assert constrained_sum_one(0.25, 0.0) == Real(0.3)
    assert constrained_sum_one(5.96, 0.0) == Real(6.0)  # raw sum below 6 is valid, rendered 6.0
    assert constrained_sum_one(1.04, 0.0) == Real(1.0)


def test_programs_agree_where_both_valid():
    rng = np.random.default_rng(0)
    for x, y in rng.uniform(-2, 8, size=(10_000, 2)):
        a, b = constrained_sum_one(x, y), constrained_sum_two(x, y)
        if isinstance(a, Real) and isinstance(b, Real):
            assert a.canonical == b.canonical
        elif a != b:
            assert isinstance(a, ErrorOutput) != isinstance(b, ErrorOutput)


def test_disagreement_region_is_the_band():
    for x in np.arange(-2.0, 8.0, 0.05):
        for y in np.arange(-2.0, 8.0, 0.05):
            x, y = round(float(x), 2), round(float(y), 2)
            band = 0 <= x < 6 and 0 <= y < 6 and 6 <= x + y < 7
            assert (constrained_sum_one(x, y) != constrained_sum_two(x, y)) == band


def test_in_process_errors_become_values():
    prog = InProcessSut("div", lambda x: 1 / x, 1)
    assert prog(Real(0.0)) == ErrorOutput("ZeroDivisionError", "float division by zero")
    assert prog(Real(2.0)) == Real(0.5)


def test_adapter_arity_and_domains():
    s = builtin("sum1")
    assert s.arity == 2 and s.numeric_bounds() == ([-2.0, -2.0], [8.0, 8.0])
    with pytest.raises(ValueError):
        s(Real(1.0))
    with pytest.raises(ValueError):
        InProcessSut("x", abs, 1).numeric_bounds()
    with pytest.raises(KeyError):
        builtin("nope")
    assert s.self_check([Sequence([Real(1.0), Real(2.0)])]) and s.deterministic


def test_wire_encoding():
    assert encode_inputs((Real(2.9), Real(-1.0))) == b"R:2.9,R:-1.0\n"


@pytest.mark.parametrize("code,out,err,expected", [
    (0, b"5\n", b"", Real(5.0)),
    (0, b"R:5.0\n", b"", Real(5.0)),
    (0, b"hello\n", b"", Text("hello")),
    (0, b"E(T1:E,T1:m)\n", b"", ErrorOutput("E", "m")),
    (1, b"", b"bad\n", ErrorOutput("Exit:1", "bad")),
    (0, b"5\n", b"warn\n", ErrorOutput("Exit:0", "warn")),
    (0, b"nan\n", b"", Text("nan")),
])
def test_decode_rules(code, out, err, expected):
    assert decode_output(code, out, err) == expected


def test_echo_program(pyscript):
    cmd = pyscript("echo", "import sys; sys.stdout.write(sys.stdin.readline())")
    spec = SubprocessSpec(cmd[0], tuple(cmd[1:]))
    assert run_subprocess(spec, (Real(5.0),)) == Real(5.0)
    assert run_subprocess(spec, (Text("a,b"),)) == Text("a,b")


def test_echo_from_argument(pyscript):
    cmd = pyscript("argecho", "import sys; print(sys.argv[1].split(':')[1])")
    spec = SubprocessSpec(cmd[0], (cmd[1], "{line}"))
    assert run_subprocess(spec, (Real(5.0),)) == Real(5.0)


def test_exit_code_and_stderr(pyscript):
    cmd = pyscript("fail", "import sys; sys.stderr.write('bad'); sys.exit(1)")
    assert run_subprocess(SubprocessSpec(cmd[0], tuple(cmd[1:])), (Real(1.0),)) == ErrorOutput("Exit:1", "bad")


def test_timeout(pyscript):
    cmd = pyscript("sleep", "import time; time.sleep(10)")
    v = run_subprocess(SubprocessSpec(cmd[0], tuple(cmd[1:]), timeout_ms=300), (Real(1.0),))
    assert v == ErrorOutput("Timeout", "no result within 300 ms")


def test_large_output_does_not_deadlock(pyscript):
    cmd = pyscript("big", "import sys; sys.stdin.read(); sys.stdout.write('x' * 1_000_000)")
    v = run_subprocess(SubprocessSpec(cmd[0], tuple(cmd[1:])), (Text("y" * 200_000),))
    assert v == Text("x" * 1_000_000)


def test_spawn_failure_raises():
    with pytest.raises(SutInvocationError):
        run_subprocess(SubprocessSpec("/nonexistent/program"), (Real(1.0),))


def test_spec_validation():
    with pytest.raises(ValueError):
        SubprocessSpec("x", timeout_ms=0)
    with pytest.raises(ValueError):
        SubprocessSpec.from_command("")
    assert SubprocessSpec.from_command("prog -a 'b c'").args == ("-a", "b c")


def test_compiled_program_one_matches(sum1_executable):
    ext = SubprocessSut(SubprocessSpec(str(sum1_executable)), 2, (Domain("numeric", -2, 8),) * 2)
    ref = builtin("sum1")
    rng = np.random.default_rng(8)
    points = list(rng.uniform(-2, 8, size=(300, 2))) + [(3.0, 3.0), (0.0, 0.0), (5.95, 0.0), (6.0, -1.0)]
    for x, y in points:
        p = Sequence([Real(float(x)), Real(float(y))])
        assert ext(p).canonical == ref(p).canonical
    assert ext.describe()["command"] == [str(sum1_executable)]
