import shutil
import subprocess
import sys
import textwrap
from pathlib import Path

import pytest

DATA = Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def sum1_executable(tmp_path_factory):
    """Program one compiled as a standalone executable; skipped without a C compiler."""
    cc = shutil.which("cc") or shutil.which("gcc")
    if cc is None:
        pytest.skip("no C compiler available")
    out = tmp_path_factory.mktemp("bin") / "sum1"
    subprocess.run([cc, "-O2", "-o", str(out), str(DATA / "sum1.c"), "-lm"], check=True)
    return out


@pytest.fixture
def pyscript(tmp_path):
    """Write a small Python program and return the command that runs it."""
    def make(name, body):
        path = tmp_path / f"{name}.py"
        path.write_text(textwrap.dedent(body))
        return [sys.executable, str(path)]
    return make
