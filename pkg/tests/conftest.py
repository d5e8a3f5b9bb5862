"""Session-scoped artifacts shared between the unit tests and the acceptance gate."""

import contextlib
import io
import time

import pytest

from polarjiou.cli import main
from polarjiou.fitting import deviation_sweep


@pytest.fixture(scope="session")
def sweep_records():
    """The full default deviation sweep plus its wall-clock runtime in seconds."""
    t0 = time.perf_counter()
    records = deviation_sweep()
    return records, time.perf_counter() - t0


@pytest.fixture(scope="session")
def cli_sweep(tmp_path_factory):
    """One full CLI sweep run; returns (csv path, exit code, stdout text)."""
    out = tmp_path_factory.mktemp("cli_sweep") / "sweep.csv"
    buf = io.StringIO()
    with contextlib.redirect_stdout(buf):
        code = main(["sweep", "--out", str(out)])
    return out, code, buf.getvalue()


def run_cli(argv):
    """Invoke the CLI in-process, capturing stdout and stderr."""
    out, err = io.StringIO(), io.StringIO()
    with contextlib.redirect_stdout(out), contextlib.redirect_stderr(err):
        code = main(argv)
    return code, out.getvalue(), err.getvalue()
