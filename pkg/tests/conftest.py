import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from feam.cipher import MasterKey  # noqa: E402
from feam.gf2linalg import random_invertible  # noqa: E402
from feam.oracle import Oracle, OracleConfig, OracleMode  # noqa: E402
from feam.prng import DetPrng  # noqa: E402


@pytest.fixture
def prng():
    return DetPrng(20240517)


def make_oracle(n, mode=OracleMode.INSECURE, master_seed=99, **kw):
    master = MasterKey.from_matrix(random_invertible(DetPrng(master_seed), n))
    return Oracle(OracleConfig(n, mode, master), **kw)


@pytest.fixture
def oracle_factory():
    return make_oracle


_CRITERIA = pytest.StashKey[list]()


@pytest.fixture
def criterion(request):
    """Record one PASS/FAIL line per acceptance criterion for the terminal summary."""
    lines = request.config.stash.setdefault(_CRITERIA, [])

    def record(name: str, ok: bool, detail: str = "") -> bool:
        lines.append(f"{'PASS' if ok else 'FAIL'}  {name}" + (f"  ({detail})" if detail else ""))
        return ok

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_CRITERIA, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
