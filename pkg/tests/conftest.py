import sys
from pathlib import Path

import numpy as np
import pytest

from kpfl import Instance, load_instance
from kpfl.metrics import InequalityParams

DATA = Path(__file__).parent / "data"
HELPERS = Path(__file__).parent / "helpers"

TINY_D = np.array([[100, 50, 0],
                   [100, 75, 0],
                   [100, 125, 200],
                   [100, 150, 200]], dtype=float)


def tiny_instance(**kw):
    return Instance.from_arrays([1, 1, 1, 1], TINY_D, origin_ids=["r1", "r2", "r3", "r4"],
                                site_ids=["s1", "s2", "s3"], **kw)


def highs_command(extra=""):
    return f"{sys.executable} {HELPERS / 'highs_solver.py'} {{model}} {{solution}} --mip-gap {{mip_gap}} {extra}"


def scripted_command(prepared, code=0):
    return f"{sys.executable} {HELPERS / 'scripted_solver.py'} {{model}} {{solution}} {prepared} {code}"


@pytest.fixture
def tiny():
    return tiny_instance()


@pytest.fixture
def tiny_files():
    d = DATA / "tiny"
    return d / "origins.csv", d / "sites.csv", d / "distances.csv"


@pytest.fixture
def kp005():
    # alpha 0.005 with epsilon -1 gives kappa -0.005
    return InequalityParams(-1.0, 0.005, -0.005)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(mod.RESULTS):
        status = "PASS" if mod.RESULTS[n] else "FAIL"
        checks = mod.SUBCHECKS[n]
        failed = [s[5:] for s in checks if s.startswith("FAIL")]
        if len(checks) > 1:
            detail = f"{len(checks) - len(failed)}/{len(checks)} cells" + (
                "; failing: " + "; ".join(failed) if failed else "")
        else:
            detail = checks[0][5:]
        terminalreporter.write_line(f"criterion {n:2d}: {status}  {detail}")
