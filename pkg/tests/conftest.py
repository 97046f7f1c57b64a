import os
from pathlib import Path

import numpy as np
import pytest

from psychkit import reference, simulate

# criterion id -> (status, detail); filled by the ``acceptance`` fixture
ACCEPTANCE: dict[str, tuple[str, str]] = {}

DATA_ENV = "PSYCHKIT_CCTT_CSV"
EXTENDED_ENV = "PSYCHKIT_CCTT_EXTENDED_CSV"


class _Recorder:
    def __init__(self, cid):
        self.cid = cid

    def passed(self, detail=""):
        ACCEPTANCE[self.cid] = ("PASS", detail)

    def failed(self, detail):
        ACCEPTANCE[self.cid] = ("FAIL", detail)
        pytest.fail(f"{self.cid}: {detail}", pytrace=False)

    def blocked(self, detail):
        ACCEPTANCE[self.cid] = ("BLOCKED", detail)
        pytest.skip(f"BLOCKED {self.cid}: {detail}")

    def check(self, ok: bool, detail: str):
        if ok:
            self.passed(detail)
        else:
            self.failed(detail)


@pytest.fixture
def acceptance(request):
    marker = request.node.get_closest_marker("acceptance")
    cid = marker.args[0] if marker and marker.args else request.node.name
    rec = _Recorder(cid)
    yield rec
    if cid not in ACCEPTANCE:
        rep = getattr(request.node, "rep_call", None)
        if rep is not None and rep.failed:
            ACCEPTANCE[cid] = ("FAIL", str(rep.longrepr).splitlines()[-1][:160])


@pytest.hookimpl(hookwrapper=True, tryfirst=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if rep.when == "call":
        item.rep_call = rep


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for cid in sorted(ACCEPTANCE, key=lambda c: (int(c[1:].split(".")[0]), c)):
        status, detail = ACCEPTANCE[cid]
        tr.write_line(f"{status:<8} {cid:<6} {detail}")


def data_path(env=DATA_ENV) -> Path | None:
    p = os.environ.get(env)
    return Path(p) if p and Path(p).exists() else None


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def grade3_bank():
    return reference.item_bank(3)


@pytest.fixture(scope="session")
def small_2pl_data():
    """1500 students on 12 items with known parameters."""
    r = np.random.default_rng(7)
    a = np.linspace(0.7, 2.0, 12)
    b = np.linspace(-2.0, 2.0, 12)
    x, theta = simulate.simulate_2pl(a, b, 1500, r)
    return simulate.as_matrix(x), a, b, theta


@pytest.fixture(scope="session")
def cohort_csv(tmp_path_factory):
    """Synthetic four-grade cohort on disk plus a matching config file."""
    from psychkit.dataset import save_csv

    d = tmp_path_factory.mktemp("cohort")
    save_csv(simulate.published_cohort(rng=5), d / "cohort.csv")
    (d / "analysis.cfg").write_text("excluded_items=Q2\ndif_pairs=3,4|5,6\n")
    return d / "cohort.csv", d / "analysis.cfg"
