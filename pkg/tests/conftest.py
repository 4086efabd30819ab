import importlib.resources

import numpy as np
import pytest


def scenario_path(name):
    """Path of a bundled scenario config."""
    return str(importlib.resources.files("sigmaod").joinpath("data").joinpath("scenarios")
               .joinpath(name + ".cfg"))


def random_spd(rng, n, cond=1e3):
    Q, _ = np.linalg.qr(rng.normal(size=(n, n)))
    ev = np.exp(rng.uniform(0, np.log(cond), size=n))
    return (Q * ev) @ Q.T


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# ----------------------------------------------------------------------------
# acceptance report: one line per criterion at the end of the run

_ACCEPTANCE = {}


@pytest.fixture
def acceptance(request):
    """Record the measured figures of an acceptance test: ``acceptance(text)``."""
    notes = []
    request.node.user_properties.append(("acceptance", notes))
    return notes.append


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    num = marker.args[0]
    notes = [n for k, v in item.user_properties if k == "acceptance" for n in v]
    if rep.when == "setup" and rep.failed:
        _ACCEPTANCE[num] = ("FAIL", "setup error")
    elif rep.when == "call":
        _ACCEPTANCE[num] = ("PASS" if rep.passed else "FAIL", "; ".join(notes))


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number")


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_ACCEPTANCE):
        status, detail = _ACCEPTANCE[num]
        terminalreporter.write_line(f"criterion {num:>2}: {status}  {detail}")
