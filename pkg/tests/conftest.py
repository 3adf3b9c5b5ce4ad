import pytest

from tanlap import _backend

CRITERIA = {
    1: "projection algebra on 1000 random matrices",
    2: "operator split and infinity-Laplacian decomposition identities",
    3: "tangential residuals of the solution gallery, paraboloid control",
    4: "infinity-harmonicity, analytic and finite-difference order",
    5: "coefficient field defects and branch checks",
    6: "rank-one rigidity of example2",
    7: "separated-form rigidity of embed3(k_family), span control",
    8: "minimality under normal perturbations",
    9: "separated identities: quadrature order and sign invariants",
    10: "CLI determinism across parallelism",
}

_outcomes = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number n")


@pytest.fixture(params=_backend.available())
def backend(request):
    """Run the test once per available kernel backend."""
    previous = _backend.current()
    _backend.use(request.param)
    yield request.param
    _backend.use(previous)


def pytest_runtest_makereport(item, call):
    marker = item.get_closest_marker("criterion")
    if marker is None or call.when != "call":
        return
    n = marker.args[0]
    expected_fail = item.get_closest_marker("xfail")
    if call.excinfo is None:
        # a strict xfail that passes is reported as a failure by pytest too
        outcome = "fail" if expected_fail else "pass"
    elif expected_fail:
        outcome = "known-fail"
    else:
        outcome = "fail"
    _outcomes.setdefault(n, []).append((item.name, outcome))


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n, label in CRITERIA.items():
        runs = _outcomes.get(n)
        if not runs:
            continue
        bad = [name for name, o in runs if o != "pass"]
        known = [name for name, o in runs if o == "known-fail"]
        status = "PASS" if not bad else "FAIL"
        note = ""
        if bad:
            note = f"  [failing: {', '.join(bad)}]"
        if known:
            note += " (known, unattainable as stated)"
        tr.write_line(f"criterion {n:2d}: {status}  {label}{note}")
