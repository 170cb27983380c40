import pytest
from hypothesis import settings

from netslice.config import ScenarioConfig, db_to_linear
from netslice.core import McPlan

# numba compiles on first call, which would trip per-example deadlines
settings.register_profile("netslice", deadline=None)
settings.load_profile("netslice")


def urllc_cfg(gamma_u_db=20.0, gamma_b_db=10.0, **kw):
    base = dict(gamma_b=db_to_linear(gamma_b_db), gamma_u=db_to_linear(gamma_u_db),
                gamma_m=db_to_linear(5.0), eps_b=1e-3, eps_u=1e-5, eps_m=0.1, f=10, s=5,
                a_u=0.1, r_m=0.04)
    base.update(kw)
    return ScenarioConfig(**base)


def mmtc_cfg(gamma_b_db=25.0, eps_b=1e-3, **kw):
    base = dict(gamma_b=db_to_linear(gamma_b_db), gamma_u=10.0, gamma_m=db_to_linear(5.0),
                eps_b=eps_b, eps_u=1e-5, eps_m=0.1, f=1, s=5, a_u=0.1, r_m=0.04)
    base.update(kw)
    return ScenarioConfig(**base)


@pytest.fixture
def small_plan():
    return McPlan(20_000, master_seed=11, batch=4096)


# acceptance criteria: one PASS/FAIL line each at the end of the run
CRITERIA: dict[str, tuple[str, str]] = {}
DETAILS: dict[str, str] = {}


@pytest.fixture
def criterion(request):
    """Call with the criterion label first, then with detail text as results come in."""
    state = {}

    def note(label=None, detail=None):
        if label is not None:
            state["label"] = label
            request.node.user_properties.append(("criterion", label))
        if detail is not None:
            DETAILS[state["label"]] = detail

    return note


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    label = dict(item.user_properties).get("criterion")
    if label and (report.when == "call" or report.failed):
        CRITERIA[label] = ("PASS" if report.passed else "FAIL", item.nodeid)


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for label in sorted(CRITERIA, key=lambda s: int(s.split()[1].rstrip(":"))):
        status, _ = CRITERIA[label]
        detail = DETAILS.get(label, "")
        terminalreporter.write_line(f"{status} {label}{': ' + detail if detail else ''}")
