from pathlib import Path

import pytest

from relign.corerel import embed
from relign.egraph import EGraph, Limits, saturate
from relign.harness import parse_spec, random_states, resolve_spec
from relign.imp import Side, parse_imp, rename, variables
from relign.rules import basic_blockify, corerel_rules
from relign.terms import to_term

BENCH = Path(__file__).resolve().parent.parent / "benchmarks"


def load(name):
    return (BENCH / name).read_text()


class Saturated:
    """A saturated graph for a benchmark pair plus its sampled states."""

    def __init__(self, left, right, spec, n_states=16, seed=0):
        self.p1, self.p2 = parse_imp(load(left)), parse_imp(load(right))
        q1, q2 = rename(self.p1, Side.LEFT), rename(self.p2, Side.RIGHT)
        self.spec = resolve_spec(parse_spec(load(spec)), variables(q1), variables(q2))
        self.states = random_states(self.spec, n_states, seed, variables(q1), variables(q2))
        self.g = EGraph()
        self.root = self.g.add(to_term(basic_blockify(embed(q1, q2))))
        self.report = saturate(self.g, list(corerel_rules()), Limits())


@pytest.fixture(scope="session")
def double():
    return Saturated("double1.imp", "double2.imp", "double.spec")


# -- acceptance summary --------------------------------------------------------

_criteria: dict = {}


def pytest_runtest_logreport(report):
    if report.when == "call" or report.outcome != "passed":
        marks = getattr(report, "criterion", None)
        if marks is None:
            return
        n, title = marks
        prev = _criteria.get(n, (title, "PASS"))
        ok = prev[1] == "PASS" and report.outcome == "passed"
        _criteria[n] = (title, "PASS" if ok else "FAIL")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    m = item.get_closest_marker("criterion")
    if m is not None:
        outcome.get_result().criterion = m.args


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_criteria):
        title, verdict = _criteria[n]
        terminalreporter.write_line(f"criterion {n}: {verdict}  {title}")
