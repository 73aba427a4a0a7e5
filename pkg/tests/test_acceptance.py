"""The fourteen acceptance criteria at their stated tolerances.

The suite runs once per session; each criterion then gets its own test and
one pass/fail line in the terminal summary.  Run this file directly with
``python tests/test_acceptance.py`` to print the lines without pytest.
"""

import pytest

from mgtlab.acceptance import CRITERIA, REPORT_HEADER, all_passed, report_csv, run_criteria

try:
    from conftest import ACCEPTANCE_LINES
except ImportError:  # running as a script
    ACCEPTANCE_LINES = []

KNOWN_RED = {
    4: (
        "fitted slope 1.2096 sits above the [0.8, 1.2] band: well-prepared data "
        "removes the initial layer, so smooth low modes converge faster than O(tau)"
    ),
}


@pytest.fixture(scope="module")
def results():
    res = {r.id: r for r in run_criteria()}
    for i in sorted(res):
        ACCEPTANCE_LINES.append(res[i].line())
    return res


def _criterion(i):
    marks = []
    if i in KNOWN_RED:
        marks.append(pytest.mark.xfail(strict=True, reason=KNOWN_RED[i]))
    return pytest.param(i, marks=marks, id=f"criterion-{i:02d}")


class TestCriteria:
    @pytest.mark.parametrize("cid", [_criterion(i) for i in sorted(CRITERIA)])
    def test_criterion(self, results, cid):
        r = results[cid]
        print(r.line())
        assert r.passed, r.line()

    def test_all_reported_in_order(self, results):
        assert sorted(results) == list(range(1, 15))
        text = report_csv([results[i] for i in sorted(results)])
        lines = text.splitlines()
        assert lines[0] == ",".join(REPORT_HEADER)
        assert [int(l.split(",")[0]) for l in lines[1:]] == list(range(1, 15))

    def test_suite_verdict(self, results):
        """Only the known-red criterion keeps the suite from passing."""
        failing = [i for i, r in results.items() if not r.passed]
        assert failing == sorted(KNOWN_RED)
        assert not all_passed(list(results.values()))


class TestKnownRed:
    def test_rate_frozen(self, results):
        """The measured slope is pinned so any drift in criterion 4 is noticed."""
        r = results[4]
        assert r.measured == pytest.approx(1.2095688091998855, rel=1e-9)
        assert r.status == "fail"


class TestFaultInjection:
    def test_perturbed_energy_fails(self):
        (r,) = run_criteria([1], perturb_energy=1e-3)
        assert not r.passed and r.measured > 1e-6

    def test_unperturbed_passes(self):
        (r,) = run_criteria([1])
        assert r.passed


if __name__ == "__main__":
    for res in run_criteria():
        print(res.line())
