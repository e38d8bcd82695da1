"""Acceptance criteria 1-11; one PASS/FAIL line each in the terminal summary."""
import pytest

from wclimit.selftest import CRITERIA, run_criterion


@pytest.mark.parametrize("number", sorted(CRITERIA))
def test_criterion(number, acceptance_log):
    r = run_criterion(number)
    line = r.line()
    acceptance_log.append(line)
    print(line)
    assert r.passed, r.error or r.measured


def test_ito_fault_only_breaks_criterion_8():
    faults = {"ito_constant": 1.5}
    assert not run_criterion(8, faults).passed
    for k in (2, 6, 7):
        assert run_criterion(k, faults).passed
