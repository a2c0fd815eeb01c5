"""Acceptance criteria 1 to 9, each at its stated tolerance and time budget.

Every criterion prints one ``PASS`` or ``FAIL`` line (visible with ``pytest -s``
or in the captured output of a failing run).
"""
import json
import time

import pytest

from andreev_billiards import suites

SEED = 0


def _criterion_1():
    return suites.jacobian_suite(suites.unit_square_table(), n=100, seed=SEED, tol=1e-5)


def _criterion_2():
    return suites.measure_suite(suites.unit_square_table(), regions=10, n=100_000, seed=SEED,
                                tol=1e-2)


def _criterion_3():
    return suites.volume_sign_suite(suites.unit_square_table(), n_each=50, seed=SEED, tol=1e-5)


def _criterion_4():
    records = []
    ok = True
    for table in (suites.unit_square_table(), suites.right_triangle_table()):
        recs, passed = suites.closed_flow_suite(table, n=100, seed=SEED, tol=1e-9, min_closed=99)
        records += recs
        ok = ok and passed
    recs, passed = suites.exact_square_closed_flow()
    return records + recs, ok and passed


def _criterion_5():
    return suites.parity_suite(suites.unit_square_table(), n_orbits=1000, max_events=1000,
                               seed=SEED)


def _criterion_6():
    return suites.two_copy_suite(suites.unit_square_table(), n=1000, seed=SEED, tol=1e-10)


def _criterion_7():
    return suites.notch_suite(n=1000)


def _criterion_8():
    return suites.tfractal_suite(levels=(1, 2), ps=(3, 5), x0s=("1/3", "1/5", "2/3"),
                                 dyadic="1/4")


CRITERIA = {
    1: ("jacobian oracle", _criterion_1, 5.0),
    2: ("measure invariance", _criterion_2, 30.0),
    3: ("volume sign", _criterion_3, 10.0),
    4: ("closed flow", _criterion_4, 60.0),
    5: ("parity bookkeeping", _criterion_5, 10.0),
    6: ("two-copy equivalence", _criterion_6, 10.0),
    7: ("notch dichotomy", _criterion_7, 30.0),
    8: ("t-fractal periodicity", _criterion_8, 60.0),
}

_reports: dict[int, str] = {}


def _report(records) -> str:
    return json.dumps(records, sort_keys=True)


@pytest.mark.parametrize("number", sorted(CRITERIA))
def test_criterion(number):
    name, run, budget = CRITERIA[number]
    start = time.perf_counter()
    records, passed = run()
    elapsed = time.perf_counter() - start
    _reports[number] = _report(records)
    ok = passed and elapsed < budget
    failing = [r for r in records if not r.get("pass", True)]
    print(f"{'PASS' if ok else 'FAIL'} criterion {number} ({name}): "
          f"{len(records)} records, {len(failing)} failing, {elapsed:.2f} s of {budget:.0f} s")
    assert passed, failing[:3]
    assert elapsed < budget


def test_criterion_9_determinism():
    mismatched = []
    for number, (_, run, _) in sorted(CRITERIA.items()):
        first = _reports.get(number)
        if first is None:
            first = _report(run()[0])
        if _report(run()[0]) != first:
            mismatched.append(number)
    print(f"{'PASS' if not mismatched else 'FAIL'} criterion 9 (determinism): "
          f"criteria rerun {sorted(CRITERIA)}, mismatched {mismatched}")
    assert not mismatched
