"""One test per acceptance criterion, each printing a PASS/FAIL line and its checks.

Run with ``pytest -s tests/test_acceptance.py`` to see the report lines.
"""

import pytest

from boxwing_doe.validation import CRITERIA, Context, run_criterion


@pytest.fixture(scope="module")
def ctx():
    return Context()


@pytest.mark.parametrize("criterion", CRITERIA, ids=lambda c: f"{c.number}-{c.key}")
def test_criterion(criterion, ctx):
    result = run_criterion(criterion, ctx)
    print(f"\n{'PASS' if result.passed else 'FAIL'} criterion {criterion.number}: {criterion.title}")
    for chk in result.checks:
        print(chk.line())
    failed = [c.name for c in result.checks if not c.passed and not c.informative]
    assert result.passed, f"criterion {criterion.number} failed checks: {failed}"
