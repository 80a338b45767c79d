"""Acceptance criteria, one pass/fail line each (run with -s to see them)."""

import pytest

from codedcache.verify import CRITERIA, run_check


@pytest.mark.parametrize("number", [n for n, _, _ in CRITERIA], ids=[name for _, name, _ in CRITERIA])
def test_criterion(number):
    result = run_check(number)
    print("\n" + result.line())
    assert result.ok, result.detail
    assert not result.skipped, result.detail
