"""Runs every numbered acceptance criterion at its stated tolerance."""

import pytest

from sublinlaw.acceptance import CRITERIA, _Context, run_criteria

_CTX = _Context()  # the steering run is shared by criteria 5, 6 and 10


@pytest.mark.parametrize("number", sorted(CRITERIA))
def test_criterion(number, acceptance_log):
    (result,) = run_criteria([number], _CTX)
    acceptance_log(result.line())
    assert result.passed, result.line()
