"""The named check suites all pass at a fixed seed."""
import pytest

from subquad.checks import SUITES, run_suite


@pytest.mark.parametrize("suite", SUITES)
def test_suite_passes(suite):
    results = run_suite(suite, seed=3)
    for res in results:
        assert res.passed, res.line()


def test_unknown_suite_rejected():
    with pytest.raises(ValueError):
        run_suite("everything")


def test_ntk_suite_guards_closed_form():
    with pytest.raises(ValueError):
        run_suite("ntk", b=0.5, lambda_mode="ntk_closed_form")


def test_ntk_suite_runs_shifted_mc():
    results = run_suite("ntk", seed=2, b=0.5, lambda_mode="gram_init")
    names = [r.name for r in results]
    assert "ntk_mc_diag_normalization" in names
    for res in results:
        assert res.passed, res.line()


def test_suite_statistics_reproducible():
    first = run_suite("sketch", seed=9)
    second = run_suite("sketch", seed=9)
    assert [r.line() for r in first] == [r.line() for r in second]
