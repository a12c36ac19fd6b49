import pytest

from src.models.queries import HotFractionQuery
from src.services.zipf_service import (
    EXACT_LIMIT, HEAD_TERMS, HarmonicEvaluator, _exact_sum, _tail, generalized_harmonic,
    hot_fraction, hot_fraction_table,
)


def test_hot_fraction_shrinks_as_the_dataset_grows():
    small = hot_fraction(HotFractionQuery(alpha=0.9, n_items=5 * 10 ** 7, coverage=0.7))
    large = hot_fraction(HotFractionQuery(alpha=0.9, n_items=5 * 10 ** 9, coverage=0.7))
    assert small == pytest.approx(0.055, abs=0.003)
    assert large == pytest.approx(0.043, abs=0.003)


def test_small_populations_by_hand():
    # H(4, 0) = 4, so three of four equally popular items cover 70%
    assert hot_fraction(HotFractionQuery(alpha=0.0, n_items=4, coverage=0.7)) == 0.75
    # 1 / (1 + 1/2 + 1/3) = 0.545 < 0.6 <= 1.5 / 1.833
    assert hot_fraction(HotFractionQuery(alpha=1.0, n_items=3, coverage=0.6)) == pytest.approx(2 / 3)
    assert hot_fraction(HotFractionQuery(alpha=2.0, n_items=1, coverage=0.5)) == 1.0


def test_hot_fraction_monotone_in_coverage():
    values = [hot_fraction(HotFractionQuery(alpha=0.8, n_items=10 ** 6, coverage=c))
              for c in (0.1, 0.3, 0.5, 0.7, 0.9)]
    assert values == sorted(values)


def test_harmonic_numbers():
    assert generalized_harmonic(1, 0.9) == 1.0
    assert generalized_harmonic(10, 0.0) == 10.0
    assert generalized_harmonic(3, 1.0) == pytest.approx(1 + 1 / 2 + 1 / 3)
    with pytest.raises(ValueError):
        generalized_harmonic(0, 1.0)


@pytest.mark.parametrize("alpha", [0.5, 0.9, 1.0, 1.3])
def test_euler_maclaurin_tail_matches_exact_sum(alpha):
    n = 200000
    exact = _exact_sum(n, alpha)
    assert _exact_sum(1000, alpha) + _tail(1000, n, alpha) == pytest.approx(exact, rel=1e-9)
    assert HarmonicEvaluator(alpha, head=1000)(n) == pytest.approx(exact, rel=1e-9)


@pytest.mark.slow
def test_tail_is_continuous_at_the_exact_limit():
    exact = generalized_harmonic(EXACT_LIMIT, 0.9)
    estimate = _exact_sum(HEAD_TERMS, 0.9) + _tail(HEAD_TERMS, EXACT_LIMIT, 0.9)
    assert estimate == pytest.approx(exact, rel=1e-9)
    assert generalized_harmonic(EXACT_LIMIT + 1, 0.9) > exact


def test_bad_queries():
    with pytest.raises(ValueError):
        HotFractionQuery(alpha=0.9, n_items=10, coverage=1.0)
    with pytest.raises(ValueError):
        HotFractionQuery(alpha=-1.0, n_items=10, coverage=0.5)
    with pytest.raises(ValueError):
        HotFractionQuery(alpha=0.9, n_items=0, coverage=0.5)


def test_table_rows():
    frame = hot_fraction_table([0.9], [5 * 10 ** 7, 5 * 10 ** 9], 0.7)
    assert list(frame.columns) == ["alpha", "n_items", "coverage", "hot_fraction"]
    assert frame["hot_fraction"].round(3).tolist() == [0.055, 0.043]
