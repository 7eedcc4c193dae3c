import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ifrci.binom import Interval, binom_cdf, binom_pmf, binom_sf, clopper_pearson
from ifrci.exceptions import DomainError

from oracles import cp_beta, exact_pmf, recurrence_pmf

probs = st.floats(0.0, 1.0, allow_nan=False)


def test_pmf_trivial():
    assert binom_pmf(0, 5, 0.0) == 1.0
    assert binom_pmf(5, 5, 1.0) == 1.0
    assert binom_pmf(3, 5, 0.0) == 0.0
    assert binom_pmf(2, 4, 0.5) == pytest.approx(0.375, abs=1e-12)


def test_pmf_matches_recurrence():
    got = binom_pmf(138, 919, 0.15)
    assert got == pytest.approx(recurrence_pmf(138, 919, 0.15), abs=1e-12)
    # 50-digit reference
    assert got == pytest.approx(0.036812207643873071437, abs=1e-12)


@pytest.mark.parametrize("k", [-1, 6])
def test_pmf_out_of_range(k):
    with pytest.raises(DomainError):
        binom_pmf(k, 5, 0.3)


def test_invalid_params():
    with pytest.raises(DomainError):
        binom_cdf(1, 5, 1.5)
    with pytest.raises(DomainError):
        binom_cdf(1, -5, 0.5)


def test_cdf_trivial():
    assert binom_cdf(7, 7, 0.3) == 1.0
    assert binom_cdf(-1, 7, 0.3) == 0.0
    assert binom_cdf(100, 7, 0.3) == 1.0
    assert binom_cdf(1, 2, 0.5) == pytest.approx(0.75, abs=1e-12)


def test_cdf_matches_summation():
    brute = math.fsum(recurrence_pmf(k, 919, 0.15) for k in range(131))
    assert binom_cdf(130, 919, 0.15) == pytest.approx(brute, abs=1e-10)
    assert binom_cdf(130, 919, 0.15) == pytest.approx(0.25042064881634823604, abs=1e-10)


def test_sf_trivial_and_small_tail():
    assert binom_sf(0, 9, 0.4) == 1.0
    assert binom_sf(10, 9, 0.4) == 0.0
    assert binom_sf(2, 2, 0.5) == pytest.approx(0.25, abs=1e-12)
    # far upper tail keeps relative accuracy (50-digit reference)
    assert binom_sf(200, 919, 0.15) == pytest.approx(3.1091878382960629923e-8, rel=1e-9)


@settings(max_examples=200, deadline=None)
@given(n=st.integers(0, 2000), p=probs, data=st.data())
def test_cdf_sf_complement(n, p, data):
    k = data.draw(st.integers(-2, n + 2))
    assert binom_cdf(k, n, p) + binom_sf(k + 1, n, p) == pytest.approx(1.0, abs=1e-10)
    assert binom_cdf(k - 1, n, p) + binom_sf(k, n, p) == pytest.approx(1.0, abs=1e-10)


@settings(max_examples=60, deadline=None)
@given(n=st.integers(0, 2000), p=probs)
def test_pmf_sums_to_one(n, p):
    total = math.fsum(binom_pmf(k, n, p) for k in range(n + 1))
    assert total == pytest.approx(1.0, abs=1e-9)


def test_clopper_pearson_closed_forms():
    ci = clopper_pearson(0, 10, 0.95)
    assert ci.lower == 0.0
    assert ci.upper == pytest.approx(1 - 0.025 ** 0.1, abs=1e-12)
    assert ci.upper == pytest.approx(0.3085, abs=1e-4)
    ci = clopper_pearson(10, 10, 0.95)
    assert ci.lower == pytest.approx(0.025 ** 0.1, abs=1e-12)
    assert ci.upper == 1.0


def test_clopper_pearson_study(study):
    ci = clopper_pearson(138, 919, 0.95)
    lo, hi = cp_beta(138, 919, 0.95)
    assert ci.lower == pytest.approx(lo, abs=1e-9)
    assert ci.upper == pytest.approx(hi, abs=1e-9)
    # scaled to the fatality rate: about 0.32% and 0.435%
    assert 7 / (12597 * ci.upper) == pytest.approx(0.003177, abs=5e-7)
    assert 7 / (12597 * ci.lower) == pytest.approx(0.004352, abs=5e-7)


@pytest.mark.parametrize("n", [1, 7, 30, 250])
@pytest.mark.parametrize("level", [0.8, 0.95, 0.99])
def test_clopper_pearson_matches_beta_quantiles(n, level):
    for k in range(0, n + 1, max(1, n // 12)):
        ci = clopper_pearson(k, n, level)
        lo, hi = cp_beta(k, n, level)
        assert ci.lower == pytest.approx(lo, abs=1e-9)
        assert ci.upper == pytest.approx(hi, abs=1e-9)


def test_clopper_pearson_monotone_in_k():
    n = 40
    cis = [clopper_pearson(k, n, 0.9) for k in range(n + 1)]
    lows = [c.lower for c in cis]
    highs = [c.upper for c in cis]
    assert lows == sorted(lows)
    assert highs == sorted(highs)


@pytest.mark.parametrize("n", [1, 5, 12, 30])
def test_clopper_pearson_coverage_by_enumeration(n):
    level = 0.95
    cis = [clopper_pearson(k, n, level) for k in range(n + 1)]
    for p in np.linspace(0.001, 0.999, 101):
        cov = sum(exact_pmf(k, n, p) for k, ci in enumerate(cis) if p in ci)
        assert cov >= level - 1e-12


def test_clopper_pearson_rejects_bad_input():
    with pytest.raises(DomainError):
        clopper_pearson(11, 10)
    with pytest.raises(DomainError):
        clopper_pearson(3, 10, 1.0)


def test_interval_type():
    iv = Interval(0.1, math.inf)
    assert iv.unbounded_upper
    assert 5.0 in iv
    assert 0.05 not in iv
    with pytest.raises(DomainError):
        Interval(0.3, 0.2)
    with pytest.raises(DomainError):
        Interval(-0.1, 0.2)
