import itertools
import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st
from scipy import integrate

from coldsim.special import (
    harmonic_sum,
    poisson_binomial_cdf,
    poisson_binomial_pmf,
    poisson_binomial_pmf_dft,
    regularized_incomplete_beta,
    regularized_incomplete_beta_binomial,
    regularized_upper_gamma,
    upper_incomplete_gamma,
)


def brute_force_cdf(o, probs):
    total = 0.0
    for outcome in itertools.product((0, 1), repeat=len(probs)):
        if sum(outcome) <= o:
            weight = 1.0
            for hit, p in zip(outcome, probs):
                weight *= p if hit else 1.0 - p
            total += weight
    return total


def quad_upper_gamma(l, x):
    value, _ = integrate.quad(lambda v: v ** (l - 1) * math.exp(-v), x, math.inf)
    return value


# --- incomplete gamma -------------------------------------------------------

def test_upper_gamma_trivial_values():
    assert upper_incomplete_gamma(1, 0) == 1.0
    assert upper_incomplete_gamma(1, 2.0) == pytest.approx(math.exp(-2.0), rel=1e-14)


def test_upper_gamma_order_three_matches_quadrature():
    expected = quad_upper_gamma(3, 1.0)
    assert expected == pytest.approx(1.839397205857212, rel=1e-12)
    assert upper_incomplete_gamma(3, 1.0) == pytest.approx(expected, rel=1e-12)


@pytest.mark.parametrize("l", range(1, 15))
def test_upper_gamma_at_zero_is_factorial(l):
    assert upper_incomplete_gamma(l, 0) == math.factorial(l - 1)


@pytest.mark.parametrize("l,x", [(2, 0.3), (5, 4.0), (8, 11.5), (20, 7.0), (40, 40.0)])
def test_upper_gamma_quadrature(l, x):
    assert upper_incomplete_gamma(l, x) == pytest.approx(quad_upper_gamma(l, x), rel=1e-9)


@pytest.mark.parametrize("l,x", [(150, 140.0), (199, 250.0), (201, 190.0), (5000, 4900.0)])
def test_regularized_gamma_branches_agree(l, x):
    # the log-space sum and the library route must meet at the switch-over
    from scipy.special import gammaincc

    assert regularized_upper_gamma(l, x) == pytest.approx(gammaincc(l, x), rel=1e-10)


@pytest.mark.parametrize("l,x", [(0, 1.0), (1, -0.5), (1.5, 1.0)])
def test_upper_gamma_rejects(l, x):
    with pytest.raises(ValueError):
        upper_incomplete_gamma(l, x)


# --- incomplete beta --------------------------------------------------------

def test_beta_trivial_values():
    assert regularized_incomplete_beta(0, 2, 3) == 0.0
    assert regularized_incomplete_beta(1, 5, 7) == 1.0
    assert regularized_incomplete_beta(0.5, 2, 2) == pytest.approx(0.5, abs=1e-15)


@pytest.mark.parametrize("x,a,b", [(0.2, 2.5, 3.0), (0.7, 0.5, 0.5), (0.01, 3, 40), (0.9, 12, 2)])
def test_beta_matches_quadrature(x, a, b):
    num, _ = integrate.quad(
        lambda v: v ** (a - 1) * (1 - v) ** (b - 1), 0, x, epsabs=0, epsrel=1e-13, limit=200
    )
    den = math.gamma(a) * math.gamma(b) / math.gamma(a + b)
    assert regularized_incomplete_beta(x, a, b) == pytest.approx(num / den, rel=1e-9)


@given(
    x=st.floats(0.0, 1.0),
    a=st.floats(0.1, 60.0),
    b=st.floats(0.1, 60.0),
)
@settings(max_examples=300, deadline=None)
def test_beta_reflection(x, a, b):
    assume(1.0 - (1.0 - x) == x)  # 1 - x must be representable
    total = regularized_incomplete_beta(x, a, b) + regularized_incomplete_beta(1 - x, b, a)
    assert total == pytest.approx(1.0, abs=1e-12)


@given(x=st.floats(1e-9, 0.5), a=st.integers(1, 50), b=st.integers(1, 51))
@settings(max_examples=300, deadline=None)
def test_beta_continued_fraction_matches_binomial_sum(x, a, b):
    assert regularized_incomplete_beta(x, a, b) == pytest.approx(
        regularized_incomplete_beta_binomial(x, a, b), abs=1e-12
    )


def test_beta_monotone_in_x():
    xs = np.linspace(0, 1, 201)
    values = [regularized_incomplete_beta(float(x), 3.5, 1.5) for x in xs]
    assert all(b >= a for a, b in zip(values, values[1:]))


@pytest.mark.parametrize("x,a,b", [(-0.1, 1, 1), (1.1, 1, 1), (0.5, 0, 1), (0.5, 1, -2)])
def test_beta_rejects(x, a, b):
    with pytest.raises(ValueError):
        regularized_incomplete_beta(x, a, b)


# --- Poisson binomial -------------------------------------------------------

def test_poisson_binomial_examples():
    assert poisson_binomial_cdf(0, [1.0, 1.0]) == 0.0
    assert poisson_binomial_cdf(1, [0.5, 0.5]) == pytest.approx(brute_force_cdf(1, [0.5, 0.5]))
    assert brute_force_cdf(1, [0.5, 0.5]) == pytest.approx(0.75)
    assert poisson_binomial_cdf(2, [0.3] * 3) == pytest.approx(0.973, abs=1e-12)
    assert brute_force_cdf(2, [0.3] * 3) == pytest.approx(0.973, abs=1e-12)


def test_poisson_binomial_saturates():
    assert poisson_binomial_cdf(3, [0.2, 0.9, 0.4]) == 1.0
    assert poisson_binomial_cdf(7, [0.2]) == 1.0
    assert poisson_binomial_cdf(0, []) == 1.0


@given(st.lists(st.floats(0.0, 1.0), min_size=1, max_size=10), st.data())
@settings(max_examples=200, deadline=None)
def test_poisson_binomial_dp_and_dft_match_enumeration(probs, data):
    o = data.draw(st.integers(0, len(probs)))
    expected = brute_force_cdf(o, probs)
    assert poisson_binomial_cdf(o, probs) == pytest.approx(expected, abs=1e-10)
    assert poisson_binomial_cdf(o, probs, method="dft") == pytest.approx(expected, abs=1e-10)


@given(st.lists(st.floats(0.0, 1.0), min_size=0, max_size=12))
@settings(max_examples=100, deadline=None)
def test_poisson_binomial_cdf_nondecreasing(probs):
    cdf = [poisson_binomial_cdf(o, probs) for o in range(len(probs) + 1)]
    assert all(b >= a - 1e-15 for a, b in zip(cdf, cdf[1:]))
    assert cdf[-1] == 1.0


@pytest.mark.parametrize("size", range(1, 11))
@pytest.mark.parametrize("p", [0.05, 0.3, 0.5, 0.77])
def test_poisson_binomial_equal_p_is_binomial(size, p):
    for o in range(size + 1):
        binom = sum(math.comb(size, c) * p**c * (1 - p) ** (size - c) for c in range(o + 1))
        assert poisson_binomial_cdf(o, [p] * size) == pytest.approx(binom, abs=1e-12)


def test_dft_with_longer_transform_is_still_exact():
    probs = [0.1, 0.6, 0.35]
    assert np.allclose(poisson_binomial_pmf_dft(probs, points=8), poisson_binomial_pmf(probs), atol=1e-12)
    with pytest.raises(ValueError):
        poisson_binomial_pmf_dft(probs, points=3)


def test_poisson_binomial_rejects_bad_probability():
    with pytest.raises(ValueError):
        poisson_binomial_cdf(1, [0.5, 1.2])
    with pytest.raises(ValueError):
        poisson_binomial_cdf(-1, [0.5])


# --- harmonic sum -----------------------------------------------------------

def test_harmonic_examples():
    assert harmonic_sum(1) == 1.0
    assert harmonic_sum(10) == pytest.approx(2.9289682539682538, abs=1e-13)
    assert harmonic_sum(10, "approx") == pytest.approx(2.9289682540, abs=1e-6)


def test_harmonic_approx_within_1e6_from_five_up():
    for x in range(5, 10_001):
        assert abs(harmonic_sum(x, "approx") - harmonic_sum(x)) < 1e-6


def test_harmonic_rejects_zero():
    with pytest.raises(ValueError):
        harmonic_sum(0)
    with pytest.raises(ValueError):
        harmonic_sum(3, "fast")
