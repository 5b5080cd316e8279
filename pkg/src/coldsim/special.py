"""Special functions used throughout the reliability model.

Everything here is a pure function of its arguments. Integer-order Gamma
functions use the finite Poisson-sum identity; the regularized incomplete
beta uses a Lentz continued fraction with a log-space binomial fallback for
integer arguments.
"""

from __future__ import annotations

import cmath
import math
from typing import Sequence

import numpy as np
from scipy import special as _sc

EULER_GAMMA = 0.5772156649

_CF_EPS = 1e-15
_CF_TINY = 1e-300
_CF_MAX_ITER = 10_000


def _check_probs(probs: Sequence[float]) -> np.ndarray:
    p = np.asarray(probs, dtype=float).ravel()
    if p.size and (np.any(p < 0.0) or np.any(p > 1.0) or np.any(np.isnan(p))):
        raise ValueError("probabilities must lie in [0, 1]")
    return p


# ---------------------------------------------------------------------------
# Gamma
# ---------------------------------------------------------------------------

def upper_incomplete_gamma(l: int, x: float) -> float:
    """Upper incomplete Gamma function for positive integer order.

    Uses Gamma(l, x) = (l-1)! e^{-x} sum_{m<l} x^m / m!.
    """
    if int(l) != l or l < 1:
        raise ValueError(f"order must be a positive integer, got {l!r}")
    if x < 0:
        raise ValueError(f"x must be nonnegative, got {x!r}")
    l = int(l)
    if x == 0.0:
        return float(math.factorial(l - 1))
    return math.exp(math.lgamma(l)) * regularized_upper_gamma(l, x)


def regularized_upper_gamma(l: int, x: float) -> float:
    """Gamma(l, x) / Gamma(l) for integer l >= 1 and x >= 0.

    This is P(Poisson(x) <= l - 1). Small orders are summed term by term in
    log space; large orders (carrier budgets run to millions of exchanges)
    go through scipy's ``gammaincc``.
    """
    if int(l) != l or l < 1:
        raise ValueError(f"order must be a positive integer, got {l!r}")
    if x < 0:
        raise ValueError(f"x must be nonnegative, got {x!r}")
    l = int(l)
    if x == 0.0:
        return 1.0
    if l > 200:
        return float(_sc.gammaincc(l, x))
    return _poisson_cdf_sum(l - 1, x)


def _poisson_cdf_sum(top: int, x: float) -> float:
    # sum_{m=0}^{top} e^{-x} x^m / m!, accumulated in log space
    log_x = math.log(x)
    terms = [m * log_x - x - math.lgamma(m + 1) for m in range(top + 1)]
    peak = max(terms)
    total = math.fsum(math.exp(t - peak) for t in terms)
    return min(1.0, math.exp(peak) * total)


# ---------------------------------------------------------------------------
# Beta
# ---------------------------------------------------------------------------

def log_beta(a: float, b: float) -> float:
    return math.lgamma(a) + math.lgamma(b) - math.lgamma(a + b)


def _beta_cf(x: float, a: float, b: float) -> float:
    """Continued fraction for I_x(a, b), modified Lentz evaluation."""
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _CF_TINY:
        d = _CF_TINY
    d = 1.0 / d
    h = d
    for m in range(1, _CF_MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _CF_TINY:
            d = _CF_TINY
        c = 1.0 + aa / c
        if abs(c) < _CF_TINY:
            c = _CF_TINY
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _CF_TINY:
            d = _CF_TINY
        c = 1.0 + aa / c
        if abs(c) < _CF_TINY:
            c = _CF_TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _CF_EPS:
            return h
    raise ArithmeticError(f"incomplete beta continued fraction did not converge (x={x}, a={a}, b={b})")


def regularized_incomplete_beta(x: float, a: float, b: float) -> float:
    """I_x(a, b) = B(x; a, b) / B(a, b)."""
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"x must lie in [0, 1], got {x!r}")
    if a <= 0 or b <= 0:
        raise ValueError(f"a and b must be positive, got a={a!r}, b={b!r}")
    if x == 0.0:
        return 0.0
    if x == 1.0:
        return 1.0
    log_front = a * math.log(x) + b * math.log1p(-x) - log_beta(a, b)
    if x < (a + 1.0) / (a + b + 2.0):
        return math.exp(log_front) * _beta_cf(x, a, b) / a
    return 1.0 - math.exp(log_front) * _beta_cf(1.0 - x, b, a) / b


def regularized_incomplete_beta_binomial(x: float, a: int, b: int) -> float:
    """I_x(a, b) for integer a, b via the binomial tail identity.

    I_x(a, b) = P(Bin(a + b - 1, x) >= a), summed in log space.
    """
    if int(a) != a or int(b) != b or a < 1 or b < 1:
        raise ValueError("binomial route needs positive integer a and b")
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"x must lie in [0, 1], got {x!r}")
    a, b = int(a), int(b)
    if x == 0.0:
        return 0.0
    if x == 1.0:
        return 1.0
    n = a + b - 1
    return _binomial_tail(n, a, x)


def _binomial_tail(n: int, lo: int, p: float) -> float:
    # P(Bin(n, p) >= lo); sums whichever side is shorter
    log_p = math.log(p)
    log_q = math.log1p(-p)

    def log_term(l: int) -> float:
        return (
            math.lgamma(n + 1) - math.lgamma(l + 1) - math.lgamma(n - l + 1)
            + l * log_p + (n - l) * log_q
        )

    if lo <= 0:
        return 1.0
    if lo > n:
        return 0.0
    if n - lo + 1 <= lo:
        return math.fsum(math.exp(log_term(l)) for l in range(lo, n + 1))
    return 1.0 - math.fsum(math.exp(log_term(l)) for l in range(0, lo))


# ---------------------------------------------------------------------------
# Poisson binomial
# ---------------------------------------------------------------------------

def poisson_binomial_pmf(probs: Sequence[float]) -> np.ndarray:
    """PMF of the number of successes, by sequential convolution.

    Element ``o`` of the result is P(count == o); length is len(probs) + 1.
    """
    p = _check_probs(probs)
    pmf = np.zeros(p.size + 1)
    pmf[0] = 1.0
    for m, pm in enumerate(p, start=1):
        # in-place update, highest index first
        pmf[1 : m + 1] = pmf[1 : m + 1] * (1.0 - pm) + pmf[0:m] * pm
        pmf[0] *= 1.0 - pm
    return pmf


def poisson_binomial_pmf_dft(probs: Sequence[float], points: int | None = None) -> np.ndarray:
    """PMF via the discrete Fourier transform of the characteristic function.

    ``points`` is the DFT length; it must exceed len(probs). The default,
    len(probs) + 1, is the smallest length for which the inversion is exact.
    """
    p = _check_probs(probs)
    size = p.size + 1 if points is None else int(points)
    if size < p.size + 1:
        raise ValueError("DFT length must be at least len(probs) + 1")
    omega = 2.0 * math.pi / size
    pmf = np.empty(p.size + 1)
    chi = []
    for l in range(size):
        w = cmath.exp(1j * omega * l)
        prod = complex(1.0)
        for pm in p:
            prod *= 1.0 + (w - 1.0) * pm
        chi.append(prod)
    for o in range(p.size + 1):
        acc = complex(0.0)
        for l in range(size):
            acc += cmath.exp(-1j * omega * l * o) * chi[l]
        pmf[o] = (acc / size).real
    return pmf


def poisson_binomial_cdf(o: int, probs: Sequence[float], method: str = "dp") -> float:
    """P(number of successes <= o) for independent Bernoulli(probs)."""
    if o < 0:
        raise ValueError(f"o must be nonnegative, got {o!r}")
    p = _check_probs(probs)
    if o >= p.size:
        return 1.0
    if method == "dp":
        pmf = poisson_binomial_pmf(p)
    elif method == "dft":
        pmf = poisson_binomial_pmf_dft(p)
    else:
        raise ValueError(f"unknown method {method!r}")
    return float(min(1.0, max(0.0, math.fsum(pmf[: o + 1]))))


# ---------------------------------------------------------------------------
# Harmonic sums
# ---------------------------------------------------------------------------

def harmonic_sum(x: int, mode: str = "exact") -> float:
    """Sum of 1/m for m = 1..x, exact or via the asymptotic expansion."""
    if int(x) != x or x < 1:
        raise ValueError(f"x must be a positive integer, got {x!r}")
    x = int(x)
    if mode == "exact":
        return math.fsum(1.0 / m for m in range(1, x + 1))
    if mode == "approx":
        return (
            math.log(x) + EULER_GAMMA + 1.0 / (2 * x)
            - 1.0 / (12 * x**2) + 1.0 / (120 * x**4)
        )
    raise ValueError(f"mode must be 'exact' or 'approx', got {mode!r}")
