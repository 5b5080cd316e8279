"""Carrier (robot) lifetime and availability model.

A carrier survives a Weibull-distributed number of exchanges (swaps before
failure, SBF). Exchanges arrive as a Poisson process, so the time to carrier
failure given a budget of l exchanges is Gamma(l, omega). The rate functions
at the bottom give the carrier-aware detection and repair rates of the
non-homogeneous chain.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from math import comb
from typing import Sequence

import numpy as np
from scipy.special import gammaincc

from coldsim.special import harmonic_sum, poisson_binomial_pmf, regularized_upper_gamma


@dataclass(frozen=True)
class WeibullParams:
    shape: float
    scale: float
    intercept: float | None = None
    slope: float | None = None
    r_squared: float | None = None
    n_samples: int | None = None

    def __post_init__(self):
        if not (self.shape > 0 and math.isfinite(self.shape)):
            raise ValueError(f"Weibull shape must be positive, got {self.shape!r}")
        if not (self.scale > 0 and math.isfinite(self.scale)):
            raise ValueError(f"Weibull scale must be positive, got {self.scale!r}")

    @property
    def mean_exchanges(self) -> float:
        return mean_exchanges(self)

    def to_json_dict(self) -> dict:
        return {
            "shape": self.shape,
            "scale": self.scale,
            "mean_exchanges": self.mean_exchanges,
            "r_squared": self.r_squared,
            "n_samples": self.n_samples,
        }


@dataclass(frozen=True)
class RateParams:
    """Process rates, all per hour; ``omega`` is exchanges per hour per carrier.

    ``phi`` may be ``math.inf`` (instant carrier replacement) or 0 (never).
    """

    lam: float = 1.0 / 50000
    mu: float = 1.0 / 24
    theta: float = 1.0 / 8760
    phi: float = 1.0 / 48
    omega: float = 10.0

    def __post_init__(self):
        for name in ("lam", "mu", "theta"):
            value = getattr(self, name)
            if not (value > 0 and math.isfinite(value)):
                raise ValueError(f"{name} must be a positive finite rate, got {value!r}")
        if not self.phi >= 0:
            raise ValueError(f"phi must be >= 0, got {self.phi!r}")
        if not (self.omega >= 0 and math.isfinite(self.omega)):
            raise ValueError(f"omega must be finite and >= 0, got {self.omega!r}")


@dataclass
class CarrierState:
    node_id: int
    budget: int
    exchanges_made: float = 0.0
    operational: bool = True
    age_clock: float = 0.0

    @property
    def remaining(self) -> int:
        return max(1, math.ceil(self.budget - self.exchanges_made))


# ---------------------------------------------------------------------------
# Weibull SBF distribution
# ---------------------------------------------------------------------------

def median_ranks(n: int) -> np.ndarray:
    """Benard's median-rank plotting positions (i - 0.3) / (n + 0.4)."""
    ranks = np.arange(1, n + 1, dtype=float)
    return (ranks - 0.3) / (n + 0.4)


def fit_weibull(exchange_counts: Sequence[float]) -> WeibullParams:
    """Least-squares fit on the Weibull probability plot.

    Regresses ln(-ln(1 - W)) on ln(t) with median-rank W; the slope is the
    shape and the scale is exp(-intercept / shape).
    """
    t = np.asarray(exchange_counts, dtype=float).ravel()
    if t.size < 3:
        raise ValueError(f"need at least 3 samples, got {t.size}")
    if np.any(~np.isfinite(t)) or np.any(t <= 0):
        raise ValueError("exchange counts must be positive and finite")
    if np.unique(t).size < 2:
        raise ValueError("all samples are equal; the regression is degenerate")
    t = np.sort(t)
    w = median_ranks(t.size)
    xs = np.log(t)
    ys = np.log(-np.log1p(-w))
    x_mean, y_mean = xs.mean(), ys.mean()
    sxx = np.sum((xs - x_mean) ** 2)
    sxy = np.sum((xs - x_mean) * (ys - y_mean))
    slope = sxy / sxx
    intercept = y_mean - slope * x_mean
    ss_res = np.sum((ys - (intercept + slope * xs)) ** 2)
    ss_tot = np.sum((ys - y_mean) ** 2)
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    if slope <= 0:
        raise ValueError("fitted slope is not positive; data is not Weibull-like")
    return WeibullParams(
        shape=float(slope),
        scale=float(math.exp(-intercept / slope)),
        intercept=float(intercept),
        slope=float(slope),
        r_squared=float(r2),
        n_samples=int(t.size),
    )


def mean_exchanges(params: WeibullParams) -> float:
    return params.scale * math.gamma(1.0 + 1.0 / params.shape)


def sbf_from_uniform(params: WeibullParams, u: float) -> int:
    """Inverse-transform an SBF draw, rounded to a whole number of exchanges >= 1."""
    if not 0.0 < u <= 1.0:
        raise ValueError(f"u must lie in (0, 1], got {u!r}")
    value = params.scale * (-math.log(u)) ** (1.0 / params.shape)
    if not math.isfinite(value):
        raise OverflowError("SBF draw overflowed")
    return max(1, int(round(value)))


def sample_sbf(params: WeibullParams, rng: np.random.Generator) -> int:
    # 1 - random() lies in (0, 1]
    return sbf_from_uniform(params, 1.0 - rng.random())


# ---------------------------------------------------------------------------
# Carrier survival and carrier-aware rates
# ---------------------------------------------------------------------------

def carrier_survival(l: int, omega: float, t: float) -> float:
    """P(time to carrier failure > t) when l exchanges remain in its budget."""
    if int(l) != l or l < 1:
        raise ValueError(f"l must be a positive integer, got {l!r}")
    if omega < 0 or t < 0:
        raise ValueError("omega and t must be nonnegative")
    return regularized_upper_gamma(int(l), omega * t)


def carrier_survival_many(budgets: np.ndarray, omega: float, ages: np.ndarray) -> np.ndarray:
    """Vectorized :func:`carrier_survival` for the simulator's hot loop."""
    return gammaincc(np.asarray(budgets, dtype=float), omega * np.asarray(ages, dtype=float))


def exp_tail_rate(phi: float, thetas: Sequence[float] = ()) -> float:
    """Rate of the exponential whose mean equals that of the stage sum."""
    rates = [phi, *thetas]
    if any(not r > 0 for r in rates):
        raise ValueError("all stage rates must be positive")
    return 1.0 / math.fsum(1.0 / r for r in rates)


def _loss_weight(rate: float, phi: float) -> float:
    # rate^2 / (rate + phi), the per-carrier rate loss; vanishes as phi -> inf
    if math.isinf(phi):
        return 0.0
    return rate * rate / (rate + phi)


def detection_rate(
    j: int, t: float, phi: float, theta: float, survivals: Sequence[float]
) -> float:
    """Unconditional detection rate for j undetected failed nodes.

    ``survivals`` holds the carrier survival probabilities of those nodes.
    ``t`` is carried for the caller's bookkeeping; the time dependence enters
    through ``survivals``.
    """
    if j < 0:
        raise ValueError(f"j must be nonnegative, got {j}")
    if len(survivals) < j:
        raise ValueError(f"need {j} survival probabilities, got {len(survivals)}")
    if j == 0:
        return 0.0
    lost = math.fsum(1.0 - b for b in survivals[:j])
    return j * theta - _loss_weight(theta, phi) * lost


def writer_rate(z: int, phi: float, mu: float, writer_survivals: Sequence[float]) -> float:
    """Carrier-aware write rate of the z detected nodes."""
    lost = math.fsum(1.0 - b for b in writer_survivals)
    return z * mu - _loss_weight(mu, phi) * lost


def helper_split(i: int, k: int, l: int, x: int) -> float:
    """P(x of the k helpers drawn from i available nodes have one of the l
    failed carriers), sampling without replacement."""
    if x > l or k - x > i - l or x > k or x < 0:
        return 0.0
    return comb(i - l, k - x) * comb(l, x) / comb(i, k)


def repair_rate(
    i: int,
    z: int,
    k: int,
    t: float,
    phi: float,
    mu: float,
    survivals: Sequence[float],
    writer_survivals: Sequence[float] | None = None,
) -> float:
    """Unconditional repair rate out of a state with i available and z detected nodes.

    ``survivals`` are the carrier survival probabilities of the i available
    (helper) nodes; ``writer_survivals`` those of the z detected nodes, which
    default to fresh carriers.
    """
    if z <= 0:
        raise ValueError("repair needs at least one detected node")
    if i < k:
        raise ValueError(f"i must be >= k (i={i}, k={k})")
    if len(survivals) != i:
        raise ValueError(f"need exactly {i} helper survival probabilities, got {len(survivals)}")
    if writer_survivals is None:
        writer_survivals = [1.0] * z
    if len(writer_survivals) != z:
        raise ValueError(f"need exactly {z} writer survival probabilities")

    mu_z = writer_rate(z, phi, mu, writer_survivals)
    if mu_z <= 0.0:
        return 0.0
    base = 1.0 / mu_z
    # psi[o] = P(o of the i helper carriers are operational)
    psi = poisson_binomial_pmf(survivals)
    total = 0.0
    for l in range(0, i + 1):
        weight = psi[i - l]
        if weight == 0.0:
            continue
        inner = 0.0
        for x in range(0, min(l, k) + 1):
            h = helper_split(i, k, l, x)
            if h == 0.0:
                continue
            if x == 0:
                inner += h / base
            elif phi > 0:
                inner += h / (base + harmonic_sum(x) / phi)
        total += weight * inner
    return total
