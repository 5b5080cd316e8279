"""Hard-error probabilities: drive read failures, tape damage and the
probability that a node-loss transition survives concurrent hard errors."""

from __future__ import annotations

import math
from dataclasses import dataclass

from coldsim.special import regularized_incomplete_beta

BITS_PER_BYTE = 8


def epsilon_from_ucer(ucer: float, capacity: float) -> float:
    """Probability of at least one unrecoverable error when reading a whole tape.

    ``capacity`` is expressed in the same unit the error rate counts
    (bits for a per-bit rate).
    """
    if not 0.0 <= ucer < 1.0:
        raise ValueError(f"ucer must lie in [0, 1), got {ucer!r}")
    if capacity <= 0:
        raise ValueError(f"capacity must be positive, got {capacity!r}")
    if ucer == 0.0:
        return 0.0
    return -math.expm1(capacity * math.log1p(-ucer))


def combined_eta(epsilon: float, kappa: float) -> float:
    if not 0.0 <= epsilon <= 1.0 or not 0.0 <= kappa <= 1.0:
        raise ValueError("epsilon and kappa must be probabilities")
    return 1.0 - (1.0 - epsilon) * (1.0 - kappa)


@dataclass(frozen=True)
class HardErrorParams:
    ucer: float = 1e-19
    capacity_bytes: float = 6e12
    kappa: float = 0.001
    ucer_unit: str = "bit"

    def __post_init__(self):
        if not 0.0 <= self.ucer < 1.0:
            raise ValueError(f"ucer must lie in [0, 1), got {self.ucer!r}")
        if self.capacity_bytes <= 0:
            raise ValueError(f"capacity must be positive, got {self.capacity_bytes!r}")
        if not 0.0 <= self.kappa < 1.0:
            raise ValueError(f"kappa must lie in [0, 1), got {self.kappa!r}")
        if self.ucer_unit not in ("bit", "byte"):
            raise ValueError(f"ucer_unit must be 'bit' or 'byte', got {self.ucer_unit!r}")

    @property
    def capacity_bits(self) -> float:
        return self.capacity_bytes * BITS_PER_BYTE

    @property
    def epsilon(self) -> float:
        reads = self.capacity_bits if self.ucer_unit == "bit" else self.capacity_bytes
        return epsilon_from_ucer(self.ucer, reads)

    @property
    def eta(self) -> float:
        return combined_eta(self.epsilon, self.kappa)


def delta(i: int, k: int, eta: float) -> float:
    """Probability that a transition out of i available nodes tolerates the
    concurrent hard errors, i.e. at most i - k - 1 of the i reads fail.

    Evaluated as 1 - I_eta(i - k, k + 1); zero when i == k.
    """
    _check_delta_args(i, k, eta)
    if i == k:
        return 0.0
    return 1.0 - regularized_incomplete_beta(eta, i - k, k + 1)


def delta_binomial(i: int, k: int, eta: float) -> float:
    """Same quantity as :func:`delta`, summed as a binomial CDF."""
    _check_delta_args(i, k, eta)
    if i == k:
        return 0.0
    if eta == 0.0:
        return 1.0
    if eta == 1.0:
        return 0.0
    log_e, log_q = math.log(eta), math.log1p(-eta)
    terms = (
        math.exp(
            math.lgamma(i + 1) - math.lgamma(l + 1) - math.lgamma(i - l + 1)
            + l * log_e + (i - l) * log_q
        )
        for l in range(0, i - k)
    )
    return min(1.0, math.fsum(terms))


def _check_delta_args(i: int, k: int, eta: float) -> None:
    if i < k:
        raise ValueError(f"i must be >= k (i={i}, k={k})")
    if not 0.0 <= eta <= 1.0:
        raise ValueError(f"eta must lie in [0, 1], got {eta!r}")
