"""Rate and transition-probability matrices of the three-node-state chain,
plus closed-form bounds on the mean time to data loss."""

from __future__ import annotations

import math
from typing import Callable, Sequence

import numpy as np

from coldsim.carrier import RateParams, detection_rate, repair_rate
from coldsim.hard_error import delta
from coldsim.special import harmonic_sum
from coldsim.states import StateSpace, SystemState

ROW_SUM_TOL = 1e-9


class SingularChainError(ArithmeticError):
    """I - L is singular: some transient class never reaches absorption."""


def _fill_q(
    space: StateSpace,
    lam: float,
    eta: float,
    detect: Callable[[SystemState], float],
    repair: Callable[[SystemState], float],
) -> np.ndarray:
    size = space.size
    fail = space.total_failure_index
    q = np.zeros((size, size))
    deltas = {i: delta(i, space.k, eta) for i in range(space.k, space.n + 1)}
    for row, st in enumerate(space.transient):
        i, j, z = st.available, st.failed, st.detected
        loss = i * lam
        if i > space.k:
            survive = loss * deltas[i]
            q[row, space.index(SystemState(i - 1, j + 1, z))] += survive
            q[row, fail] += loss - survive
        else:
            q[row, fail] += loss
        if j > 0:
            q[row, space.index(SystemState(i, j - 1, z + 1))] += detect(st)
        if z > 0:
            q[row, space.index(SystemState(i + 1, j, z - 1))] += repair(st)
        q[row, row] = -q[row].sum()
    check_rate_matrix(q)
    return q


def build_q(space: StateSpace, rates: RateParams, eta: float) -> np.ndarray:
    """Time-homogeneous rate matrix: detection j*theta, repair z*mu."""
    if space.s != 3:
        raise ValueError("the executable chain is defined for three node states")
    return _fill_q(
        space,
        rates.lam,
        eta,
        detect=lambda st: st.failed * rates.theta,
        repair=lambda st: st.detected * rates.mu,
    )


def build_q_timed(
    space: StateSpace,
    rates: RateParams,
    eta: float,
    carrier_survivals: Sequence[float],
    t: float,
) -> np.ndarray:
    """Rate matrix with carrier-aware detection and repair rates.

    ``carrier_survivals`` has one entry per node. Within a state the first i
    nodes are taken as available, the next j as failed and the last z as
    detected, matching the exchangeable-node reading of the aggregated chain.
    """
    surv = list(carrier_survivals)
    if len(surv) != space.n:
        raise ValueError(f"expected {space.n} carrier survivals, got {len(surv)}")

    def detect(st: SystemState) -> float:
        i, j = st.available, st.failed
        return detection_rate(j, t, rates.phi, rates.theta, surv[i : i + j])

    def repair(st: SystemState) -> float:
        i, j, z = st.available, st.failed, st.detected
        return repair_rate(
            i, z, space.k, t, rates.phi, rates.mu, surv[:i], surv[i + j : i + j + z]
        )

    return _fill_q(space, rates.lam, eta, detect, repair)


def check_rate_matrix(q: np.ndarray) -> None:
    off = q - np.diag(np.diag(q))
    if np.any(off < 0):
        raise ValueError("rate matrix has negative off-diagonal entries")
    scale = max(1.0, float(np.max(np.abs(np.diag(q))))) if q.size else 1.0
    if np.any(np.abs(q.sum(axis=1)) > ROW_SUM_TOL * scale):
        raise ValueError("rate matrix rows do not sum to zero")
    if np.any(q[-1] != 0.0):
        raise ValueError("absorbing row must be zero")


def q_to_p(q: np.ndarray) -> np.ndarray:
    """Embedded jump chain P = I + Q / |diag(Q)|; absorbing rows self-loop."""
    q = np.asarray(q, dtype=float)
    hold = -np.diag(q)
    p = np.zeros_like(q)
    for row in range(q.shape[0]):
        if hold[row] == 0.0:
            p[row, row] = 1.0
        else:
            p[row] = q[row] / hold[row]
            p[row, row] = 0.0
    return p


def fundamental_matrix(p: np.ndarray) -> np.ndarray:
    """(I - L)^-1 for the transient block L of a chain whose last state absorbs."""
    p = np.asarray(p, dtype=float)
    L = p[:-1, :-1]
    a = np.eye(L.shape[0]) - L
    try:
        m = np.linalg.solve(a, np.eye(L.shape[0]))
    except np.linalg.LinAlgError as exc:
        raise SingularChainError("I - L is singular") from exc
    if not np.all(np.isfinite(m)) or np.linalg.cond(a) > 1e14:
        raise SingularChainError("I - L is numerically singular")
    return m


def upper_bound_from_q(q: np.ndarray, method: str = "fundamental") -> float:
    """Mean absorption time from state 0.

    ``fundamental`` sums expected visits times mean hold times; ``linear_solve``
    solves -Q_TT T = 1 directly.
    """
    q = np.asarray(q, dtype=float)
    qtt = q[:-1, :-1]
    if method == "fundamental":
        m = fundamental_matrix(q_to_p(q))
        hold = -1.0 / np.diag(qtt)
        return float(m[0] @ hold)
    if method == "linear_solve":
        try:
            times = np.linalg.solve(-qtt, np.ones(qtt.shape[0]))
        except np.linalg.LinAlgError as exc:
            raise SingularChainError("transient generator block is singular") from exc
        return float(times[0])
    raise ValueError(f"unknown method {method!r}")


def upper_bound(
    space: StateSpace, rates: RateParams, eta: float, method: str = "fundamental"
) -> float:
    """MTTDL of the chain with carriers always available."""
    return upper_bound_from_q(build_q(space, rates, eta), method)


def lower_bound(n: int, k: int, lam: float, eta: float, mode: str = "exact") -> float:
    """MTTDL of the pure-death chain left when no carrier is available.

    Without carriers nothing is detected or repaired, so the system walks
    down from n available nodes, absorbing either on a hard-error split or
    on the first failure at k nodes.
    """
    if k < 1 or k > n:
        raise ValueError(f"need 1 <= k <= n (n={n}, k={k})")
    if not lam > 0:
        raise ValueError("lam must be positive")
    if mode not in ("exact", "approx"):
        raise ValueError(f"mode must be 'exact' or 'approx', got {mode!r}")
    deltas = {i: delta(i, k, eta) for i in range(k, n + 1)}
    total = 0.0
    survive_above = 1.0  # product of deltas for i+1..n
    for i in range(n, k - 1, -1):
        weight = (1.0 - deltas[i]) * survive_above
        survive_above *= deltas[i]
        if weight == 0.0:
            continue
        total += weight * _sojourn(n, i, lam, mode)
    return total


def _sojourn(n: int, i: int, lam: float, mode: str) -> float:
    # expected time to walk from n down through i: sum_{j=i}^{n} 1/(j lam)
    if mode == "exact":
        if i == 1:
            return harmonic_sum(n) / lam
        return (harmonic_sum(n) - harmonic_sum(i - 1)) / lam
    if i == 1:
        return harmonic_sum(n, "approx") / lam
    correction = 0.0
    for sign, nl in ((1.0, n), (-1.0, i - 1)):
        correction += sign * (1.0 / (2 * nl) - 1.0 / (12 * nl**2) + 1.0 / (120 * nl**4))
    return (math.log(n / (i - 1)) + correction) / lam


def mean_absorption_time_pure_death(n: int, k: int, lam: float, eta: float) -> float:
    """Linear-solve reference for :func:`lower_bound` on the pure-death chain."""
    size = n - k + 1
    q = np.zeros((size + 1, size + 1))
    for row, i in enumerate(range(n, k - 1, -1)):
        loss = i * lam
        d = delta(i, k, eta)
        if i > k:
            q[row, row + 1] = loss * d
        q[row, size] += loss * (1.0 - d) if i > k else loss
        q[row, row] = -q[row].sum()
    return upper_bound_from_q(q, "linear_solve")
