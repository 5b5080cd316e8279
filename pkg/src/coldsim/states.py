"""Markov state space of an (n, k) coded system with per-node states.

The executable chain uses three node states: available (A), failed but not
yet detected (F) and detected (D). A system state is the triple of counts
(i, j, z) with i + j + z = n and i >= k, plus a single absorbing total
failure state.

Indices are zero based: the transient state (i, j, z) sits at
C(n - i + 1, 2) + z and the absorbing state is last.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from math import comb

DEFAULT_MAX_N = 64


@dataclass(frozen=True, order=True)
class SystemState:
    available: int = 0
    failed: int = 0
    detected: int = 0
    is_total_failure: bool = False

    @classmethod
    def total_failure(cls) -> "SystemState":
        return cls(0, 0, 0, True)

    def __str__(self) -> str:
        if self.is_total_failure:
            return "F"
        return f"({self.available},{self.failed},{self.detected})"


def _check_nks(n: int, k: int, s: int = 3) -> None:
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if k > n:
        raise ValueError(f"k must not exceed n (k={k}, n={n})")
    if s < 2:
        raise ValueError(f"number of node states must be >= 2, got {s}")


def count_states(n: int, k: int, s: int = 3) -> int:
    """Number of Markov states, total failure state included."""
    _check_nks(n, k, s)
    return comb(n - k + s - 1, n - k) + 1


def count_states_brute_force(n: int, k: int, s: int) -> int:
    """Enumerate every split of the n - i unavailable nodes over s - 1 states."""
    _check_nks(n, k, s)
    total = 0
    for i in range(k, n + 1):
        rest = n - i
        total += sum(
            1 for split in itertools.product(range(rest + 1), repeat=s - 1) if sum(split) == rest
        )
    return total + 1


def count_bounds(n: int, k: int, s: int = 3, tight: bool = False) -> tuple[int | float, int]:
    """Closed-form (lower, upper) bounds on ``count_states``.

    The loose lower bound is sum_{j<s} C(n-k+1, j) and is exact for s in
    {2, 3}. With ``tight=True`` the lower bound carries the extra
    ((s-2)/(j-1))^(j-1) weights and may be fractional. The upper bound is
    C(s + n - k, s - 1) in both cases.
    """
    _check_nks(n, k, s)
    d = n - k
    upper = comb(s + d, s - 1)
    if not tight:
        lower = sum(comb(d + 1, j) for j in range(s))
        return lower, upper
    lower_t: float = float(comb(d + 1, 0) + comb(d + 1, 1))
    for j in range(2, s):
        lower_t += ((s - 2) / (j - 1)) ** (j - 1) * comb(d + 1, j)
    return lower_t, upper


def canonical_index(state: SystemState, n: int, k: int | None = None) -> int:
    """Zero-based index of ``state``; needs ``k`` only for the absorbing state."""
    if state.is_total_failure:
        if k is None:
            raise ValueError("k is required to index the total failure state")
        return count_states(n, k, 3) - 1
    i, j, z = state.available, state.failed, state.detected
    if min(i, j, z) < 0 or i + j + z != n or (k is not None and i < k):
        raise ValueError(f"invalid state {state} for n={n}, k={k}")
    return comb(n - i + 1, 2) + z


def index_to_state(index: int, n: int, k: int) -> SystemState:
    """Inverse of :func:`canonical_index`."""
    size = count_states(n, k, 3)
    if not 0 <= index < size:
        raise ValueError(f"index {index} outside [0, {size - 1}]")
    if index == size - 1:
        return SystemState.total_failure()
    # largest d = n - i with C(d + 1, 2) <= index
    d = 0
    while comb(d + 2, 2) <= index:
        d += 1
    z = index - comb(d + 1, 2)
    return SystemState(n - d, d - z, z)


@dataclass(frozen=True)
class StateSpace:
    n: int
    k: int
    s: int = 3
    states: tuple[SystemState, ...] = field(default=(), repr=False)
    index_of: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def total_failure_index(self) -> int:
        return len(self.states) - 1

    @property
    def size(self) -> int:
        return len(self.states)

    @property
    def transient(self) -> tuple[SystemState, ...]:
        return self.states[:-1]

    def __len__(self) -> int:
        return len(self.states)

    def __iter__(self):
        return iter(self.states)

    def index(self, state: SystemState) -> int:
        return self.index_of[state]


def enumerate_states(n: int, k: int, max_n: int = DEFAULT_MAX_N) -> StateSpace:
    """All (i, j, z) states of the three-node-state chain, in index order."""
    _check_nks(n, k, 3)
    if n > max_n:
        raise ValueError(f"n={n} exceeds the configured maximum {max_n}")
    transient = []
    for d in range(0, n - k + 1):
        for z in range(0, d + 1):
            transient.append(SystemState(n - d, d - z, z))
    states = tuple(transient) + (SystemState.total_failure(),)
    index_of = {st: idx for idx, st in enumerate(states)}
    return StateSpace(n=n, k=k, s=3, states=states, index_of=index_of)


def states_csv(space: StateSpace) -> str:
    lines = ["index,i,j,z,is_failure"]
    for idx, st in enumerate(space.states):
        lines.append(
            f"{idx},{st.available},{st.failed},{st.detected},{int(st.is_total_failure)}"
        )
    return "\n".join(lines) + "\n"


def enumerate_general(n: int, k: int, s: int) -> str:
    """CSV of every state when each unavailable node takes one of s - 1 states.

    Columns are the available count followed by one count per extra node
    state; rows are ordered by the number of unavailable nodes.
    """
    _check_nks(n, k, s)
    extra = [f"c{c}" for c in range(1, s)]
    lines = ["index,available," + ",".join(extra) + ",is_failure"]
    idx = 0
    for d in range(0, n - k + 1):
        splits = sorted(
            (sp for sp in itertools.product(range(d + 1), repeat=s - 1) if sum(sp) == d),
            reverse=True,
        )
        for sp in splits:
            lines.append(f"{idx},{n - d}," + ",".join(map(str, sp)) + ",0")
            idx += 1
    lines.append(f"{idx},0," + ",".join("0" for _ in extra) + ",1")
    return "\n".join(lines) + "\n"
