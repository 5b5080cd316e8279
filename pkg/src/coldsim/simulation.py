"""Monte Carlo estimation of time to data loss and time to data unavailability.

Two trial engines share one outcome format:

* ``exact`` simulates every carrier explicitly. A carrier with a budget of m
  exchanges fails after a Gamma(m, omega) time, is replaced after an
  Exponential(phi) delay and comes back with a fresh budget. Detection of a
  failed node only progresses while its own carrier works; a repair first
  waits for the carriers of its k randomly chosen helpers, then writes while
  the node's own carrier works.
* ``approx`` runs the carrier-aware Markov chain: at each event epoch the
  detection and repair rates are rebuilt from per-node carrier survival
  probabilities and held fixed until the next epoch. Carrier exchange
  counters advance at their mean rate, so a carrier is declared failed once
  omega * age reaches its budget.

Both engines record the first time fewer than k nodes are available with a
working carrier (unavailability) and the absorption time (data loss).
"""

from __future__ import annotations

import concurrent.futures
import logging
import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from coldsim.carrier import (
    RateParams,
    WeibullParams,
    _loss_weight,
    carrier_survival_many,
    repair_rate,
    sample_sbf,
)
from coldsim.hard_error import HardErrorParams, delta

log = logging.getLogger(__name__)

INF = math.inf
DEFAULT_HORIZON_HOURS = 1e9
CENSOR_WARN_FRACTION = 0.01
CENSOR_UNRELIABLE_FRACTION = 0.5

_A, _F, _D = 0, 1, 2


@dataclass(frozen=True)
class SimConfig:
    n: int
    k: int
    rates: RateParams = field(default_factory=RateParams)
    hard_error: HardErrorParams = field(default_factory=HardErrorParams)
    weibull: WeibullParams = field(default_factory=lambda: WeibullParams(0.67, 525985.0))
    mode: str = "exact"
    trials: int = 10000
    max_sim_hours: float = DEFAULT_HORIZON_HOURS
    seed: int = 0

    def __post_init__(self):
        if self.k < 1 or self.k > self.n:
            raise ValueError(f"need 1 <= k <= n (n={self.n}, k={self.k})")
        if self.mode not in ("exact", "approx"):
            raise ValueError(f"mode must be 'exact' or 'approx', got {self.mode!r}")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if not self.max_sim_hours > 0:
            raise ValueError("max_sim_hours must be positive")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")

    @property
    def eta(self) -> float:
        return self.hard_error.eta


@dataclass(frozen=True)
class TrialOutcome:
    time_to_data_loss: float
    time_to_first_unavailability: float
    data_loss_censored: bool
    unavailability_censored: bool
    total_exchanges: int
    carrier_failures: int
    node_failures: int

    @property
    def censored(self) -> bool:
        return self.data_loss_censored


@dataclass
class SimSummary:
    mttdl: float
    mttdl_stderr: float
    mttdu: float
    mttdu_stderr: float
    censored_fraction: float
    trials: int
    outcomes: list[TrialOutcome] = field(default_factory=list, repr=False)

    @property
    def unreliable(self) -> bool:
        return self.censored_fraction > CENSOR_UNRELIABLE_FRACTION


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    """Independent generator for one trial, derived from the batch seed."""
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(trial,)))


# ---------------------------------------------------------------------------
# Shared bookkeeping
# ---------------------------------------------------------------------------

class _Trial:
    """Mutable per-trial state common to both engines."""

    def __init__(self, config: SimConfig, rng: np.random.Generator):
        self.cfg = config
        self.rng = rng
        self.n, self.k = config.n, config.k
        self.rates = config.rates
        self.horizon = config.max_sim_hours
        self.deltas = [delta(i, self.k, config.eta) if i >= self.k else 0.0 for i in range(self.n + 1)]
        self.state = [_A] * self.n
        self.n_avail = self.n
        self.robot_up = [True] * self.n
        self.budget = [0] * self.n
        self.robot_start = [0.0] * self.n
        self.t = 0.0
        self.ttdu = INF
        self.exchanges = 0
        self.carrier_failures = 0
        self.node_failures = 0

    def exp(self, rate: float) -> float:
        if rate <= 0.0:
            return INF
        if math.isinf(rate):
            return 0.0
        return self.rng.exponential(1.0 / rate)

    def check_unavailable(self) -> None:
        if self.ttdu < INF:
            return
        ready = 0
        for m in range(self.n):
            if self.state[m] == _A and self.robot_up[m]:
                ready += 1
        if ready < self.k:
            self.ttdu = self.t

    def node_fails(self) -> bool:
        """Apply the hard-error split to a node loss; True means data loss."""
        self.node_failures += 1
        i = self.n_avail
        if i <= self.k:
            return True
        return self.rng.random() >= self.deltas[i]

    def finish(self, ttdl: float, live_exchanges: int) -> TrialOutcome:
        censored = ttdl >= self.horizon
        ttdl = min(ttdl, self.horizon)
        ttdu = min(self.ttdu, ttdl)
        return TrialOutcome(
            time_to_data_loss=float(ttdl),
            time_to_first_unavailability=float(ttdu),
            data_loss_censored=bool(censored),
            unavailability_censored=bool(self.ttdu >= self.horizon and censored),
            total_exchanges=int(self.exchanges + live_exchanges),
            carrier_failures=self.carrier_failures,
            node_failures=self.node_failures,
        )


# ---------------------------------------------------------------------------
# Exact engine
# ---------------------------------------------------------------------------

_FAIL, _DETECT, _REPAIR, _ROBOT_DOWN, _ROBOT_UP = range(5)


def run_trial_exact(config: SimConfig, rng: np.random.Generator) -> TrialOutcome:
    """One discrete-event trial with explicit carriers."""
    tr = _Trial(config, rng)
    n, k = tr.n, tr.k
    lam, theta, mu, phi, omega = (
        tr.rates.lam, tr.rates.theta, tr.rates.mu, tr.rates.phi, tr.rates.omega,
    )
    # clock[kind * n + node] holds the next time of that event
    clock = [INF] * (5 * n)
    robot_end = [INF] * n
    waiting: list[set | None] = [None] * n
    writing = [False] * n

    def new_robot(m: int) -> None:
        tr.budget[m] = sample_sbf(config.weibull, rng)
        tr.robot_start[m] = tr.t
        tr.robot_up[m] = True
        end = tr.t + rng.gamma(tr.budget[m], 1.0 / omega) if omega > 0 else INF
        robot_end[m] = end
        clock[_ROBOT_DOWN * n + m] = end
        clock[_ROBOT_UP * n + m] = INF

    def start_write(m: int) -> None:
        waiting[m] = None
        writing[m] = True
        if tr.robot_up[m]:
            clock[_REPAIR * n + m] = tr.t + tr.exp(mu)

    for m in range(n):
        new_robot(m)
        clock[_FAIL * n + m] = tr.exp(lam)

    ttdl = INF
    while True:
        t = min(clock)
        if t >= tr.horizon:
            break
        slot = clock.index(t)
        kind, m = divmod(slot, n)
        tr.t = t

        if kind == _FAIL:
            clock[slot] = INF
            if tr.node_fails():
                ttdl = t
                break
            tr.state[m] = _F
            tr.n_avail -= 1
            if tr.robot_up[m]:
                clock[_DETECT * n + m] = t + tr.exp(theta)
        elif kind == _DETECT:
            clock[slot] = INF
            tr.state[m] = _D
            avail = [h for h in range(n) if tr.state[h] == _A]
            picks = rng.choice(len(avail), size=k, replace=False)
            pending = {avail[p] for p in picks if not tr.robot_up[avail[p]]}
            if pending:
                waiting[m] = pending
            else:
                start_write(m)
        elif kind == _REPAIR:
            clock[slot] = INF
            writing[m] = False
            tr.state[m] = _A
            tr.n_avail += 1
            clock[_FAIL * n + m] = t + tr.exp(lam)
        elif kind == _ROBOT_DOWN:
            tr.carrier_failures += 1
            tr.exchanges += tr.budget[m]
            if math.isinf(phi):
                new_robot(m)
            else:
                tr.robot_up[m] = False
                clock[slot] = INF
                clock[_ROBOT_UP * n + m] = t + tr.exp(phi)
                clock[_DETECT * n + m] = INF
                clock[_REPAIR * n + m] = INF
        else:  # _ROBOT_UP
            new_robot(m)
            if tr.state[m] == _F:
                clock[_DETECT * n + m] = t + tr.exp(theta)
            if writing[m]:
                clock[_REPAIR * n + m] = t + tr.exp(mu)
            for w in range(n):
                pending = waiting[w]
                if pending is not None and m in pending:
                    pending.discard(m)
                    if not pending:
                        start_write(w)
        tr.check_unavailable()

    end = min(ttdl, tr.horizon)
    live = 0
    for m in range(n):
        if tr.robot_up[m] and robot_end[m] < INF and tr.budget[m] > 1:
            # exchanges before `end` given the budget-th one lands at robot_end
            frac = (end - tr.robot_start[m]) / (robot_end[m] - tr.robot_start[m])
            live += int(rng.binomial(tr.budget[m] - 1, min(1.0, max(0.0, frac))))
    return tr.finish(ttdl, live)


# ---------------------------------------------------------------------------
# Approximate engine
# ---------------------------------------------------------------------------

def run_trial_approx(config: SimConfig, rng: np.random.Generator) -> TrialOutcome:
    """One trial of the carrier-aware chain with rates frozen between epochs."""
    tr = _Trial(config, rng)
    n, k = tr.n, tr.k
    lam, theta, mu, phi, omega = (
        tr.rates.lam, tr.rates.theta, tr.rates.mu, tr.rates.phi, tr.rates.omega,
    )
    fail_at = [INF] * n
    down_at = [INF] * n
    up_at = [INF] * n

    def new_robot(m: int) -> None:
        tr.budget[m] = sample_sbf(config.weibull, rng)
        tr.robot_start[m] = tr.t
        tr.robot_up[m] = True
        down_at[m] = tr.t + tr.budget[m] / omega if omega > 0 else INF
        up_at[m] = INF

    # detection_rate(1, ...) for one node is theta - det_loss * (1 - beta)
    det_loss = _loss_weight(theta, phi)

    def survivals() -> list[float]:
        if omega == 0.0:
            return [1.0 if up else 0.0 for up in tr.robot_up]
        ages = tr.t - np.array(tr.robot_start)
        beta = carrier_survival_many(tr.budget, omega, ages)
        return np.where(tr.robot_up, beta, 0.0).tolist()

    for m in range(n):
        new_robot(m)
        fail_at[m] = tr.exp(lam)

    ttdl = INF
    while True:
        # carrier-aware service rates, frozen until the next epoch
        failed = [m for m in range(n) if tr.state[m] == _F]
        detected = [m for m in range(n) if tr.state[m] == _D]
        det_rates: list[float] = []
        rep_total = 0.0
        if failed or detected:
            beta = survivals()
            if failed:
                det_rates = [theta - det_loss * (1.0 - beta[m]) for m in failed]
            if detected:
                avail = [m for m in range(n) if tr.state[m] == _A]
                rep_total = repair_rate(
                    len(avail), len(detected), k, tr.t, phi, mu,
                    [beta[m] for m in avail], [beta[m] for m in detected],
                )
        service_rate = math.fsum(det_rates) + rep_total
        service_at = tr.t + tr.exp(service_rate)

        t_fail = min(fail_at)
        t_down = min(down_at)
        t_up = min(up_at)
        t = min(t_fail, t_down, t_up, service_at)
        if t >= tr.horizon:
            break
        tr.t = t

        if t == service_at:
            u = rng.random() * service_rate
            if u < rep_total:
                m = detected[int(rng.integers(len(detected)))]
                tr.state[m] = _A
                tr.n_avail += 1
                fail_at[m] = t + tr.exp(lam)
            else:
                u -= rep_total
                m = failed[-1]
                for cand, r in zip(failed, det_rates):
                    if u < r:
                        m = cand
                        break
                    u -= r
                tr.state[m] = _D
        elif t == t_fail:
            m = fail_at.index(t)
            fail_at[m] = INF
            if tr.node_fails():
                ttdl = t
                break
            tr.state[m] = _F
            tr.n_avail -= 1
        elif t == t_down:
            m = down_at.index(t)
            tr.carrier_failures += 1
            tr.exchanges += tr.budget[m]
            if math.isinf(phi):
                new_robot(m)
            else:
                tr.robot_up[m] = False
                down_at[m] = INF
                up_at[m] = t + tr.exp(phi)
        else:
            m = up_at.index(t)
            new_robot(m)
        tr.check_unavailable()

    end = min(ttdl, tr.horizon)
    live = 0
    for m in range(n):
        if tr.robot_up[m]:
            live += min(tr.budget[m], int(omega * (end - tr.robot_start[m])))
    return tr.finish(ttdl, live)


# ---------------------------------------------------------------------------
# Batches and sweeps
# ---------------------------------------------------------------------------

def run_trial(config: SimConfig, trial: int) -> TrialOutcome:
    rng = trial_rng(config.seed, trial)
    if config.mode == "exact":
        return run_trial_exact(config, rng)
    return run_trial_approx(config, rng)


def _run_range(config: SimConfig, start: int, stop: int) -> list[TrialOutcome]:
    return [run_trial(config, i) for i in range(start, stop)]


def summarize(outcomes: Sequence[TrialOutcome]) -> SimSummary:
    ttdl = np.array([o.time_to_data_loss for o in outcomes])
    ttdu = np.array([o.time_to_first_unavailability for o in outcomes])
    count = len(outcomes)

    def mean_se(x: np.ndarray) -> tuple[float, float]:
        if count < 2:
            return float(x.mean()), 0.0
        return float(x.mean()), float(x.std(ddof=1) / math.sqrt(count))

    mttdl, mttdl_se = mean_se(ttdl)
    mttdu, mttdu_se = mean_se(ttdu)
    censored = sum(o.data_loss_censored for o in outcomes) / count
    return SimSummary(mttdl, mttdl_se, mttdu, mttdu_se, censored, count, list(outcomes))


def run_batch(config: SimConfig, workers: int = 1, chunk: int = 500) -> SimSummary:
    """Run ``config.trials`` independent trials and aggregate them.

    Trial i always draws from the substream (seed, i), and results are
    reduced in trial order, so the summary does not depend on ``workers``.
    """
    if workers <= 1:
        outcomes = _run_range(config, 0, config.trials)
    else:
        bounds = [(s, min(s + chunk, config.trials)) for s in range(0, config.trials, chunk)]
        with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
            parts = pool.map(_run_range, [config] * len(bounds), *zip(*bounds))
            outcomes = [o for part in parts for o in part]
    summary = summarize(outcomes)
    if summary.censored_fraction > CENSOR_WARN_FRACTION:
        log.warning(
            "%.1f%% of trials hit the %.3g h horizon; means are biased low",
            100 * summary.censored_fraction, config.max_sim_hours,
        )
    if summary.unreliable:
        warnings.warn(
            f"censored fraction {summary.censored_fraction:.2f} exceeds "
            f"{CENSOR_UNRELIABLE_FRACTION}; MTTDL/MTTDU estimates are unreliable",
            RuntimeWarning,
            stacklevel=2,
        )
    return summary


SWEEP_AXES = {"exchange_rate": "omega", "carrier_repair_rate": "phi"}


def with_axis(config: SimConfig, axis: str, value: float) -> SimConfig:
    try:
        attr = SWEEP_AXES[axis]
    except KeyError:
        raise ValueError(f"unknown sweep axis {axis!r}; expected one of {sorted(SWEEP_AXES)}")
    return replace(config, rates=replace(config.rates, **{attr: value}))


def sweep(
    config: SimConfig, axis: str, grid: Sequence[float], workers: int = 1
) -> list[tuple[float, SimSummary]]:
    """``run_batch`` at each grid value of the chosen rate, in grid order."""
    grid = [float(v) for v in grid]
    if not grid:
        raise ValueError("sweep grid is empty")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError("sweep grid must be strictly increasing")
    return [(v, run_batch(with_axis(config, axis, v), workers=workers)) for v in grid]


def outcomes_csv(outcomes: Sequence[TrialOutcome]) -> str:
    lines = ["trial,ttdl_hours,ttdu_hours,censored,exchanges,carrier_failures,node_failures"]
    for idx, o in enumerate(outcomes):
        lines.append(
            f"{idx},{o.time_to_data_loss!r},{o.time_to_first_unavailability!r},"
            f"{int(o.data_loss_censored)},{o.total_exchanges},{o.carrier_failures},{o.node_failures}"
        )
    return "\n".join(lines) + "\n"
