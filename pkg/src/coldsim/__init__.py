"""Reliability and availability model for carrier-assisted cold data storage."""

from coldsim.analytics import (
    build_q,
    build_q_timed,
    fundamental_matrix,
    lower_bound,
    q_to_p,
    upper_bound,
)
from coldsim.carrier import (
    RateParams,
    WeibullParams,
    carrier_survival,
    detection_rate,
    exp_tail_rate,
    fit_weibull,
    mean_exchanges,
    repair_rate,
    sample_sbf,
)
from coldsim.hard_error import HardErrorParams, delta, epsilon_from_ucer
from coldsim.simulation import SimConfig, SimSummary, TrialOutcome, run_batch, sweep
from coldsim.states import StateSpace, SystemState, count_bounds, count_states, enumerate_states

__version__ = "0.1.0"
