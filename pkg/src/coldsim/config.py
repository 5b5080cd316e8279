"""Flat ``key = value`` configuration files and field-data ingestion.

Example::

    # (4,2) code, reference defaults for everything else
    n = 4
    k = 2
    omega_xph = 100
    phi_per_hour = 1/48

Rates accept fractions (``1/24``) and ``inf``. Unknown keys are rejected.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

from coldsim.carrier import RateParams, WeibullParams
from coldsim.hard_error import HardErrorParams
from coldsim.simulation import DEFAULT_HORIZON_HOURS, SWEEP_AXES, SimConfig


class ConfigError(ValueError):
    def __init__(self, message: str, key: str | None = None, line: int | None = None):
        where = []
        if key is not None:
            where.append(f"key {key!r}")
        if line is not None:
            where.append(f"line {line}")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(prefix + message)
        self.key = key
        self.line = line


class IngestError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        super().__init__(f"line {line}: {message}" if line is not None else message)
        self.line = line


def _number(text: str) -> float:
    text = text.strip()
    if "/" in text:
        num, den = text.split("/", 1)
        return float(num) / float(den)
    return float(text)


def _integer(text: str) -> int:
    value = _number(text)
    if not value.is_integer():
        raise ValueError(f"expected an integer, got {text!r}")
    return int(value)


def _word(choices: tuple[str, ...]) -> Callable[[str], str]:
    def parse(text: str) -> str:
        text = text.strip().strip('"').strip("'")
        if text not in choices:
            raise ValueError(f"expected one of {', '.join(choices)}, got {text!r}")
        return text

    return parse


def _text(text: str) -> str:
    return text.strip().strip('"').strip("'")


def _grid(text: str) -> tuple[float, ...]:
    return tuple(_number(v) for v in text.split(",") if v.strip())


# key -> (parser, default). Defaults are the reference simulation parameters;
# phi and omega are not fixed there and default to 1/48 per hour and 10 xph.
SCHEMA: dict[str, tuple[Callable[[str], object], object]] = {
    "n": (_integer, None),
    "k": (_integer, None),
    "lambda_per_hour": (_number, 1.0 / 50000),
    "mu_per_hour": (_number, 1.0 / 24),
    "theta_per_hour": (_number, 1.0 / 8760),
    "phi_per_hour": (_number, 1.0 / 48),
    "omega_xph": (_number, 10.0),
    "ucer": (_number, 1e-19),
    "ucer_unit": (_word(("bit", "byte")), "bit"),
    "tape_capacity_bytes": (_number, 6e12),
    "kappa": (_number, 0.001),
    "weibull_shape": (_number, 0.67),
    "weibull_scale": (_number, 525985.0),
    "mode": (_word(("exact", "approx")), "exact"),
    "trials": (_integer, 10000),
    "max_sim_hours": (_number, DEFAULT_HORIZON_HOURS),
    "seed": (_integer, 0),
    "trials_csv": (_text, None),
    "output": (_text, None),
    "sweep_axis": (_word(tuple(SWEEP_AXES)), None),
    "sweep_grid": (_grid, None),
}

_LINE = re.compile(r"^\s*([A-Za-z_][A-Za-z0-9_]*)\s*[=:]\s*(.*?)\s*$")


@dataclass(frozen=True)
class ConfigFile:
    sim: SimConfig
    trials_csv: str | None = None
    output: str | None = None
    sweep_axis: str | None = None
    sweep_grid: tuple[float, ...] = field(default=())


def parse_config_text(text: str) -> ConfigFile:
    values: dict[str, object] = {}
    lines: dict[str, int] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        body = raw.split("#", 1)[0].strip()
        if not body:
            continue
        match = _LINE.match(body)
        if not match:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", line=lineno)
        key, value = match.group(1), match.group(2)
        if key not in SCHEMA:
            raise ConfigError("unknown key", key=key, line=lineno)
        if key in values:
            raise ConfigError("duplicate key", key=key, line=lineno)
        parser = SCHEMA[key][0]
        try:
            values[key] = parser(value)
        except (ValueError, ZeroDivisionError) as exc:
            raise ConfigError(f"bad value {value!r} ({exc})", key=key, line=lineno) from None
        lines[key] = lineno
    return _build(values, lines)


def _build(values: dict[str, object], lines: dict[str, int]) -> ConfigFile:
    merged = {key: values.get(key, default) for key, (_, default) in SCHEMA.items()}
    for key in ("n", "k"):
        if merged[key] is None:
            raise ConfigError("required key is missing", key=key)

    def check(key: str, ok: bool, message: str) -> None:
        if not ok:
            raise ConfigError(message, key=key, line=lines.get(key))

    for key in ("lambda_per_hour", "mu_per_hour", "theta_per_hour"):
        value = merged[key]
        check(key, value > 0 and math.isfinite(value), "must be a positive finite rate")
    check("phi_per_hour", merged["phi_per_hour"] >= 0, "must be >= 0 (inf allowed)")
    check("omega_xph", merged["omega_xph"] >= 0 and math.isfinite(merged["omega_xph"]),
          "must be finite and >= 0")
    check("ucer", 0 <= merged["ucer"] < 1, "must lie in [0, 1)")
    check("tape_capacity_bytes", merged["tape_capacity_bytes"] > 0, "must be positive")
    check("kappa", 0 <= merged["kappa"] < 1, "must lie in [0, 1)")
    check("weibull_shape", merged["weibull_shape"] > 0, "must be positive")
    check("weibull_scale", merged["weibull_scale"] > 0, "must be positive")
    check("k", 1 <= merged["k"] <= merged["n"], "need 1 <= k <= n")
    check("trials", merged["trials"] >= 1, "must be >= 1")
    check("max_sim_hours", merged["max_sim_hours"] > 0, "must be positive")
    check("seed", 0 <= merged["seed"] < 2**64, "must be an unsigned 64-bit integer")
    grid = merged["sweep_grid"] or ()
    check("sweep_grid", all(b > a for a, b in zip(grid, grid[1:])), "must be strictly increasing")

    sim = SimConfig(
        n=merged["n"],
        k=merged["k"],
        rates=RateParams(
            lam=merged["lambda_per_hour"],
            mu=merged["mu_per_hour"],
            theta=merged["theta_per_hour"],
            phi=merged["phi_per_hour"],
            omega=merged["omega_xph"],
        ),
        hard_error=HardErrorParams(
            ucer=merged["ucer"],
            capacity_bytes=merged["tape_capacity_bytes"],
            kappa=merged["kappa"],
            ucer_unit=merged["ucer_unit"],
        ),
        weibull=WeibullParams(merged["weibull_shape"], merged["weibull_scale"]),
        mode=merged["mode"],
        trials=merged["trials"],
        max_sim_hours=merged["max_sim_hours"],
        seed=merged["seed"],
    )
    return ConfigFile(
        sim=sim,
        trials_csv=merged["trials_csv"],
        output=merged["output"],
        sweep_axis=merged["sweep_axis"],
        sweep_grid=tuple(grid),
    )


def parse_config(path: str | Path) -> ConfigFile:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc.strerror}") from None
    return parse_config_text(text)


def dump_config(cfg: ConfigFile) -> str:
    """Serialize so that ``parse_config_text(dump_config(c)) == c``."""
    sim = cfg.sim
    r, h, w = sim.rates, sim.hard_error, sim.weibull
    entries = [
        ("n", sim.n),
        ("k", sim.k),
        ("lambda_per_hour", repr(r.lam)),
        ("mu_per_hour", repr(r.mu)),
        ("theta_per_hour", repr(r.theta)),
        ("phi_per_hour", repr(r.phi)),
        ("omega_xph", repr(r.omega)),
        ("ucer", repr(h.ucer)),
        ("ucer_unit", h.ucer_unit),
        ("tape_capacity_bytes", repr(h.capacity_bytes)),
        ("kappa", repr(h.kappa)),
        ("weibull_shape", repr(w.shape)),
        ("weibull_scale", repr(w.scale)),
        ("mode", sim.mode),
        ("trials", sim.trials),
        ("max_sim_hours", repr(sim.max_sim_hours)),
        ("seed", sim.seed),
    ]
    if cfg.trials_csv is not None:
        entries.append(("trials_csv", cfg.trials_csv))
    if cfg.output is not None:
        entries.append(("output", cfg.output))
    if cfg.sweep_axis is not None:
        entries.append(("sweep_axis", cfg.sweep_axis))
    if cfg.sweep_grid:
        entries.append(("sweep_grid", ",".join(repr(v) for v in cfg.sweep_grid)))
    return "".join(f"{key} = {value}\n" for key, value in entries)


@dataclass(frozen=True)
class ExchangeLog:
    values: list[float]

    @property
    def count(self) -> int:
        return len(self.values)

    @property
    def minimum(self) -> float:
        return min(self.values)

    @property
    def maximum(self) -> float:
        return max(self.values)

    @property
    def mean(self) -> float:
        return math.fsum(self.values) / len(self.values)


def ingest_exchange_log(path: str | Path) -> ExchangeLog:
    """Read exchanges-before-failure counts: one number per line (first CSV
    column), with an optional non-numeric header line."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise IngestError(f"cannot read {path}: {exc.strerror}") from None
    values: list[float] = []
    seen_data = False
    for lineno, raw in enumerate(text.splitlines(), start=1):
        cell = raw.split(",", 1)[0].strip()
        if not cell:
            continue
        try:
            value = float(cell)
        except ValueError:
            if not seen_data and not values and lineno == _first_nonblank(text):
                continue  # header
            raise IngestError(f"not a number: {cell!r}", line=lineno) from None
        seen_data = True
        if not (value > 0 and math.isfinite(value)):
            raise IngestError(f"exchange count must be positive, got {cell!r}", line=lineno)
        values.append(value)
    if not values:
        raise IngestError(f"{path} contains no exchange counts")
    return ExchangeLog(values)


def _first_nonblank(text: str) -> int:
    for lineno, raw in enumerate(text.splitlines(), start=1):
        if raw.strip():
            return lineno
    return 0


SWEEP_COLUMNS = (
    "axis_value",
    "mttdl_hours",
    "mttdl_stderr",
    "mttdu_hours",
    "mttdu_stderr",
    "censored_fraction",
    "lower_bound_hours",
    "upper_bound_hours",
)


def emit_sweep_csv(results, path: str | Path, lower: float, upper: float) -> None:
    """Write one row per sweep point; the analytic bounds repeat on every row."""
    if not results:
        raise ValueError("no sweep results to write")
    rows = [",".join(SWEEP_COLUMNS)]
    for value, s in results:
        cells = (value, s.mttdl, s.mttdl_stderr, s.mttdu, s.mttdu_stderr,
                 s.censored_fraction, lower, upper)
        rows.append(",".join(repr(float(c)) for c in cells))
    try:
        Path(path).write_text("\n".join(rows) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write sweep CSV to {path}: {exc.strerror}") from exc


def read_sweep_csv(path: str | Path) -> list[dict[str, float]]:
    lines = Path(path).read_text().splitlines()
    header = lines[0].split(",")
    return [dict(zip(header, map(float, line.split(",")))) for line in lines[1:] if line]
